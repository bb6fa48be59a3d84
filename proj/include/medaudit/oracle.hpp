#pragma once

#include "medaudit/dataset.hpp"
#include "medaudit/json.hpp"
#include "medaudit/nuisance.hpp"

#include <cstdint>
#include <vector>

namespace medaudit {

// Fully enumerable discrete SCM: W -> A, (A, W, U) -> M, (A, M, W, U) -> Y,
// with U independent of (W, A). Mediator states are mixed-radix over the
// components (component 0 varies fastest). The emitted covariate is the W
// index and each mediator component is its level index.
struct ScmSpec {
    int w_card = 1;
    int u_card = 1;
    std::vector<int> m_card;
    std::vector<double> p_w;   // [w]
    std::vector<double> p_u;   // [u]
    std::vector<double> p_a1;  // [w]  P(A=1 | w)
    std::vector<double> p_m;   // [((a * W + w) * U + u) * S + s]  P(M = s | a, w, u)
    std::vector<double> p_y1;  // [((a * S + s) * W + w) * U + u]  P(Y=1 | a, s, w, u)
    bool monotone_in_m = false;
    bool stochastic_dominance = false;

    std::size_t m_states() const;
    std::vector<int> decode_m(std::size_t s) const;
    std::size_t encode_m(const std::vector<int>& levels) const;

    double pm(int a, int w, int u, std::size_t s) const {
        return p_m[((static_cast<std::size_t>(a) * w_card + w) * u_card + u) * m_states() + s];
    }
    double py(int a, std::size_t s, int w, int u) const {
        return p_y1[((static_cast<std::size_t>(a) * m_states() + s) * w_card + w) * u_card + u];
    }
    // G_a(s | w) = sum_u P(s | a, w, u) P(u)
    double g(int a, int w, std::size_t s) const;
};

// Throws InvalidArgument when a table is mis-sized, has entries outside
// [0, 1], or a conditional row does not sum to 1 within 1e-12.
void check_scm(const ScmSpec& scm);

// Exhaustive check that P(Y=1 | a, m, w, u) is non-decreasing in each component.
bool monotone_in_m_holds(const ScmSpec& scm);
// Exhaustive check that G_1( . | w) dominates G_0( . | w) on every up-set of the
// component-wise order (exact; capped at 20 mediator states).
bool stochastic_dominance_holds(const ScmSpec& scm);

struct OracleEffects {
    double te = 0, nde = 0, nie = 0, ide = 0, iie = 0;
    // E[Y(a, M ~ G_g)]
    double y1_g1 = 0, y1_g0 = 0, y0_g0 = 0;
    // E[Y(a, M(a'))]
    double y1_m1 = 0, y1_m0 = 0, y0_m0 = 0;
    double total_contrast() const { return y1_g1 - y0_g0; }
};

// Ground truth by enumeration over (W, U, M). Y noise is independent across
// worlds, so natural effects only need per-(w, u) marginals of M(a'); the
// cross-world coupling of M(0) and M(1) does not enter these means.
OracleEffects oracle_effects(const ScmSpec& scm);

// Observable law P(W, A, M, Y) with U summed out: mu(a, s, w) and F(s | a, w).
struct ObservableLaw {
    const ScmSpec* scm = nullptr;
    std::vector<double> p_wam;  // [((w * 2 + a) * S + s)]  P(w, a, s)
    std::vector<double> mu;     // [((a * S + s) * W + w)]  P(Y=1 | a, s, w); 0 where P(w, a, s) = 0
    double mu_at(int a, std::size_t s, int w) const;
    double f(int a, int w, std::size_t s) const;  // P(M = s | A = a, W = w)
};

ObservableLaw observable_law(const ScmSpec& scm);

struct IdentifiedEffects {
    double ide = 0, iie = 0;
    double y1_g1 = 0, y1_g0 = 0, y0_g0 = 0;
};

// Identification formulas evaluated on the observable law alone.
IdentifiedEffects identified_effects(const ObservableLaw& law);

struct ScmCardinalities {
    int w = 2;
    int u = 2;
    std::vector<int> m{3, 3};
};

// Unrestricted random tables with U -> M and U -> Y.
ScmSpec random_scm(std::uint64_t seed, const ScmCardinalities& card = {});

// Random SCM with U -> M and U -> Y in which Y is non-decreasing in M and
// G_1 dominates G_0. The treated arm's mediator law ignores U, while the
// control arm mixes in a U-ordered component; this keeps the interventional
// means identified and their natural-effect gaps strictly positive.
// Requires u >= 2.
ScmSpec random_monotone_scm(std::uint64_t seed, const ScmCardinalities& card = {});

// Fixed simulation preset: binary W, three-level U, two 4-level mediators.
// mu, pi and both density-ratio classifiers are exactly logistic in their
// features, so logistic nuisances are well-specified.
ScmSpec monotone_small_scm();

// Preset lookup by name ("monotone-small"); throws InvalidArgument otherwise.
ScmSpec scm_preset(const std::string& name);

// Ancestral sampling; U is drawn but not emitted.
AuditDataset generate_dataset(const ScmSpec& scm, std::size_t n, std::uint64_t seed);

Json to_json(const ScmSpec& scm);
ScmSpec scm_from_json(const Json& j);
Json to_json(const OracleEffects& effects);

// Nuisances replaced by their exact population values (mu, pi, r and G_a
// from the observable law). Each fold's entry records its complement as the
// training set so cross-fit bookkeeping still applies. Datasets must come from
// generate_dataset on the same SCM.
NuisanceSet population_nuisances(const ScmSpec& scm, const FoldAssignment& folds,
                                 const NuisanceConfig& config = {});

// FNV-1a over every table entry's bit pattern and the cardinalities.
std::uint64_t table_hash(const ScmSpec& scm);

}  // namespace medaudit
