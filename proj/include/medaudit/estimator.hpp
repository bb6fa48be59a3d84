#pragma once

#include "medaudit/dag.hpp"
#include "medaudit/dataset.hpp"
#include "medaudit/json.hpp"
#include "medaudit/nuisance.hpp"
#include "medaudit/sensitivity.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>

namespace medaudit {

struct ClipDiagnostics {
    std::size_t propensity_clipped = 0;  // units whose pi hit a clip bound
    std::size_t ratio_clipped = 0;       // treated units whose ratio hit a clip bound
    std::size_t weights = 0;             // propensity weights + ratio weights evaluated
    double clip_fraction() const { return weights == 0 ? 0.0 : double(propensity_clipped + ratio_clipped) / double(weights); }
    bool positivity_warning() const { return clip_fraction() > 0.01; }
};

// Per-unit pieces shared by the plug-in, AIPW, and weighting estimators.
struct UnitEvaluation {
    Eigen::VectorXd theta_1_g1, theta_1_g0, theta_0_g0;  // Monte Carlo integrals of mu
    Eigen::VectorXd aug_1_g1, aug_1_g0, aug_0_g0;        // residual augmentation terms
    Eigen::VectorXd ipw_1_g1, ipw_1_g0, ipw_0_g0;        // weighting-only terms
    ClipDiagnostics clips;
};

struct EvaluationOptions {
    std::size_t draws = 25;
    std::uint64_t seed = 0;
    double probability_clip = 0.01;
    unsigned threads = 1;
};

// Scores every unit with its own fold's models. Throws InvalidArgument if a
// unit appears in the training set of the models that score it.
UnitEvaluation evaluate_units(const AuditDataset& dataset, const NuisanceSet& nuisances,
                              const FoldAssignment& folds, const EvaluationOptions& options);

struct PotentialOutcomeMeans {
    // Means clamped to [0, 1]; the raw_* values keep the unclamped averages.
    double psi_1_g1 = 0, psi_1_g0 = 0, psi_0_g0 = 0;
    double raw_1_g1 = 0, raw_1_g0 = 0, raw_0_g0 = 0;
    Eigen::VectorXd unit_1_g1, unit_1_g0, unit_0_g0;  // per-unit contributions
    ClipDiagnostics clips;

    bool clamped() const { return psi_1_g1 != raw_1_g1 || psi_1_g0 != raw_1_g0 || psi_0_g0 != raw_0_g0; }
    double ide() const { return psi_1_g0 - psi_0_g0; }
    double iie() const { return psi_1_g1 - psi_1_g0; }
    double total() const { return psi_1_g1 - psi_0_g0; }
};

enum class MeansKind { plug_in, aipw, weighting };

PotentialOutcomeMeans combine(const UnitEvaluation& units, MeansKind kind);

PotentialOutcomeMeans plug_in_means(const AuditDataset& dataset, const NuisanceSet& nuisances,
                                    const FoldAssignment& folds, std::size_t d_draws, std::uint64_t seed = 0,
                                    unsigned threads = 1);
PotentialOutcomeMeans aipw_means(const AuditDataset& dataset, const NuisanceSet& nuisances,
                                 const FoldAssignment& folds, std::size_t d_draws, std::uint64_t seed = 0,
                                 unsigned threads = 1);
// Inverse-probability weighting without an outcome model (a comparison baseline).
PotentialOutcomeMeans weighting_means(const AuditDataset& dataset, const NuisanceSet& nuisances,
                                      const FoldAssignment& folds, std::uint64_t seed = 0, unsigned threads = 1);

struct WaldInterval {
    double lo = 0, hi = 0, se = 0;
};

// se = sqrt(mean((psi - mean psi)^2) / n); interval = estimate +/- z se.
WaldInterval wald_ci(double estimate, const Eigen::VectorXd& influence_values, double level = 0.95);
double wald_p_value(double estimate, double se);

struct EstimatorConfig {
    int k = 5;
    std::size_t draws = 25;
    NuisanceConfig nuisance;
    std::uint64_t seed = 20240101;
    double level = 0.95;
    unsigned threads = 1;
    bool monotone_asserted = false;
};

Json to_json(const EstimatorConfig& config);
EstimatorConfig estimator_config_from_json(const Json& j, EstimatorConfig defaults = {});

struct EffectSummary {
    double estimate = 0, se = 0, lo = 0, hi = 0, p_value = 1;
};

struct MediationEstimate {
    EffectSummary ide, iie, total;
    double total_contrast = 0;  // ide + iie
    double raw_gap = 0;         // mean(Y | A=1) - mean(Y | A=0)
    PotentialOutcomeMeans means;
    Eigen::VectorXd influence_ide, influence_iie;
    std::size_t n_used = 0;
    std::vector<std::size_t> fold_sizes;
    std::uint64_t fold_seed = 0, draw_seed = 0;
    EstimatorConfig config;
    AssumptionReport assumptions;
    std::optional<SensitivityResult> sensitivity;  // empty when the RR conversion is undefined
    std::string sensitivity_note;
    std::string bounds;
};

// Folds, per-fold nuisances, per-unit scoring, aggregation, Wald intervals, E-values.
MediationEstimate cross_fit_estimate(const AuditDataset& dataset, const CreditDag& dag, const EstimatorConfig& config);

Json to_json(const MediationEstimate& estimate, bool include_influence = false);

}  // namespace medaudit
