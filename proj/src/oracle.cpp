#include "medaudit/oracle.hpp"

#include "medaudit/error.hpp"
#include "medaudit/logistic.hpp"
#include "medaudit/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <numeric>

namespace medaudit {

std::size_t ScmSpec::m_states() const {
    std::size_t s = 1;
    for (int c : m_card) s *= static_cast<std::size_t>(c);
    return s;
}

std::vector<int> ScmSpec::decode_m(std::size_t s) const {
    std::vector<int> out(m_card.size());
    for (std::size_t j = 0; j < m_card.size(); ++j) {
        out[j] = static_cast<int>(s % static_cast<std::size_t>(m_card[j]));
        s /= static_cast<std::size_t>(m_card[j]);
    }
    return out;
}

std::size_t ScmSpec::encode_m(const std::vector<int>& levels) const {
    std::size_t s = 0;
    for (std::size_t j = m_card.size(); j-- > 0;) s = s * static_cast<std::size_t>(m_card[j]) + static_cast<std::size_t>(levels[j]);
    return s;
}

double ScmSpec::g(int a, int w, std::size_t s) const {
    double total = 0;
    for (int u = 0; u < u_card; ++u) total += pm(a, w, u, s) * p_u[static_cast<std::size_t>(u)];
    return total;
}

void check_scm(const ScmSpec& scm) {
    auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidArgument, "invalid SCM: " + what); };
    if (scm.w_card < 1 || scm.u_card < 1 || scm.m_card.empty()) fail("cardinalities must be positive");
    for (int c : scm.m_card)
        if (c < 1) fail("mediator cardinalities must be positive");
    const std::size_t S = scm.m_states(), W = static_cast<std::size_t>(scm.w_card), U = static_cast<std::size_t>(scm.u_card);
    if (scm.p_w.size() != W || scm.p_u.size() != U || scm.p_a1.size() != W || scm.p_m.size() != 2 * W * U * S ||
        scm.p_y1.size() != 2 * S * W * U)
        fail("table sizes do not match cardinalities");
    auto in_unit = [&](const std::vector<double>& t, const char* name) {
        for (double v : t)
            if (!(v >= 0.0 && v <= 1.0)) fail(std::string(name) + " has an entry outside [0, 1]");
    };
    in_unit(scm.p_w, "P(W)");
    in_unit(scm.p_u, "P(U)");
    in_unit(scm.p_a1, "P(A=1|W)");
    in_unit(scm.p_m, "P(M|A,W,U)");
    in_unit(scm.p_y1, "P(Y=1|A,M,W,U)");
    auto sums_to_one = [&](const double* row, std::size_t len, const char* name) {
        double s = 0;
        for (std::size_t i = 0; i < len; ++i) s += row[i];
        if (std::abs(s - 1.0) > 1e-12) fail(std::string(name) + " row does not sum to 1");
    };
    sums_to_one(scm.p_w.data(), W, "P(W)");
    sums_to_one(scm.p_u.data(), U, "P(U)");
    for (std::size_t r = 0; r < 2 * W * U; ++r) sums_to_one(scm.p_m.data() + r * S, S, "P(M|A,W,U)");
}

bool monotone_in_m_holds(const ScmSpec& scm) {
    const std::size_t S = scm.m_states();
    for (int a = 0; a < 2; ++a)
        for (int w = 0; w < scm.w_card; ++w)
            for (int u = 0; u < scm.u_card; ++u)
                for (std::size_t s = 0; s < S; ++s) {
                    auto levels = scm.decode_m(s);
                    for (std::size_t j = 0; j < levels.size(); ++j) {
                        if (levels[j] + 1 >= scm.m_card[j]) continue;
                        ++levels[j];
                        const std::size_t up = scm.encode_m(levels);
                        --levels[j];
                        if (scm.py(a, up, w, u) < scm.py(a, s, w, u)) return false;
                    }
                }
    return true;
}

bool stochastic_dominance_holds(const ScmSpec& scm) {
    const std::size_t S = scm.m_states();
    if (S > 20) throw Error(ErrorKind::InvalidArgument, "up-set enumeration is capped at 20 mediator states");
    // successor masks: states reached by raising one component by one level
    std::vector<std::uint32_t> succ(S, 0);
    for (std::size_t s = 0; s < S; ++s) {
        auto levels = scm.decode_m(s);
        for (std::size_t j = 0; j < levels.size(); ++j) {
            if (levels[j] + 1 >= scm.m_card[j]) continue;
            ++levels[j];
            succ[s] |= 1u << scm.encode_m(levels);
            --levels[j];
        }
    }
    for (int w = 0; w < scm.w_card; ++w) {
        std::vector<double> g0(S), g1(S);
        for (std::size_t s = 0; s < S; ++s) {
            g0[s] = scm.g(0, w, s);
            g1[s] = scm.g(1, w, s);
        }
        for (std::uint32_t set = 1; set < (1u << S); ++set) {
            bool upper = true;
            for (std::size_t s = 0; s < S && upper; ++s)
                if ((set >> s & 1u) && (succ[s] & ~set)) upper = false;
            if (!upper) continue;
            double p0 = 0, p1 = 0;
            for (std::size_t s = 0; s < S; ++s)
                if (set >> s & 1u) {
                    p0 += g0[s];
                    p1 += g1[s];
                }
            if (p1 < p0 - 1e-12) return false;
        }
    }
    return true;
}

OracleEffects oracle_effects(const ScmSpec& scm) {
    const std::size_t S = scm.m_states();
    // E[Y(a, M ~ G_g)] and E[Y(a, M(a'))]
    double ig[2][2] = {{0, 0}, {0, 0}};
    double nat[2][2] = {{0, 0}, {0, 0}};
    for (int w = 0; w < scm.w_card; ++w) {
        const double pw = scm.p_w[static_cast<std::size_t>(w)];
        for (int u = 0; u < scm.u_card; ++u) {
            const double pwu = pw * scm.p_u[static_cast<std::size_t>(u)];
            for (std::size_t s = 0; s < S; ++s) {
                for (int a = 0; a < 2; ++a) {
                    const double y = scm.py(a, s, w, u);
                    for (int g = 0; g < 2; ++g) {
                        ig[a][g] += pwu * scm.g(g, w, s) * y;
                        nat[a][g] += pwu * scm.pm(g, w, u, s) * y;
                    }
                }
            }
        }
    }
    OracleEffects e;
    e.y1_g1 = ig[1][1];
    e.y1_g0 = ig[1][0];
    e.y0_g0 = ig[0][0];
    e.y1_m1 = nat[1][1];
    e.y1_m0 = nat[1][0];
    e.y0_m0 = nat[0][0];
    e.ide = e.y1_g0 - e.y0_g0;
    e.iie = e.y1_g1 - e.y1_g0;
    e.nde = e.y1_m0 - e.y0_m0;
    e.nie = e.y1_m1 - e.y1_m0;
    e.te = e.y1_m1 - e.y0_m0;
    return e;
}

double ObservableLaw::mu_at(int a, std::size_t s, int w) const {
    return mu[(static_cast<std::size_t>(a) * scm->m_states() + s) * static_cast<std::size_t>(scm->w_card) +
              static_cast<std::size_t>(w)];
}

double ObservableLaw::f(int a, int w, std::size_t s) const {
    const std::size_t S = scm->m_states();
    const std::size_t row = (static_cast<std::size_t>(w) * 2 + static_cast<std::size_t>(a)) * S;
    double total = 0;
    for (std::size_t t = 0; t < S; ++t) total += p_wam[row + t];
    return total > 0 ? p_wam[row + s] / total : 0.0;
}

ObservableLaw observable_law(const ScmSpec& scm) {
    const std::size_t S = scm.m_states(), W = static_cast<std::size_t>(scm.w_card);
    ObservableLaw law;
    law.scm = &scm;
    law.p_wam.assign(W * 2 * S, 0.0);
    law.mu.assign(2 * S * W, 0.0);
    for (int w = 0; w < scm.w_card; ++w)
        for (int a = 0; a < 2; ++a) {
            const double pa = a ? scm.p_a1[static_cast<std::size_t>(w)] : 1 - scm.p_a1[static_cast<std::size_t>(w)];
            const double pwa = scm.p_w[static_cast<std::size_t>(w)] * pa;
            for (std::size_t s = 0; s < S; ++s) {
                double joint = 0, joint_y = 0;
                for (int u = 0; u < scm.u_card; ++u) {
                    const double q = pwa * scm.p_u[static_cast<std::size_t>(u)] * scm.pm(a, w, u, s);
                    joint += q;
                    joint_y += q * scm.py(a, s, w, u);
                }
                law.p_wam[(static_cast<std::size_t>(w) * 2 + static_cast<std::size_t>(a)) * S + s] = joint;
                law.mu[(static_cast<std::size_t>(a) * S + s) * W + static_cast<std::size_t>(w)] =
                    joint > 0 ? joint_y / joint : 0.0;
            }
        }
    return law;
}

IdentifiedEffects identified_effects(const ObservableLaw& law) {
    const ScmSpec& scm = *law.scm;
    const std::size_t S = scm.m_states();
    IdentifiedEffects e;
    for (int w = 0; w < scm.w_card; ++w) {
        double pw = 0;
        for (int a = 0; a < 2; ++a)
            for (std::size_t s = 0; s < S; ++s)
                pw += law.p_wam[(static_cast<std::size_t>(w) * 2 + static_cast<std::size_t>(a)) * S + s];
        for (std::size_t s = 0; s < S; ++s) {
            const double f0 = law.f(0, w, s), f1 = law.f(1, w, s);
            e.y1_g1 += pw * f1 * law.mu_at(1, s, w);
            e.y1_g0 += pw * f0 * law.mu_at(1, s, w);
            e.y0_g0 += pw * f0 * law.mu_at(0, s, w);
        }
    }
    e.ide = e.y1_g0 - e.y0_g0;
    e.iie = e.y1_g1 - e.y1_g0;
    return e;
}

namespace {

std::vector<double> random_simplex(Rng& rng, std::size_t k, double floor = 0.05) {
    std::vector<double> v(k);
    for (auto& x : v) x = floor + rng.exponential();
    const double s = std::accumulate(v.begin(), v.end(), 0.0);
    for (auto& x : v) x /= s;
    return v;
}

void check_cardinalities(const ScmCardinalities& c) {
    if (c.w < 1 || c.w > 5 || c.u < 1 || c.u > 5 || c.m.empty())
        throw Error(ErrorKind::InvalidArgument, "cardinalities must lie in [1, 5]");
    for (int v : c.m)
        if (v < 1 || v > 5) throw Error(ErrorKind::InvalidArgument, "cardinalities must lie in [1, 5]");
}

ScmSpec shell(const ScmCardinalities& c) {
    ScmSpec scm;
    scm.w_card = c.w;
    scm.u_card = c.u;
    scm.m_card = c.m;
    const std::size_t S = scm.m_states(), W = static_cast<std::size_t>(c.w), U = static_cast<std::size_t>(c.u);
    scm.p_m.assign(2 * W * U * S, 0.0);
    scm.p_y1.assign(2 * S * W * U, 0.0);
    return scm;
}

double& pm_ref(ScmSpec& scm, int a, int w, int u, std::size_t s) {
    return scm.p_m[((static_cast<std::size_t>(a) * scm.w_card + w) * scm.u_card + u) * scm.m_states() + s];
}

double& py_ref(ScmSpec& scm, int a, std::size_t s, int w, int u) {
    return scm.p_y1[((static_cast<std::size_t>(a) * scm.m_states() + s) * scm.w_card + w) * scm.u_card + u];
}

// Renormalize exactly so the row sums to 1 in floating point as closely as possible.
void normalize(double* row, std::size_t len) {
    double s = 0;
    for (std::size_t i = 0; i < len; ++i) s += row[i];
    for (std::size_t i = 0; i < len; ++i) row[i] /= s;
}

std::vector<double> cdf_of(const std::vector<double>& pmf) {
    std::vector<double> c(pmf.size());
    std::partial_sum(pmf.begin(), pmf.end(), c.begin());
    c.back() = 1.0;
    return c;
}

std::vector<double> pmf_of(const std::vector<double>& cdf) {
    std::vector<double> p(cdf.size());
    for (std::size_t l = 0; l < cdf.size(); ++l) p[l] = cdf[l] - (l ? cdf[l - 1] : 0.0);
    return p;
}

}  // namespace

ScmSpec random_scm(std::uint64_t seed, const ScmCardinalities& card) {
    check_cardinalities(card);
    Rng rng(derive_seed(seed, 0x5c3));
    ScmSpec scm = shell(card);
    const std::size_t S = scm.m_states();
    scm.p_w = random_simplex(rng, static_cast<std::size_t>(card.w));
    scm.p_u = random_simplex(rng, static_cast<std::size_t>(card.u));
    for (int w = 0; w < card.w; ++w) scm.p_a1.push_back(rng.uniform(0.2, 0.8));
    for (int a = 0; a < 2; ++a)
        for (int w = 0; w < card.w; ++w)
            for (int u = 0; u < card.u; ++u) {
                const auto row = random_simplex(rng, S);
                for (std::size_t s = 0; s < S; ++s) pm_ref(scm, a, w, u, s) = row[s];
            }
    for (auto& v : scm.p_y1) v = rng.uniform(0.05, 0.95);
    scm.monotone_in_m = monotone_in_m_holds(scm);
    scm.stochastic_dominance = S <= 20 && stochastic_dominance_holds(scm);
    return scm;
}

ScmSpec random_monotone_scm(std::uint64_t seed, const ScmCardinalities& card) {
    check_cardinalities(card);
    if (card.u < 2) throw Error(ErrorKind::InvalidArgument, "the monotone family needs at least two U states");
    Rng rng(derive_seed(seed, 0x3a7));
    ScmSpec scm = shell(card);
    const std::size_t S = scm.m_states();
    const std::size_t J = card.m.size();
    scm.p_w = random_simplex(rng, static_cast<std::size_t>(card.w));
    scm.p_u = random_simplex(rng, static_cast<std::size_t>(card.u));
    for (int w = 0; w < card.w; ++w) scm.p_a1.push_back(rng.uniform(0.2, 0.8));

    // f(m) = sum_j f_j(m_j): strictly increasing steps, total range [0, 1].
    std::vector<std::vector<double>> f(J);
    double f_total = 0;
    for (std::size_t j = 0; j < J; ++j) {
        f[j].assign(static_cast<std::size_t>(card.m[j]), 0.0);
        for (int l = 1; l < card.m[j]; ++l) f[j][static_cast<std::size_t>(l)] = f[j][static_cast<std::size_t>(l - 1)] + 0.1 + rng.uniform();
        f_total += f[j].back();
    }
    if (f_total > 0)
        for (auto& fj : f)
            for (auto& v : fj) v /= f_total;
    auto f_of = [&](std::size_t s) {
        const auto levels = scm.decode_m(s);
        double v = 0;
        for (std::size_t j = 0; j < J; ++j) v += f[j][static_cast<std::size_t>(levels[j])];
        return v;
    };

    std::vector<double> gu(static_cast<std::size_t>(card.u));
    for (auto& v : gu) v = rng.uniform();
    std::sort(gu.begin(), gu.end());
    for (std::size_t u = 1; u < gu.size(); ++u)
        if (gu[u] <= gu[u - 1]) gu[u] = gu[u - 1] + 1e-3;
    const double s_coef = rng.uniform(0.1, 0.35);
    const double t_coef = rng.uniform(0.05, 0.3);
    const double kappa = rng.uniform(0.3, 0.8);

    for (int w = 0; w < card.w; ++w) {
        std::vector<std::vector<double>> b0(J), b1(J);
        std::vector<std::vector<std::vector<double>>> k(J);  // [j][u][l]
        for (std::size_t j = 0; j < J; ++j) {
            const auto L = static_cast<std::size_t>(card.m[j]);
            const auto b0_cdf = cdf_of(random_simplex(rng, L));
            std::vector<std::vector<double>> k_cdf(static_cast<std::size_t>(card.u));
            for (auto& c : k_cdf) c = cdf_of(random_simplex(rng, L));
            // Pointwise order statistics: row u gets the (u+1)-th largest CDF value,
            // so K(. | u) increases stochastically in u.
            for (std::size_t l = 0; l < L; ++l) {
                std::vector<double> col;
                for (const auto& c : k_cdf) col.push_back(c[l]);
                std::sort(col.begin(), col.end(), std::greater<>());
                for (std::size_t u = 0; u < k_cdf.size(); ++u) k_cdf[u][l] = col[u];
            }
            auto b1_cdf = cdf_of(random_simplex(rng, L));
            for (std::size_t l = 0; l < L; ++l) {
                b1_cdf[l] = std::min(b1_cdf[l], b0_cdf[l]);
                for (const auto& c : k_cdf) b1_cdf[l] = std::min(b1_cdf[l], c[l]);
            }
            b1_cdf.back() = 1.0;
            b0[j] = pmf_of(b0_cdf);
            b1[j] = pmf_of(b1_cdf);
            for (const auto& c : k_cdf) k[j].push_back(pmf_of(c));
        }
        for (int u = 0; u < card.u; ++u) {
            for (std::size_t s = 0; s < S; ++s) {
                const auto levels = scm.decode_m(s);
                double p_b0 = 1, p_b1 = 1, p_k = 1;
                for (std::size_t j = 0; j < J; ++j) {
                    const auto l = static_cast<std::size_t>(levels[j]);
                    p_b0 *= b0[j][l];
                    p_b1 *= b1[j][l];
                    p_k *= k[j][static_cast<std::size_t>(u)][l];
                }
                pm_ref(scm, 0, w, u, s) = (1 - kappa) * p_b0 + kappa * p_k;
                pm_ref(scm, 1, w, u, s) = p_b1;
            }
            normalize(&pm_ref(scm, 0, w, u, 0), S);
            normalize(&pm_ref(scm, 1, w, u, 0), S);
        }
        const double c_w = rng.uniform(0.05, 0.2);
        const double d_w = rng.uniform(0.0, 0.1);
        for (std::size_t s = 0; s < S; ++s) {
            const double fs = f_of(s);
            for (int u = 0; u < card.u; ++u) {
                py_ref(scm, 0, s, w, u) = c_w + s_coef * fs;
                py_ref(scm, 1, s, w, u) = c_w + s_coef * fs + d_w + t_coef * fs * gu[static_cast<std::size_t>(u)];
            }
        }
    }
    scm.monotone_in_m = monotone_in_m_holds(scm);
    scm.stochastic_dominance = S > 20 || stochastic_dominance_holds(scm);
    return scm;
}

ScmSpec monotone_small_scm() {
    ScmCardinalities card{2, 3, {4, 4}};
    ScmSpec scm = shell(card);
    const std::size_t S = scm.m_states();
    scm.p_w = {0.6, 0.4};
    scm.p_u = {0.3, 0.4, 0.3};
    scm.p_a1 = {0.3, 0.5};
    const double theta[2][2] = {{-0.3, -0.2}, {0.15, 0.2}};  // [arm][component] tilt per level
    const double omega[2] = {0.25, -0.15};                    // covariate tilt per level
    const double tau[3] = {-0.7, 0.0, 0.7};                   // U tilt of the control-arm component
    const double g[3] = {0.0, 0.5, 1.0};
    const double g_bar = 0.3 * g[0] + 0.4 * g[1] + 0.3 * g[2];
    const double b0 = -2.4, ba = 0.4, bw = 0.3, bm[2] = {0.3, 0.2}, t = 0.04;

    auto tilted = [](double slope) {
        std::vector<double> p(4);
        for (int l = 0; l < 4; ++l) p[static_cast<std::size_t>(l)] = std::exp(slope * l);
        normalize(p.data(), 4);
        return p;
    };
    for (int w = 0; w < 2; ++w) {
        std::vector<double> g0(S), g1(S), kbar(S, 0.0);
        std::vector<std::vector<double>> k(3, std::vector<double>(S));
        for (std::size_t s = 0; s < S; ++s) {
            const auto m = scm.decode_m(s);
            g0[s] = g1[s] = 1;
            for (std::size_t j = 0; j < 2; ++j) {
                g0[s] *= tilted(theta[0][j] + omega[j] * w)[static_cast<std::size_t>(m[j])];
                g1[s] *= tilted(theta[1][j] + omega[j] * w)[static_cast<std::size_t>(m[j])];
            }
            for (int u = 0; u < 3; ++u) {
                double pk = 1;
                for (std::size_t j = 0; j < 2; ++j)
                    pk *= tilted(theta[0][j] + omega[j] * w + tau[u])[static_cast<std::size_t>(m[j])];
                k[static_cast<std::size_t>(u)][s] = pk;
                kbar[s] += scm.p_u[static_cast<std::size_t>(u)] * pk;
            }
        }
        double bound = 1.0;
        for (std::size_t s = 0; s < S; ++s) bound = std::min(bound, g0[s] / kbar[s]);
        const double kappa = std::min(0.6, 0.95 * bound);
        for (int u = 0; u < 3; ++u) {
            for (std::size_t s = 0; s < S; ++s) {
                const double base = (g0[s] - kappa * kbar[s]) / (1 - kappa);
                pm_ref(scm, 0, w, u, s) = (1 - kappa) * base + kappa * k[static_cast<std::size_t>(u)][s];
                pm_ref(scm, 1, w, u, s) = g1[s];
            }
            normalize(&pm_ref(scm, 0, w, u, 0), S);
            normalize(&pm_ref(scm, 1, w, u, 0), S);
        }
        for (std::size_t s = 0; s < S; ++s) {
            const auto m = scm.decode_m(s);
            const double eta = b0 + bw * w + bm[0] * m[0] + bm[1] * m[1];
            const double phi = (m[0] + m[1]) / 6.0;
            for (int u = 0; u < 3; ++u) {
                py_ref(scm, 0, s, w, u) = sigmoid(eta);
                py_ref(scm, 1, s, w, u) = sigmoid(eta + ba) + t * (g[u] - g_bar) * phi;
            }
        }
    }
    scm.monotone_in_m = monotone_in_m_holds(scm);
    scm.stochastic_dominance = stochastic_dominance_holds(scm);
    return scm;
}

ScmSpec scm_preset(const std::string& name) {
    if (name == "monotone-small") return monotone_small_scm();
    throw Error(ErrorKind::InvalidArgument, "unknown SCM preset '" + name + "'");
}

AuditDataset generate_dataset(const ScmSpec& scm, std::size_t n, std::uint64_t seed) {
    check_scm(scm);
    if (n < 1) throw Error(ErrorKind::InvalidArgument, "n must be >= 1");
    const std::size_t S = scm.m_states();
    const std::size_t J = scm.m_card.size();
    Rng rng(seed);
    auto categorical = [&](const double* p, std::size_t len) {
        const double r = rng.uniform();
        double c = 0;
        for (std::size_t i = 0; i + 1 < len; ++i) {
            c += p[i];
            if (r < c) return i;
        }
        return len - 1;
    };
    Eigen::MatrixXd w(static_cast<Eigen::Index>(n), 1), m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(J));
    std::vector<int> a(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto wi = static_cast<int>(categorical(scm.p_w.data(), scm.p_w.size()));
        const auto ui = static_cast<int>(categorical(scm.p_u.data(), scm.p_u.size()));
        const int ai = rng.bernoulli(scm.p_a1[static_cast<std::size_t>(wi)]) ? 1 : 0;
        const std::size_t si = categorical(&scm.p_m[((static_cast<std::size_t>(ai) * scm.w_card + wi) * scm.u_card + ui) * S], S);
        const int yi = rng.bernoulli(scm.py(ai, si, wi, ui)) ? 1 : 0;
        const auto levels = scm.decode_m(si);
        const auto r = static_cast<Eigen::Index>(i);
        w(r, 0) = wi;
        for (std::size_t j = 0; j < J; ++j) m(r, static_cast<Eigen::Index>(j)) = levels[j];
        a[i] = ai;
        y[i] = yi;
    }
    std::vector<std::string> m_names;
    for (std::size_t j = 0; j < J; ++j) m_names.push_back("m" + std::to_string(j));
    return AuditDataset(std::move(w), std::move(a), std::move(m), std::move(y), {"w0"}, std::move(m_names));
}

Json to_json(const ScmSpec& scm) {
    const std::size_t S = scm.m_states();
    Json j;
    j["w_card"] = scm.w_card;
    j["u_card"] = scm.u_card;
    j["m_card"] = scm.m_card;
    j["p_w"] = scm.p_w;
    j["p_u"] = scm.p_u;
    j["p_a1"] = scm.p_a1;
    Json pm = Json::array(), py = Json::array();
    for (int a = 0; a < 2; ++a) {
        Json by_w = Json::array();
        for (int w = 0; w < scm.w_card; ++w) {
            Json by_u = Json::array();
            for (int u = 0; u < scm.u_card; ++u) {
                std::vector<double> row(S);
                for (std::size_t s = 0; s < S; ++s) row[s] = scm.pm(a, w, u, s);
                by_u.push_back(row);
            }
            by_w.push_back(by_u);
        }
        pm.push_back(by_w);
        Json by_s = Json::array();
        for (std::size_t s = 0; s < S; ++s) {
            Json by_w2 = Json::array();
            for (int w = 0; w < scm.w_card; ++w) {
                std::vector<double> row(static_cast<std::size_t>(scm.u_card));
                for (int u = 0; u < scm.u_card; ++u) row[static_cast<std::size_t>(u)] = scm.py(a, s, w, u);
                by_w2.push_back(row);
            }
            by_s.push_back(by_w2);
        }
        py.push_back(by_s);
    }
    j["p_m"] = pm;  // [a][w][u][m-state]
    j["p_y1"] = py;  // [a][m-state][w][u]
    j["monotone_in_m"] = scm.monotone_in_m;
    j["stochastic_dominance"] = scm.stochastic_dominance;
    return j;
}

ScmSpec scm_from_json(const Json& j) {
    ScmSpec scm;
    try {
        scm.w_card = j.at("w_card").get<int>();
        scm.u_card = j.at("u_card").get<int>();
        scm.m_card = j.at("m_card").get<std::vector<int>>();
        scm.p_w = j.at("p_w").get<std::vector<double>>();
        scm.p_u = j.at("p_u").get<std::vector<double>>();
        scm.p_a1 = j.at("p_a1").get<std::vector<double>>();
        for (const auto& by_w : j.at("p_m"))
            for (const auto& by_u : by_w)
                for (const auto& row : by_u)
                    for (double v : row.get<std::vector<double>>()) scm.p_m.push_back(v);
        for (const auto& by_s : j.at("p_y1"))
            for (const auto& by_w : by_s)
                for (const auto& row : by_w)
                    for (double v : row.get<std::vector<double>>()) scm.p_y1.push_back(v);
        scm.monotone_in_m = j.value("monotone_in_m", false);
        scm.stochastic_dominance = j.value("stochastic_dominance", false);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("malformed SCM JSON: ") + e.what());
    }
    check_scm(scm);
    return scm;
}

Json to_json(const OracleEffects& e) {
    Json j;
    j["te"] = e.te;
    j["nde"] = e.nde;
    j["nie"] = e.nie;
    j["ide"] = e.ide;
    j["iie"] = e.iie;
    j["total_contrast"] = e.total_contrast();
    j["means"] = {{"y1_g1", e.y1_g1}, {"y1_g0", e.y1_g0}, {"y0_g0", e.y0_g0},
                  {"y1_m1", e.y1_m1}, {"y1_m0", e.y1_m0}, {"y0_m0", e.y0_m0}};
    return j;
}

std::uint64_t table_hash(const ScmSpec& scm) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    };
    mix(static_cast<std::uint64_t>(scm.w_card));
    mix(static_cast<std::uint64_t>(scm.u_card));
    for (int c : scm.m_card) mix(static_cast<std::uint64_t>(c));
    for (const auto* t : {&scm.p_w, &scm.p_u, &scm.p_a1, &scm.p_m, &scm.p_y1})
        for (double v : *t) mix(std::bit_cast<std::uint64_t>(v));
    return h;
}

}  // namespace medaudit

namespace medaudit {
namespace {

struct LawHolder {
    ScmSpec scm;
    ObservableLaw law;
    explicit LawHolder(ScmSpec s) : scm(std::move(s)) { law = observable_law(scm); }

    std::size_t state(std::span<const double> m) const {
        std::vector<int> levels(m.size());
        for (std::size_t j = 0; j < m.size(); ++j) levels[j] = static_cast<int>(std::lround(m[j]));
        return scm.encode_m(levels);
    }
    static int cov(std::span<const double> w) { return static_cast<int>(std::lround(w[0])); }
};

class ScmOutcome final : public OutcomeModel {
public:
    explicit ScmOutcome(std::shared_ptr<const LawHolder> h) : h_(std::move(h)) {}
    double predict(int a, std::span<const double> m, std::span<const double> w) const override {
        return h_->law.mu_at(a, h_->state(m), LawHolder::cov(w));
    }
    Json to_json() const override { return {{"type", "population"}}; }

private:
    std::shared_ptr<const LawHolder> h_;
};

class ScmPropensity final : public PropensityModel {
public:
    explicit ScmPropensity(std::shared_ptr<const LawHolder> h) : h_(std::move(h)) {}
    double predict(std::span<const double> w) const override {
        return h_->scm.p_a1[static_cast<std::size_t>(LawHolder::cov(w))];
    }
    Json to_json() const override { return {{"type", "population"}}; }

private:
    std::shared_ptr<const LawHolder> h_;
};

class ScmRatio final : public RatioModel {
public:
    ScmRatio(std::shared_ptr<const LawHolder> h, double eps) : h_(std::move(h)), eps_(eps) {}
    RatioValue evaluate(std::span<const double> m, std::span<const double> w) const override {
        const std::size_t s = h_->state(m);
        const int wi = LawHolder::cov(w);
        RatioValue r;
        r.raw = h_->law.f(1, wi, s) / h_->law.f(0, wi, s);
        r.value = std::clamp(r.raw, eps_, 1 / eps_);
        r.clipped = r.value != r.raw;
        return r;
    }
    Json to_json() const override { return {{"type", "population"}}; }

private:
    std::shared_ptr<const LawHolder> h_;
    double eps_;
};

class ScmMediators final : public MediatorDistribution {
public:
    explicit ScmMediators(std::shared_ptr<const LawHolder> h) : h_(std::move(h)) {}
    std::size_t dimension() const override { return h_->scm.m_card.size(); }
    void draw(std::span<const double> w, int arm, std::size_t d, Rng& rng, RowMatrix& out) const override {
        const std::size_t S = h_->scm.m_states();
        const int wi = LawHolder::cov(w);
        out.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(dimension()));
        for (std::size_t t = 0; t < d; ++t) {
            const double r = rng.uniform();
            double c = 0;
            std::size_t s = S - 1;
            for (std::size_t k = 0; k + 1 < S; ++k) {
                c += h_->law.f(arm, wi, k);
                if (r < c) {
                    s = k;
                    break;
                }
            }
            const auto levels = h_->scm.decode_m(s);
            for (std::size_t j = 0; j < levels.size(); ++j)
                out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = levels[j];
        }
    }
    Json to_json() const override { return {{"type", "population"}}; }

private:
    std::shared_ptr<const LawHolder> h_;
};

}  // namespace

NuisanceSet population_nuisances(const ScmSpec& scm, const FoldAssignment& folds, const NuisanceConfig& config) {
    check_scm(scm);
    auto holder = std::make_shared<const LawHolder>(scm);
    NuisanceSet set;
    set.config = config;
    for (int f = 1; f <= folds.k; ++f) {
        FoldNuisance nu;
        nu.fold = f;
        nu.train_units = folds.complement(f);
        nu.mu = std::make_shared<ScmOutcome>(holder);
        nu.pi = std::make_shared<ScmPropensity>(holder);
        nu.ratio = std::make_shared<ScmRatio>(holder, config.ratio_clip);
        nu.sampler = std::make_shared<ScmMediators>(holder);
        set.folds.push_back(std::move(nu));
    }
    return set;
}

}  // namespace medaudit
