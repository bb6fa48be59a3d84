#include "medaudit/estimator.hpp"

#include "medaudit/error.hpp"
#include "medaudit/normal.hpp"
#include "medaudit/parallel.hpp"
#include "medaudit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace medaudit {

UnitEvaluation evaluate_units(const AuditDataset& dataset, const NuisanceSet& nuisances,
                              const FoldAssignment& folds, const EvaluationOptions& options) {
    const std::size_t n = dataset.n();
    if (folds.fold_of.size() != n) throw Error(ErrorKind::InvalidArgument, "fold assignment does not match dataset");
    if (options.draws < 1) throw Error(ErrorKind::InvalidArgument, "need at least one Monte Carlo draw");
    const auto ni = static_cast<Eigen::Index>(n);
    UnitEvaluation u;
    for (auto* v : {&u.theta_1_g1, &u.theta_1_g0, &u.theta_0_g0, &u.aug_1_g1, &u.aug_1_g0, &u.aug_0_g0, &u.ipw_1_g1,
                    &u.ipw_1_g0, &u.ipw_0_g0})
        v->setZero(ni);
    std::vector<unsigned char> pi_clipped(n, 0), r_clipped(n, 0);

    // Row-major copies so every unit's W and M rows are contiguous spans.
    const RowMatrix w = dataset.w();
    const RowMatrix m = dataset.m();
    const std::size_t q = dataset.q(), p = dataset.p();
    const double clip = options.probability_clip;

    parallel_for(n, options.threads, [&](std::size_t i) {
        const FoldNuisance& nu = nuisances.for_fold(folds.fold_of[i]);
        if (std::binary_search(nu.train_units.begin(), nu.train_units.end(), i))
            throw Error(ErrorKind::InvalidArgument, "unit " + std::to_string(i) + " is in its own training fold");
        const std::span<const double> wi(w.data() + i * q, q);
        const std::span<const double> mi(m.data() + i * p, p);
        const auto ii = static_cast<Eigen::Index>(i);
        Rng rng = Rng::stream(options.seed, i);
        RowMatrix draws;
        const double d = static_cast<double>(options.draws);

        nu.sampler->draw(wi, 0, options.draws, rng, draws);
        double s00 = 0, s10 = 0;
        for (Eigen::Index t = 0; t < draws.rows(); ++t) {
            const std::span<const double> md(draws.data() + t * draws.cols(), p);
            s00 += nu.mu->predict(0, md, wi);
            s10 += nu.mu->predict(1, md, wi);
        }
        nu.sampler->draw(wi, 1, options.draws, rng, draws);
        double s11 = 0;
        for (Eigen::Index t = 0; t < draws.rows(); ++t)
            s11 += nu.mu->predict(1, std::span<const double>(draws.data() + t * draws.cols(), p), wi);
        u.theta_0_g0(ii) = s00 / d;
        u.theta_1_g0(ii) = s10 / d;
        u.theta_1_g1(ii) = s11 / d;

        const double pi_raw = nu.pi->predict(wi);
        const double pi1 = clip_probability(pi_raw, clip);
        pi_clipped[i] = pi1 != pi_raw;
        const double y = dataset.y()[i];
        if (dataset.a()[i] == 1) {
            const RatioValue r = nu.ratio->evaluate(mi, wi);
            r_clipped[i] = r.clipped;
            const double resid = y - nu.mu->predict(1, mi, wi);
            u.aug_1_g1(ii) = resid / pi1;
            u.aug_1_g0(ii) = resid / (pi1 * r.value);
            u.ipw_1_g1(ii) = y / pi1;
            u.ipw_1_g0(ii) = y / (pi1 * r.value);
        } else {
            const double pi0 = 1 - pi1;
            u.aug_0_g0(ii) = (y - nu.mu->predict(0, mi, wi)) / pi0;
            u.ipw_0_g0(ii) = y / pi0;
        }
        if (!std::isfinite(u.aug_1_g0(ii)) || !std::isfinite(u.aug_0_g0(ii)) || !std::isfinite(u.theta_1_g1(ii)))
            throw Error(ErrorKind::NonFiniteInput, "non-finite weight or prediction at unit " + std::to_string(i));
    });

    for (std::size_t i = 0; i < n; ++i) {
        u.clips.propensity_clipped += pi_clipped[i];
        u.clips.ratio_clipped += r_clipped[i];
    }
    u.clips.weights = n + dataset.n_treated();
    return u;
}

PotentialOutcomeMeans combine(const UnitEvaluation& units, MeansKind kind) {
    PotentialOutcomeMeans out;
    switch (kind) {
        case MeansKind::plug_in:
            out.unit_1_g1 = units.theta_1_g1;
            out.unit_1_g0 = units.theta_1_g0;
            out.unit_0_g0 = units.theta_0_g0;
            break;
        case MeansKind::aipw:
            out.unit_1_g1 = units.theta_1_g1 + units.aug_1_g1;
            out.unit_1_g0 = units.theta_1_g0 + units.aug_1_g0;
            out.unit_0_g0 = units.theta_0_g0 + units.aug_0_g0;
            break;
        case MeansKind::weighting:
            out.unit_1_g1 = units.ipw_1_g1;
            out.unit_1_g0 = units.ipw_1_g0;
            out.unit_0_g0 = units.ipw_0_g0;
            break;
    }
    out.raw_1_g1 = out.unit_1_g1.mean();
    out.raw_1_g0 = out.unit_1_g0.mean();
    out.raw_0_g0 = out.unit_0_g0.mean();
    out.psi_1_g1 = std::clamp(out.raw_1_g1, 0.0, 1.0);
    out.psi_1_g0 = std::clamp(out.raw_1_g0, 0.0, 1.0);
    out.psi_0_g0 = std::clamp(out.raw_0_g0, 0.0, 1.0);
    out.clips = units.clips;
    return out;
}

namespace {

PotentialOutcomeMeans run(const AuditDataset& dataset, const NuisanceSet& nuisances, const FoldAssignment& folds,
                          std::size_t d_draws, std::uint64_t seed, unsigned threads, MeansKind kind) {
    EvaluationOptions options;
    options.draws = d_draws;
    options.seed = seed;
    options.threads = threads;
    options.probability_clip = nuisances.config.probability_clip;
    return combine(evaluate_units(dataset, nuisances, folds, options), kind);
}

}  // namespace

PotentialOutcomeMeans plug_in_means(const AuditDataset& dataset, const NuisanceSet& nuisances,
                                    const FoldAssignment& folds, std::size_t d_draws, std::uint64_t seed,
                                    unsigned threads) {
    return run(dataset, nuisances, folds, d_draws, seed, threads, MeansKind::plug_in);
}

PotentialOutcomeMeans aipw_means(const AuditDataset& dataset, const NuisanceSet& nuisances,
                                 const FoldAssignment& folds, std::size_t d_draws, std::uint64_t seed,
                                 unsigned threads) {
    return run(dataset, nuisances, folds, d_draws, seed, threads, MeansKind::aipw);
}

PotentialOutcomeMeans weighting_means(const AuditDataset& dataset, const NuisanceSet& nuisances,
                                      const FoldAssignment& folds, std::uint64_t seed, unsigned threads) {
    return run(dataset, nuisances, folds, 1, seed, threads, MeansKind::weighting);
}

WaldInterval wald_ci(double estimate, const Eigen::VectorXd& influence_values, double level) {
    const Eigen::Index n = influence_values.size();
    if (n < 2) throw Error(ErrorKind::InvalidArgument, "Wald interval needs at least two influence values");
    if (!(level > 0 && level < 1)) throw Error(ErrorKind::InvalidArgument, "confidence level must lie in (0, 1)");
    if (!influence_values.allFinite()) throw Error(ErrorKind::NonFiniteInput, "influence values must be finite");
    const double mean = influence_values.mean();
    const double var = (influence_values.array() - mean).square().sum() / static_cast<double>(n);
    WaldInterval ci;
    ci.se = std::sqrt(var / static_cast<double>(n));
    const double z = normal_quantile(0.5 + level / 2);
    ci.lo = estimate - z * ci.se;
    ci.hi = estimate + z * ci.se;
    return ci;
}

double wald_p_value(double estimate, double se) {
    if (se == 0) return estimate == 0 ? 1.0 : 0.0;
    return std::erfc(std::abs(estimate / se) / std::sqrt(2.0));
}

Json to_json(const EstimatorConfig& config) {
    Json j;
    j["k"] = config.k;
    j["draws"] = config.draws;
    j["seed"] = config.seed;
    j["level"] = config.level;
    j["monotone_asserted"] = config.monotone_asserted;
    j["nuisance"] = to_json(config.nuisance);
    return j;
}

EstimatorConfig estimator_config_from_json(const Json& j, EstimatorConfig c) {
    if (!j.is_object()) throw Error(ErrorKind::InvalidArgument, "estimator config must be a JSON object");
    try {
        c.k = j.value("k", c.k);
        c.draws = j.value("draws", c.draws);
        c.seed = j.value("seed", c.seed);
        c.level = j.value("level", c.level);
        c.monotone_asserted = j.value("monotone_asserted", c.monotone_asserted);
        if (j.contains("threads")) c.threads = j.at("threads").get<unsigned>();
        if (j.contains("nuisance")) c.nuisance = nuisance_config_from_json(j.at("nuisance"));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("malformed estimator config: ") + e.what());
    }
    if (c.k < 2) throw Error(ErrorKind::InvalidArgument, "k must be >= 2");
    if (c.draws < 1) throw Error(ErrorKind::InvalidArgument, "draws must be >= 1");
    if (!(c.level > 0 && c.level < 1)) throw Error(ErrorKind::InvalidArgument, "level must lie in (0, 1)");
    return c;
}

namespace {

void check_dag_matches(const AuditDataset& dataset, const CreditDag& dag) {
    auto expect = [&](const std::string& name, NodeRole role) {
        const DagNode* node = dag.find(name);
        if (!node || node->role != role)
            throw Error(ErrorKind::RoleViolation, "dataset column '" + name + "' is not a " + to_string(role) +
                                                      " node of the declared DAG");
    };
    for (const auto& name : dataset.w_names()) expect(name, NodeRole::covariate);
    for (const auto& name : dataset.m_names()) expect(name, NodeRole::mediator);
    expect(dataset.treatment_name(), NodeRole::treatment);
    expect(dataset.outcome_name(), NodeRole::outcome);
}

EffectSummary summarize(double estimate, const Eigen::VectorXd& influence, double level) {
    const WaldInterval ci = wald_ci(estimate, influence, level);
    return {estimate, ci.se, ci.lo, ci.hi, wald_p_value(estimate, ci.se)};
}

}  // namespace

MediationEstimate cross_fit_estimate(const AuditDataset& dataset, const CreditDag& dag, const EstimatorConfig& config) {
    MediationEstimate est;
    est.assumptions = validate_dag(dag);
    check_dag_matches(dataset, dag);
    est.config = config;
    est.fold_seed = derive_seed(config.seed, 0);
    est.draw_seed = derive_seed(config.seed, 1);

    const FoldAssignment folds = assign_folds(dataset, config.k, est.fold_seed);
    for (int f = 1; f <= folds.k; ++f) est.fold_sizes.push_back(folds.members(f).size());
    const NuisanceSet nuisances = fit_nuisances(dataset, folds, config.nuisance, config.threads);

    EvaluationOptions options;
    options.draws = config.draws;
    options.seed = est.draw_seed;
    options.probability_clip = config.nuisance.probability_clip;
    options.threads = config.threads;
    est.means = combine(evaluate_units(dataset, nuisances, folds, options), MeansKind::aipw);

    est.n_used = dataset.n();
    est.influence_ide = est.means.unit_1_g0 - est.means.unit_0_g0;
    est.influence_iie = est.means.unit_1_g1 - est.means.unit_1_g0;
    est.ide = summarize(est.means.ide(), est.influence_ide, config.level);
    est.iie = summarize(est.means.iie(), est.influence_iie, config.level);
    est.total = summarize(est.means.total(), est.means.unit_1_g1 - est.means.unit_0_g0, config.level);
    est.total_contrast = est.ide.estimate + est.iie.estimate;

    double y1 = 0, y0 = 0;
    for (std::size_t i = 0; i < dataset.n(); ++i) (dataset.a()[i] ? y1 : y0) += dataset.y()[i];
    est.raw_gap = y1 / double(dataset.n_treated()) - y0 / double(dataset.n() - dataset.n_treated());

    try {
        est.sensitivity = sensitivity_analysis(est.ide.estimate, est.ide.lo, est.ide.hi, est.means.psi_0_g0);
    } catch (const Error& e) {
        est.sensitivity_note = e.what();
    }
    est.bounds = bounds_statement(est.ide.estimate, est.iie.estimate, config.monotone_asserted);
    return est;
}

namespace {

Json effect_json(const EffectSummary& e) {
    return {{"estimate", e.estimate}, {"se", e.se}, {"ci", {e.lo, e.hi}}, {"p_value", e.p_value}};
}

}  // namespace

Json to_json(const MediationEstimate& est, bool include_influence) {
    Json j;
    j["n_used"] = est.n_used;
    j["ide"] = effect_json(est.ide);
    j["iie"] = effect_json(est.iie);
    j["total_contrast"] = est.total_contrast;
    j["total_contrast_inference"] = effect_json(est.total);
    j["raw_gap"] = est.raw_gap;
    j["potential_outcome_means"] = {{"psi_1_g1", est.means.psi_1_g1},
                                    {"psi_1_g0", est.means.psi_1_g0},
                                    {"psi_0_g0", est.means.psi_0_g0},
                                    {"raw", {est.means.raw_1_g1, est.means.raw_1_g0, est.means.raw_0_g0}},
                                    {"clamped_to_unit_interval", est.means.clamped()}};
    j["diagnostics"] = {{"propensity_clipped", est.means.clips.propensity_clipped},
                        {"ratio_clipped", est.means.clips.ratio_clipped},
                        {"weights", est.means.clips.weights},
                        {"clip_fraction", est.means.clips.clip_fraction()},
                        {"positivity_warning", est.means.clips.positivity_warning()}};
    if (est.sensitivity)
        j["sensitivity"] = to_json(*est.sensitivity);
    else
        j["sensitivity"] = {{"unavailable", est.sensitivity_note}};
    j["bounds_statement"] = est.bounds;
    j["assumptions"] = to_json(est.assumptions);
    j["folds"] = {{"k", est.config.k}, {"fold_seed", est.fold_seed}, {"draw_seed", est.draw_seed},
                  {"sizes", est.fold_sizes}};
    j["config"] = to_json(est.config);
    if (include_influence) {
        j["influence_ide"] = std::vector<double>(est.influence_ide.data(), est.influence_ide.data() + est.influence_ide.size());
        j["influence_iie"] = std::vector<double>(est.influence_iie.data(), est.influence_iie.data() + est.influence_iie.size());
    }
    return j;
}

}  // namespace medaudit
