#include "medaudit/nuisance.hpp"

#include "medaudit/error.hpp"
#include "medaudit/parallel.hpp"

namespace medaudit {

double ClassifierOutcome::predict(int a, std::span<const double> m, std::span<const double> w) const {
    double buf[64];
    std::vector<double> heap;
    const std::size_t width = 1 + m.size() + w.size();
    double* x = buf;
    if (width > 64) {
        heap.resize(width);
        x = heap.data();
    }
    x[0] = a;
    std::copy(m.begin(), m.end(), x + 1);
    std::copy(w.begin(), w.end(), x + 1 + m.size());
    return classifier_.predict({x, width});
}

Json to_json(const NuisanceConfig& config) {
    Json j;
    j["outcome"] = to_json(config.outcome);
    j["propensity"] = to_json(config.propensity);
    j["ratio"] = to_json(config.ratio);
    j["probability_clip"] = config.probability_clip;
    j["ratio_clip"] = config.ratio_clip;
    j["sampler"] = {{"strategy", "cell-empirical"},
                    {"bins_per_column", config.sampler.bins_per_column},
                    {"min_pool", config.sampler.min_pool}};
    return j;
}

NuisanceConfig nuisance_config_from_json(const Json& j) {
    NuisanceConfig c;
    try {
        if (j.contains("learner")) {
            const LearnerSpec all = learner_spec_from_json(j.at("learner"));
            c.outcome = c.propensity = c.ratio = all;
        }
        if (j.contains("outcome")) c.outcome = learner_spec_from_json(j.at("outcome"));
        if (j.contains("propensity")) c.propensity = learner_spec_from_json(j.at("propensity"));
        if (j.contains("ratio")) c.ratio = learner_spec_from_json(j.at("ratio"));
        c.probability_clip = j.value("probability_clip", c.probability_clip);
        c.ratio_clip = j.value("ratio_clip", c.ratio_clip);
        if (j.contains("sampler")) {
            const Json& s = j.at("sampler");
            c.sampler.bins_per_column = s.value("bins_per_column", c.sampler.bins_per_column);
            c.sampler.min_pool = s.value("min_pool", c.sampler.min_pool);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("malformed nuisance config: ") + e.what());
    }
    if (!(c.probability_clip > 0 && c.probability_clip < 0.5))
        throw Error(ErrorKind::InvalidArgument, "probability_clip must lie in (0, 0.5)");
    if (!(c.ratio_clip > 0 && c.ratio_clip < 0.5))
        throw Error(ErrorKind::InvalidArgument, "ratio_clip must lie in (0, 0.5)");
    return c;
}

const FoldNuisance& NuisanceSet::for_fold(int fold) const {
    if (fold < 1 || static_cast<std::size_t>(fold) > folds.size() || folds[static_cast<std::size_t>(fold - 1)].fold != fold)
        throw Error(ErrorKind::InvalidArgument, "no nuisance models for fold " + std::to_string(fold));
    return folds[static_cast<std::size_t>(fold - 1)];
}

Json NuisanceSet::to_json() const {
    Json j;
    j["config"] = medaudit::to_json(config);
    Json fj = Json::array();
    for (const auto& f : folds) {
        Json one;
        one["fold"] = f.fold;
        one["train_size"] = f.train_units.size();
        one["outcome"] = f.mu ? f.mu->to_json() : Json();
        one["propensity"] = f.pi ? f.pi->to_json() : Json();
        one["ratio"] = f.ratio ? f.ratio->to_json() : Json();
        one["sampler"] = f.sampler ? f.sampler->to_json() : Json();
        fj.push_back(one);
    }
    j["folds"] = fj;
    return j;
}

FoldNuisance fit_fold_nuisance(const AuditDataset& dataset, const std::vector<std::size_t>& train_units,
                               const NuisanceConfig& config, int fold) {
    const auto n = static_cast<Eigen::Index>(train_units.size());
    const auto p = static_cast<Eigen::Index>(dataset.p());
    const auto q = static_cast<Eigen::Index>(dataset.q());
    Eigen::MatrixXd w(n, q), m(n, p), outcome_x(n, 1 + p + q);
    std::vector<int> a(static_cast<std::size_t>(n)), y(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto i = static_cast<Eigen::Index>(train_units[static_cast<std::size_t>(r)]);
        w.row(r) = dataset.w().row(i);
        m.row(r) = dataset.m().row(i);
        a[static_cast<std::size_t>(r)] = dataset.a()[static_cast<std::size_t>(i)];
        y[static_cast<std::size_t>(r)] = dataset.y()[static_cast<std::size_t>(i)];
    }
    outcome_x.col(0) = Eigen::Map<const Eigen::VectorXi>(a.data(), n).cast<double>();
    outcome_x.middleCols(1, p) = m;
    outcome_x.rightCols(q) = w;

    FoldNuisance out;
    out.fold = fold;
    out.train_units = train_units;
    std::sort(out.train_units.begin(), out.train_units.end());
    out.mu = std::make_shared<ClassifierOutcome>(fit_classifier(outcome_x, y, config.outcome));
    out.pi = std::make_shared<ClassifierPropensity>(fit_classifier(w, a, config.propensity));
    out.ratio = std::make_shared<ClassifierRatio>(
        fit_density_ratio(m, w, a, config.ratio, config.ratio_clip, config.probability_clip));
    out.sampler = std::make_shared<MediatorSampler>(MediatorSampler::fit(w, m, a, config.sampler));
    return out;
}

NuisanceSet fit_nuisances(const AuditDataset& dataset, const FoldAssignment& folds, const NuisanceConfig& config,
                          unsigned threads) {
    NuisanceSet set;
    set.config = config;
    set.folds.resize(static_cast<std::size_t>(folds.k));
    parallel_for(static_cast<std::size_t>(folds.k), threads, [&](std::size_t f) {
        const int fold = static_cast<int>(f) + 1;
        set.folds[f] = fit_fold_nuisance(dataset, folds.complement(fold), config, fold);
    });
    return set;
}

}  // namespace medaudit
