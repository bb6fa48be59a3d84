#include "medaudit/classifier.hpp"

#include "medaudit/error.hpp"

namespace medaudit {

const char* to_string(LearnerKind kind) {
    switch (kind) {
        case LearnerKind::logistic: return "logistic";
        case LearnerKind::boosted_trees: return "boosted_trees";
        case LearnerKind::intercept_only: return "intercept_only";
    }
    return "unknown";
}

LearnerKind learner_kind_from_string(const std::string& s) {
    if (s == "logistic") return LearnerKind::logistic;
    if (s == "boosted_trees" || s == "gbt") return LearnerKind::boosted_trees;
    if (s == "intercept_only") return LearnerKind::intercept_only;
    throw Error(ErrorKind::InvalidArgument, "unknown learner '" + s + "'");
}

Json to_json(const LearnerSpec& spec) {
    Json j;
    j["learner"] = to_string(spec.kind);
    if (spec.kind == LearnerKind::boosted_trees) {
        j["n_estimators"] = spec.boosting.n_estimators;
        j["max_depth"] = spec.boosting.max_depth;
        j["learning_rate"] = spec.boosting.learning_rate;
        j["l2_leaf"] = spec.boosting.l2_leaf;
        j["min_child_hessian"] = spec.boosting.min_child_hessian;
        j["max_bins"] = spec.boosting.max_bins;
    } else {
        j["l2_penalty"] = spec.logistic.l2_penalty;
        j["tol"] = spec.logistic.tol;
        j["max_iter"] = spec.logistic.max_iter;
    }
    return j;
}

LearnerSpec learner_spec_from_json(const Json& j) {
    LearnerSpec spec;
    if (j.is_string()) {
        spec.kind = learner_kind_from_string(j.get<std::string>());
        return spec;
    }
    try {
        spec.kind = learner_kind_from_string(j.value("learner", std::string("logistic")));
        spec.logistic.l2_penalty = j.value("l2_penalty", spec.logistic.l2_penalty);
        spec.logistic.tol = j.value("tol", spec.logistic.tol);
        spec.logistic.max_iter = j.value("max_iter", spec.logistic.max_iter);
        spec.boosting.n_estimators = j.value("n_estimators", spec.boosting.n_estimators);
        spec.boosting.max_depth = j.value("max_depth", spec.boosting.max_depth);
        spec.boosting.learning_rate = j.value("learning_rate", spec.boosting.learning_rate);
        spec.boosting.l2_leaf = j.value("l2_leaf", spec.boosting.l2_leaf);
        spec.boosting.min_child_hessian = j.value("min_child_hessian", spec.boosting.min_child_hessian);
        spec.boosting.max_bins = j.value("max_bins", spec.boosting.max_bins);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("malformed learner config: ") + e.what());
    }
    return spec;
}

double Classifier::predict(std::span<const double> x) const {
    if (const auto* lm = std::get_if<LogisticModel>(&model_)) return lm->predict(x);
    return std::get<BoostedTreesModel>(model_).predict(x);
}

Json Classifier::to_json() const {
    Json j = std::visit([](const auto& m) { return m.to_json(); }, model_);
    j["learner"] = medaudit::to_string(kind_);
    return j;
}

Classifier fit_classifier(const Eigen::MatrixXd& features, const std::vector<int>& labels, const LearnerSpec& spec) {
    switch (spec.kind) {
        case LearnerKind::logistic: return {spec.kind, fit_logistic(features, labels, spec.logistic)};
        case LearnerKind::boosted_trees: return {spec.kind, fit_boosted_trees(features, labels, spec.boosting)};
        case LearnerKind::intercept_only:
            return {spec.kind, fit_logistic(Eigen::MatrixXd(features.rows(), 0), labels, spec.logistic)};
    }
    throw Error(ErrorKind::InvalidArgument, "unknown learner");
}

}  // namespace medaudit
