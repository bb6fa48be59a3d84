#pragma once

#include "medaudit/boosted_trees.hpp"
#include "medaudit/json.hpp"
#include "medaudit/logistic.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace medaudit {

// intercept_only ignores every feature; it exists to build deliberately
// misspecified nuisances.
enum class LearnerKind { logistic, boosted_trees, intercept_only };

const char* to_string(LearnerKind kind);
LearnerKind learner_kind_from_string(const std::string& s);

struct LearnerSpec {
    LearnerKind kind = LearnerKind::logistic;
    LogisticOptions logistic;
    BoostingOptions boosting;
};

Json to_json(const LearnerSpec& spec);
LearnerSpec learner_spec_from_json(const Json& j);

class Classifier {
public:
    Classifier() = default;
    Classifier(LearnerKind kind, std::variant<LogisticModel, BoostedTreesModel> model)
        : kind_(kind), model_(std::move(model)) {}

    // P(label = 1 | x), strictly inside (0, 1); unclipped otherwise.
    double predict(std::span<const double> x) const;

    LearnerKind kind() const noexcept { return kind_; }
    const std::variant<LogisticModel, BoostedTreesModel>& model() const noexcept { return model_; }
    Json to_json() const;

private:
    LearnerKind kind_ = LearnerKind::logistic;
    std::variant<LogisticModel, BoostedTreesModel> model_;
};

Classifier fit_classifier(const Eigen::MatrixXd& features, const std::vector<int>& labels, const LearnerSpec& spec);

inline double clip_probability(double p, double eps) { return p < eps ? eps : (p > 1 - eps ? 1 - eps : p); }

}  // namespace medaudit
