#pragma once

#include "medaudit/json.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace medaudit {

struct BoostingOptions {
    int n_estimators = 200;
    int max_depth = 4;
    double learning_rate = 0.1;
    double l2_leaf = 1.0;             // lambda in the Newton leaf value -G/(H+lambda)
    double min_child_hessian = 1.0;
    int max_bins = 64;                // histogram bins per feature
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // go left when x[feature] <= threshold
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf output (already shrunk by the learning rate)
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(std::span<const double> x) const;
    int depth() const;  // longest root-to-leaf path, counted in splits
};

struct BoostedTreesModel {
    double base_score = 0.0;  // log-odds
    double learning_rate = 0.1;
    int n_estimators = 0;
    int max_depth = 0;
    std::size_t n_features = 0;
    std::vector<RegressionTree> trees;
    std::vector<double> train_loss;  // mean log-loss before round 1 and after each round

    double margin(std::span<const double> x) const;
    double predict(std::span<const double> x) const;  // sigmoid(margin), clamped inside (0, 1)

    Json to_json() const;
};

BoostedTreesModel fit_boosted_trees(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                                    const BoostingOptions& options);

inline BoostedTreesModel fit_boosted_trees(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                                           int n_estimators, int max_depth, double learning_rate) {
    BoostingOptions o;
    o.n_estimators = n_estimators;
    o.max_depth = max_depth;
    o.learning_rate = learning_rate;
    return fit_boosted_trees(features, labels, o);
}

}  // namespace medaudit
