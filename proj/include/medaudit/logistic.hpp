#pragma once

#include "medaudit/json.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace medaudit {

struct LogisticOptions {
    double l2_penalty = 1e-4;
    double tol = 1e-8;
    int max_iter = 100;
};

// Ridge-penalized logistic regression. Coefficients are stored on the raw
// feature scale; fitting happens on z-scored features (training statistics)
// with the penalty applied to the standardized slopes, never the intercept.
struct LogisticModel {
    Eigen::VectorXd coefficients;  // raw scale, one per feature
    double intercept = 0.0;
    double l2_penalty = 0.0;
    bool converged = false;
    int iterations = 0;
    double gradient_norm = 0.0;  // of the standardized penalized objective at exit
    Eigen::VectorXd center;      // training means
    Eigen::VectorXd scale;       // training sds (1 for constant columns)

    std::size_t features() const { return static_cast<std::size_t>(coefficients.size()); }
    double linear_predictor(std::span<const double> x) const;
    // Probability clamped to [1e-12, 1 - 1e-12] so it is strictly inside (0, 1).
    double predict(std::span<const double> x) const;

    Json to_json() const;
};

// Newton/IRLS with Armijo backtracking. Reports converged=false instead of
// throwing when max_iter is reached. Throws NonFiniteInput on NaN/inf input.
LogisticModel fit_logistic(const Eigen::MatrixXd& features, const std::vector<int>& labels, double l2_penalty,
                           double tol, int max_iter);

inline LogisticModel fit_logistic(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                                  const LogisticOptions& options = {}) {
    return fit_logistic(features, labels, options.l2_penalty, options.tol, options.max_iter);
}

double sigmoid(double eta);
double softplus(double eta);  // log(1 + e^eta), overflow-safe

namespace logistic_detail {

// Penalized mean negative log-likelihood on a design matrix used as given:
// theta = (intercept, slopes), penalty (l2/2)*|slopes|^2.
double objective(const Eigen::MatrixXd& x, const std::vector<int>& y, double l2, const Eigen::VectorXd& theta);
Eigen::VectorXd gradient(const Eigen::MatrixXd& x, const std::vector<int>& y, double l2, const Eigen::VectorXd& theta);

}  // namespace logistic_detail

}  // namespace medaudit
