#pragma once

#include "medaudit/dataset.hpp"
#include "medaudit/json.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace medaudit {

enum class AllocationStatus { ok, mixed_sign, degenerate };

const char* to_string(AllocationStatus status);

struct PathEffect {
    std::string mediator;
    double alpha = 0.0;    // A coefficient in M_j ~ 1 + A + W
    double beta = 0.0;     // M_j coefficient in Y ~ 1 + A + M + W (linear probability)
    double product = 0.0;
    double allocated = 0.0;  // NaN when the allocation is degenerate
};

struct PathCoefficients {
    std::vector<PathEffect> paths;
    double iie = 0.0;
    double product_sum = 0.0;
    // mixed_sign: allocations are signed and do not read as shares.
    // degenerate: products sum to ~0, so nothing is allocated.
    AllocationStatus status = AllocationStatus::ok;
};

// Least squares by complete orthogonal decomposition. Rank-deficient designs
// get the minimum-norm solution.
Eigen::VectorXd ordinary_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

PathCoefficients path_specific_effects(const AuditDataset& dataset, double iie);

Json to_json(const PathCoefficients& paths);

}  // namespace medaudit
