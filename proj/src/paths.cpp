#include "medaudit/paths.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace medaudit {

const char* to_string(AllocationStatus status) {
    switch (status) {
        case AllocationStatus::ok: return "ok";
        case AllocationStatus::mixed_sign: return "mixed_sign";
        case AllocationStatus::degenerate: return "degenerate";
    }
    return "unknown";
}

namespace {

Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> least_squares_solver(const Eigen::MatrixXd& x) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(x.rows(), x.cols());
    cod.setThreshold(1e-10);
    cod.compute(x);
    return cod;
}

}  // namespace

Eigen::VectorXd ordinary_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    return least_squares_solver(x).solve(y);
}

PathCoefficients path_specific_effects(const AuditDataset& dataset, double iie) {
    const auto n = static_cast<Eigen::Index>(dataset.n());
    const auto p = static_cast<Eigen::Index>(dataset.p());
    const auto q = static_cast<Eigen::Index>(dataset.q());
    Eigen::VectorXd a(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i) = dataset.a()[static_cast<std::size_t>(i)];
        y(i) = dataset.y()[static_cast<std::size_t>(i)];
    }
    Eigen::MatrixXd xa(n, 2 + q);
    xa << Eigen::VectorXd::Ones(n), a, dataset.w();
    Eigen::MatrixXd xy(n, 2 + p + q);
    xy << Eigen::VectorXd::Ones(n), a, dataset.m(), dataset.w();
    const Eigen::VectorXd outcome_coef = ordinary_least_squares(xy, y);
    const auto mediator_qr = least_squares_solver(xa);

    PathCoefficients out;
    out.iie = iie;
    double abs_sum = 0.0;
    bool any_pos = false, any_neg = false;
    for (Eigen::Index j = 0; j < p; ++j) {
        PathEffect e;
        e.mediator = dataset.m_names()[static_cast<std::size_t>(j)];
        e.alpha = mediator_qr.solve(dataset.m().col(j))(1);
        e.beta = outcome_coef(2 + j);
        e.product = e.alpha * e.beta;
        out.product_sum += e.product;
        abs_sum += std::abs(e.product);
        any_pos |= e.product > 0;
        any_neg |= e.product < 0;
        out.paths.push_back(e);
    }
    if (std::abs(out.product_sum) <= std::max(1e-12, 1e-6 * abs_sum)) {
        out.status = AllocationStatus::degenerate;
        for (auto& e : out.paths) e.allocated = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    out.status = any_pos && any_neg ? AllocationStatus::mixed_sign : AllocationStatus::ok;
    double assigned = 0.0;
    for (std::size_t j = 0; j < out.paths.size(); ++j) {
        auto& e = out.paths[j];
        e.allocated = iie * e.product / out.product_sum;
        assigned += e.allocated;
    }
    // Put the rounding residue on the largest share so the sum is iie exactly.
    std::size_t largest = 0;
    for (std::size_t j = 1; j < out.paths.size(); ++j)
        if (std::abs(out.paths[j].product) > std::abs(out.paths[largest].product)) largest = j;
    out.paths[largest].allocated += iie - assigned;
    return out;
}

Json to_json(const PathCoefficients& paths) {
    Json j;
    j["iie"] = paths.iie;
    j["product_sum"] = paths.product_sum;
    j["status"] = to_string(paths.status);
    j["outcome_model"] = "linear probability";
    Json rows = Json::array();
    for (const auto& e : paths.paths) {
        Json r;
        r["mediator"] = e.mediator;
        r["alpha"] = e.alpha;
        r["beta"] = e.beta;
        r["product"] = e.product;
        if (std::isnan(e.allocated))
            r["allocated"] = nullptr;
        else
            r["allocated"] = e.allocated;
        rows.push_back(r);
    }
    j["paths"] = rows;
    return j;
}

}  // namespace medaudit
