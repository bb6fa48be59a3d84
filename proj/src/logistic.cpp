#include "medaudit/logistic.hpp"

#include "medaudit/error.hpp"

#include <cmath>

namespace medaudit {

double sigmoid(double eta) {
    if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

double softplus(double eta) { return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

double LogisticModel::linear_predictor(std::span<const double> x) const {
    double eta = intercept;
    for (Eigen::Index j = 0; j < coefficients.size(); ++j) eta += coefficients(j) * x[static_cast<std::size_t>(j)];
    return eta;
}

double LogisticModel::predict(std::span<const double> x) const {
    constexpr double kEdge = 1e-12;
    const double p = sigmoid(linear_predictor(x));
    return std::min(std::max(p, kEdge), 1.0 - kEdge);
}

Json LogisticModel::to_json() const {
    Json j;
    j["type"] = "logistic";
    j["intercept"] = intercept;
    j["coefficients"] = std::vector<double>(coefficients.data(), coefficients.data() + coefficients.size());
    j["l2_penalty"] = l2_penalty;
    j["converged"] = converged;
    j["iterations"] = iterations;
    j["gradient_norm"] = gradient_norm;
    return j;
}

namespace logistic_detail {

double objective(const Eigen::MatrixXd& x, const std::vector<int>& y, double l2, const Eigen::VectorXd& theta) {
    const Eigen::Index n = x.rows();
    const Eigen::VectorXd eta = (x * theta.tail(x.cols())).array() + theta(0);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) loss += softplus(eta(i)) - y[static_cast<std::size_t>(i)] * eta(i);
    return loss / static_cast<double>(n) + 0.5 * l2 * theta.tail(x.cols()).squaredNorm();
}

Eigen::VectorXd gradient(const Eigen::MatrixXd& x, const std::vector<int>& y, double l2, const Eigen::VectorXd& theta) {
    const Eigen::Index n = x.rows();
    const Eigen::VectorXd eta = (x * theta.tail(x.cols())).array() + theta(0);
    Eigen::VectorXd residual(n);
    for (Eigen::Index i = 0; i < n; ++i) residual(i) = sigmoid(eta(i)) - y[static_cast<std::size_t>(i)];
    Eigen::VectorXd g(theta.size());
    g(0) = residual.mean();
    g.tail(x.cols()) = x.transpose() * residual / static_cast<double>(n) + l2 * theta.tail(x.cols());
    return g;
}

}  // namespace logistic_detail

LogisticModel fit_logistic(const Eigen::MatrixXd& features, const std::vector<int>& labels, double l2_penalty,
                           double tol, int max_iter) {
    const Eigen::Index n = features.rows();
    const Eigen::Index p = features.cols();
    if (static_cast<Eigen::Index>(labels.size()) != n)
        throw Error(ErrorKind::InvalidArgument, "features and labels are not row-aligned");
    if (n == 0) throw Error(ErrorKind::InvalidArgument, "cannot fit on zero rows");
    if (!features.allFinite()) throw Error(ErrorKind::NonFiniteInput, "logistic features contain NaN or inf");
    if (!(l2_penalty >= 0.0)) throw Error(ErrorKind::InvalidArgument, "l2_penalty must be >= 0");
    for (int label : labels)
        if (label != 0 && label != 1) throw Error(ErrorKind::InvalidArgument, "labels must be binary");

    LogisticModel model;
    model.l2_penalty = l2_penalty;
    model.center = features.colwise().mean().transpose();
    model.scale = Eigen::VectorXd::Ones(p);
    Eigen::MatrixXd z = features.rowwise() - model.center.transpose();
    for (Eigen::Index j = 0; j < p; ++j) {
        const double sd = std::sqrt(z.col(j).squaredNorm() / static_cast<double>(n));
        if (sd > 1e-12) {
            model.scale(j) = sd;
            z.col(j) /= sd;
        }
    }

    const double nd = static_cast<double>(n);
    const double ybar = [&] {
        double s = 0;
        for (int v : labels) s += v;
        return s / nd;
    }();
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(p + 1);
    // Start from the intercept-only optimum when it is finite.
    if (ybar > 0 && ybar < 1) theta(0) = std::log(ybar / (1 - ybar));

    double f = logistic_detail::objective(z, labels, l2_penalty, theta);
    Eigen::VectorXd g = logistic_detail::gradient(z, labels, l2_penalty, theta);
    int iter = 0;
    for (; iter < max_iter && g.norm() > tol; ++iter) {
        const Eigen::VectorXd eta = (z * theta.tail(p)).array() + theta(0);
        Eigen::VectorXd weight(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double pi = sigmoid(eta(i));
            weight(i) = pi * (1 - pi);
        }
        Eigen::MatrixXd hessian(p + 1, p + 1);
        hessian(0, 0) = weight.sum() / nd;
        if (p > 0) {
            const Eigen::VectorXd zw = z.transpose() * weight / nd;
            hessian.block(1, 0, p, 1) = zw;
            hessian.block(0, 1, 1, p) = zw.transpose();
            hessian.block(1, 1, p, p) = z.transpose() * weight.asDiagonal() * z / nd;
            hessian.block(1, 1, p, p).diagonal().array() += l2_penalty;
        }
        // Tiny ridge keeps the solve defined when every weight underflows.
        hessian.diagonal().array() += 1e-14;
        const Eigen::VectorXd step = hessian.ldlt().solve(-g);
        double t = 1.0;
        const double slope = g.dot(step);
        Eigen::VectorXd candidate = theta + step;
        double f_new = logistic_detail::objective(z, labels, l2_penalty, candidate);
        while (f_new > f + 1e-4 * t * slope && t > 1e-10) {
            t *= 0.5;
            candidate = theta + t * step;
            f_new = logistic_detail::objective(z, labels, l2_penalty, candidate);
        }
        if (!(f_new <= f)) break;  // no descent possible at machine precision
        theta = candidate;
        f = f_new;
        g = logistic_detail::gradient(z, labels, l2_penalty, theta);
    }

    model.iterations = iter;
    model.gradient_norm = g.norm();
    model.converged = model.gradient_norm <= tol;
    model.coefficients = theta.tail(p).array() / model.scale.array();
    model.intercept = theta(0) - model.coefficients.dot(model.center);
    return model;
}

}  // namespace medaudit
