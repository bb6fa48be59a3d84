#include <doctest.h>

#include "medaudit/error.hpp"
#include "medaudit/logistic.hpp"
#include "medaudit/rng.hpp"

#include <cmath>

using namespace medaudit;

TEST_CASE("logistic fit on a constant feature with y all ones") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(10, 1);
    const std::vector<int> y(10, 1);
    const auto model = fit_logistic(x, y);
    const double one = 1.0;
    CHECK(model.predict({&one, 1}) > 0.95);
    CHECK(model.predict({&one, 1}) < 1.0);
}

TEST_CASE("gradient matches central finite differences") {
    Rng rng(5);
    const int n = 200, p = 3;
    Eigen::MatrixXd x(n, p);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
        y[i] = rng.bernoulli(sigmoid(0.3 + x(i, 0) - 0.5 * x(i, 2))) ? 1 : 0;
    }
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::VectorXd theta(p + 1);
        for (int j = 0; j <= p; ++j) theta(j) = rng.normal();
        const Eigen::VectorXd g = logistic_detail::gradient(x, y, 0.3, theta);
        for (int j = 0; j <= p; ++j) {
            const double h = 1e-5;
            Eigen::VectorXd up = theta, dn = theta;
            up(j) += h;
            dn(j) -= h;
            const double fd = (logistic_detail::objective(x, y, 0.3, up) - logistic_detail::objective(x, y, 0.3, dn)) /
                              (2 * h);
            CHECK(std::abs(fd - g(j)) < 1e-6);
        }
    }
}

TEST_CASE("logistic recovers coefficients within three standard errors") {
    Rng rng(17);
    const int n = 50000;
    const Eigen::Vector3d beta(0.8, -0.5, 0.25);
    const double b0 = -0.4;
    Eigen::MatrixXd x(n, 3);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 3; ++j) x(i, j) = rng.normal() * (j + 1) + j;
        y[i] = rng.bernoulli(sigmoid(b0 + x.row(i).dot(beta))) ? 1 : 0;
    }
    const auto model = fit_logistic(x, y, 1e-4, 1e-8, 100);
    CHECK(model.converged);
    CHECK(model.gradient_norm <= 1e-8);

    // Asymptotic SE from the inverse Fisher information at the truth.
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(4, 4);
    for (int i = 0; i < n; ++i) {
        Eigen::Vector4d xi;
        xi << 1, x(i, 0), x(i, 1), x(i, 2);
        const double p = sigmoid(b0 + x.row(i).dot(beta));
        info += p * (1 - p) * xi * xi.transpose();
    }
    const Eigen::Vector4d se = info.inverse().diagonal().cwiseSqrt();
    CHECK(std::abs(model.intercept - b0) < 3 * se(0));
    for (int j = 0; j < 3; ++j) CHECK(std::abs(model.coefficients(j) - beta(j)) < 3 * se(j + 1));
}

TEST_CASE("fitted optimum has small standardized gradient") {
    Rng rng(23);
    const int n = 3000;
    Eigen::MatrixXd x(n, 2);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.normal() * 50 + 100;
        x(i, 1) = rng.uniform();
        y[i] = rng.bernoulli(sigmoid(0.02 * (x(i, 0) - 100) + x(i, 1))) ? 1 : 0;
    }
    const double l2 = 0.01;
    const auto model = fit_logistic(x, y, l2, 1e-10, 100);
    CHECK(model.converged);
    Eigen::MatrixXd z = (x.rowwise() - model.center.transpose()).array().rowwise() / model.scale.transpose().array();
    Eigen::VectorXd theta(3);
    theta(0) = model.intercept + model.coefficients.dot(model.center);
    theta.tail(2) = model.coefficients.array() * model.scale.array();
    CHECK(logistic_detail::gradient(z, y, l2, theta).norm() < 1e-9);
}

TEST_CASE("predictions stay strictly inside (0, 1) under separation") {
    Eigen::MatrixXd x(20, 1);
    std::vector<int> y(20);
    for (int i = 0; i < 20; ++i) {
        x(i, 0) = i;
        y[i] = i >= 10;
    }
    const auto model = fit_logistic(x, y, 0.0, 1e-8, 30);
    for (double v : {-100.0, 0.0, 9.4, 9.6, 19.0, 1000.0}) {
        const double p = model.predict({&v, 1});
        CHECK(p > 0.0);
        CHECK(p < 1.0);
    }
}

TEST_CASE("logistic input errors") {
    Eigen::MatrixXd x(3, 1);
    x << 0, std::nan(""), 1;
    try {
        fit_logistic(x, {0, 1, 0});
        FAIL("expected NonFiniteInput");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonFiniteInput);
    }
    CHECK_THROWS_AS(fit_logistic(Eigen::MatrixXd::Zero(3, 1), {0, 1}), Error);
}

TEST_CASE("constant feature, all-ones labels, ridge 0.01") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Constant(50, 1, 3.0);
    const auto model = fit_logistic(x, std::vector<int>(50, 1), 0.01, 1e-8, 100);
    const double v = 3.0;
    CHECK(model.intercept > 2.0);
    CHECK(model.predict({&v, 1}) > 0.95);
}

TEST_CASE("balanced labels with an orthogonal feature give p close to one half") {
    Eigen::MatrixXd x(400, 1);
    std::vector<int> y(400);
    for (int i = 0; i < 400; ++i) {
        x(i, 0) = (i / 2) % 2 ? 1.0 : -1.0;
        y[i] = i % 2;
    }
    const auto model = fit_logistic(x, y);
    CHECK(std::abs(model.coefficients(0)) < 1e-8);
    for (double v : {-1.0, 1.0}) CHECK(model.predict({&v, 1}) == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("refitting with a ridge penalty reproduces coefficients") {
    Rng rng(3);
    Eigen::MatrixXd x(500, 2);
    std::vector<int> y(500);
    for (int i = 0; i < 500; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
        y[i] = rng.bernoulli(sigmoid(x(i, 0))) ? 1 : 0;
    }
    const auto a = fit_logistic(x, y, 0.1, 1e-10, 100);
    const auto b = fit_logistic(x, y, 0.1, 1e-10, 100);
    CHECK((a.coefficients - b.coefficients).norm() < 1e-9);
}

TEST_CASE("slow convergence is reported, not thrown") {
    Rng rng(4);
    Eigen::MatrixXd x(200, 1);
    std::vector<int> y(200);
    for (int i = 0; i < 200; ++i) {
        x(i, 0) = rng.normal();
        y[i] = rng.bernoulli(sigmoid(2 * x(i, 0))) ? 1 : 0;
    }
    const auto model = fit_logistic(x, y, 1e-4, 1e-14, 1);
    CHECK_FALSE(model.converged);
    CHECK(model.iterations == 1);
}
