#include <doctest.h>

#include "medaudit/paths.hpp"
#include "medaudit/rng.hpp"

#include <algorithm>
#include <cmath>

using namespace medaudit;

namespace {

// Linear SCM with mediator effects alpha_j of A and outcome slopes beta_j.
AuditDataset linear_scm(std::size_t n, std::uint64_t seed, const std::vector<double>& alpha,
                        const std::vector<double>& beta) {
    Rng rng(seed);
    const auto p = static_cast<Eigen::Index>(alpha.size());
    Eigen::MatrixXd w(static_cast<Eigen::Index>(n), 1), m(static_cast<Eigen::Index>(n), p);
    std::vector<int> a(n), y(n);
    std::vector<std::string> names;
    for (Eigen::Index j = 0; j < p; ++j) names.push_back("m" + std::to_string(j));
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        w(r, 0) = rng.uniform();
        a[i] = rng.bernoulli(0.3 + 0.4 * w(r, 0));
        double py = 0.2 + 0.05 * a[i] + 0.05 * w(r, 0);
        for (Eigen::Index j = 0; j < p; ++j) {
            m(r, j) = 0.5 * w(r, 0) + alpha[static_cast<std::size_t>(j)] * a[i] + 0.3 * rng.normal();
            py += beta[static_cast<std::size_t>(j)] * (m(r, j) - 0.5);
        }
        y[i] = rng.bernoulli(std::clamp(py, 0.0, 1.0));
    }
    return AuditDataset(w, a, m, y, {"w0"}, names);
}

}  // namespace

TEST_CASE("single mediator takes the whole indirect effect") {
    const auto d = linear_scm(3000, 1, {0.4}, {0.1});
    const auto r = path_specific_effects(d, 0.0437);
    REQUIRE(r.paths.size() == 1);
    CHECK(r.paths[0].allocated == 0.0437);
    CHECK(r.status == AllocationStatus::ok);
}

TEST_CASE("severed treatment to mediator edge allocates little") {
    const auto d = linear_scm(50000, 2, {0.4, 0.0, 0.3}, {0.1, 0.1, 0.08});
    const double iie = 0.06;
    const auto r = path_specific_effects(d, iie);
    CHECK(std::abs(r.paths[1].alpha) < 0.02);
    CHECK(std::abs(r.paths[1].allocated) < 0.1 * iie);
    CHECK(r.paths[0].allocated > r.paths[2].allocated);
    CHECK(r.paths[0].alpha == doctest::Approx(0.4).epsilon(0.05));
}

TEST_CASE("allocations sum to the indirect effect and follow the products") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto d = linear_scm(2000, seed, {0.3, 0.2, 0.25, 0.1}, {0.1, 0.12, 0.05, 0.2});
        const double iie = 0.01 + 0.003 * static_cast<double>(seed);
        const auto r = path_specific_effects(d, iie);
        if (r.status == AllocationStatus::degenerate) continue;
        double sum = 0.0;
        for (const auto& e : r.paths) sum += e.allocated;
        CHECK(std::abs(sum - iie) <= 1e-12);
        if (r.status == AllocationStatus::ok) {
            for (std::size_t i = 0; i < r.paths.size(); ++i)
                for (std::size_t j = 0; j < r.paths.size(); ++j)
                    if (std::abs(r.paths[i].product) > std::abs(r.paths[j].product) * (1 + 1e-9))
                        CHECK(std::abs(r.paths[i].allocated) >= std::abs(r.paths[j].allocated));
        }
    }
}

TEST_CASE("least squares satisfies the normal equations") {
    Rng rng(4);
    Eigen::MatrixXd x(500, 6);
    Eigen::VectorXd y(500);
    for (int i = 0; i < 500; ++i) {
        for (int j = 0; j < 6; ++j) x(i, j) = rng.normal();
        y(i) = rng.normal();
    }
    const Eigen::VectorXd b = ordinary_least_squares(x, y);
    CHECK((x.transpose() * (y - x * b)).norm() < 1e-8);
}

TEST_CASE("permuting rows leaves the decomposition unchanged") {
    const auto d = linear_scm(1500, 6, {0.3, 0.2}, {0.1, 0.1});
    const auto n = static_cast<Eigen::Index>(d.n());
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = n - 1 - i;
    Eigen::MatrixXd w(n, 1), m(n, 2);
    std::vector<int> a(d.n()), y(d.n());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto src = order[static_cast<std::size_t>(i)];
        w.row(i) = d.w().row(src);
        m.row(i) = d.m().row(src);
        a[static_cast<std::size_t>(i)] = d.a()[static_cast<std::size_t>(src)];
        y[static_cast<std::size_t>(i)] = d.y()[static_cast<std::size_t>(src)];
    }
    const AuditDataset shuffled(w, a, m, y, d.w_names(), d.m_names());
    const auto r1 = path_specific_effects(d, 0.05);
    const auto r2 = path_specific_effects(shuffled, 0.05);
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(r1.paths[j].product == doctest::Approx(r2.paths[j].product).epsilon(1e-9));
        CHECK(r1.paths[j].allocated == doctest::Approx(r2.paths[j].allocated).epsilon(1e-9));
    }
}

TEST_CASE("degenerate and mixed-sign allocations are flagged") {
    const auto none = linear_scm(3000, 7, {0.0, 0.0}, {0.0, 0.0});
    // Mediator is a function of W only, so alpha is zero up to rounding.
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(none.n()), 1);
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, 0) = none.w()(i, 0);
    const AuditDataset flat(none.w(), none.a(), m, none.y(), none.w_names(), {"m0"});
    const auto r = path_specific_effects(flat, 0.02);
    CHECK(r.status == AllocationStatus::degenerate);
    CHECK(std::isnan(r.paths[0].allocated));
    CHECK(to_json(r)["status"] == "degenerate");

    const auto mixed = path_specific_effects(linear_scm(20000, 8, {0.4, 0.4}, {0.15, -0.05}), 0.03);
    CHECK(mixed.status == AllocationStatus::mixed_sign);
    CHECK(mixed.paths[1].allocated < 0);
    CHECK(std::abs(mixed.paths[0].allocated + mixed.paths[1].allocated - 0.03) <= 1e-12);
}
