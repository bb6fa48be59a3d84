#pragma once

#include "medaudit/cells.hpp"
#include "medaudit/json.hpp"
#include "medaudit/rng.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace medaudit {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Something that can draw mediator vectors from G_arm( . | w).
class MediatorDistribution {
public:
    virtual ~MediatorDistribution() = default;
    virtual std::size_t dimension() const = 0;
    // Resizes `out` to d x dimension() and fills one draw per row.
    virtual void draw(std::span<const double> w, int arm, std::size_t d, Rng& rng, RowMatrix& out) const = 0;
    virtual Json to_json() const = 0;
};

struct SamplerOptions {
    int bins_per_column = 5;
    std::size_t min_pool = 50;
};

// Cell-empirical conditional sampler: W is cut into a quantile grid, and draws
// for (cell, arm) are taken uniformly with replacement from that cell's
// observed mediators. Pools smaller than min_pool absorb the nearest occupied
// cells (Euclidean distance in bin coordinates, ties by cell key).
class MediatorSampler final : public MediatorDistribution {
public:
    struct Pool {
        std::vector<std::uint32_t> rows;     // donor rows into donors()
        std::vector<std::uint64_t> cells;    // contributing cell keys, nearest first
    };

    MediatorSampler() = default;

    static MediatorSampler fit(const Eigen::MatrixXd& w, const Eigen::MatrixXd& m, const std::vector<int>& a,
                               const SamplerOptions& options = {});

    std::size_t dimension() const override { return static_cast<std::size_t>(donors_.cols()); }
    void draw(std::span<const double> w, int arm, std::size_t d, Rng& rng, RowMatrix& out) const override;
    Json to_json() const override;

    // Resolved pool for the cell containing w. Throws EmptyPool when the arm
    // has no donors at all.
    Pool pool_for(std::span<const double> w, int arm) const;

    const QuantileGrid& grid() const noexcept { return grid_; }
    const RowMatrix& donors() const noexcept { return donors_; }
    const SamplerOptions& options() const noexcept { return options_; }

private:
    Pool resolve(std::uint64_t key, int arm) const;
    const Pool* cached(std::uint64_t key, int arm) const;

    SamplerOptions options_;
    QuantileGrid grid_;
    RowMatrix donors_;
    std::array<std::map<std::uint64_t, std::vector<std::uint32_t>>, 2> own_;
    std::array<std::map<std::uint64_t, Pool>, 2> resolved_;
};

std::vector<Eigen::VectorXd> sample_mediators(const MediatorDistribution& sampler, const Eigen::RowVectorXd& unit_w,
                                              int arm, std::size_t d, std::uint64_t seed);

}  // namespace medaudit
