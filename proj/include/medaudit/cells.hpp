#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace medaudit {

// Per-column quantile grid over covariates. Cut points are order statistics
// of the fitting sample with duplicates removed, so discrete columns get one
// bin per observed level (up to `bins_per_column`).
class QuantileGrid {
public:
    QuantileGrid() = default;
    QuantileGrid(const Eigen::MatrixXd& w, int bins_per_column);

    // Bin coordinate of each column for one covariate row.
    std::vector<int> coords(const double* row, Eigen::Index stride) const;
    std::vector<int> coords(const Eigen::RowVectorXd& row) const { return coords(row.data(), 1); }

    std::uint64_t key(const std::vector<int>& coords) const;
    std::vector<int> decode(std::uint64_t key) const;

    std::uint64_t key_of(const Eigen::MatrixXd& w, Eigen::Index row) const {
        return key(coords(w.data() + row, w.rows()));
    }

    const std::vector<std::vector<double>>& cuts() const noexcept { return cuts_; }
    int bins_per_column() const noexcept { return bins_per_column_; }
    std::size_t columns() const noexcept { return cuts_.size(); }

    static QuantileGrid from_cuts(std::vector<std::vector<double>> cuts, int bins_per_column) {
        QuantileGrid g;
        g.cuts_ = std::move(cuts);
        g.bins_per_column_ = bins_per_column;
        return g;
    }

private:
    std::vector<std::vector<double>> cuts_;
    int bins_per_column_ = 5;
};

}  // namespace medaudit
