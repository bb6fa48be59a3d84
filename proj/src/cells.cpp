#include "medaudit/cells.hpp"

#include "medaudit/error.hpp"

#include <algorithm>

namespace medaudit {

QuantileGrid::QuantileGrid(const Eigen::MatrixXd& w, int bins_per_column) : bins_per_column_(bins_per_column) {
    if (bins_per_column < 1) throw Error(ErrorKind::InvalidArgument, "bins_per_column must be >= 1");
    const Eigen::Index n = w.rows();
    cuts_.resize(static_cast<std::size_t>(w.cols()));
    std::vector<double> sorted(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
        for (Eigen::Index i = 0; i < n; ++i) sorted[static_cast<std::size_t>(i)] = w(i, j);
        std::sort(sorted.begin(), sorted.end());
        auto& cuts = cuts_[static_cast<std::size_t>(j)];
        if (n == 0) continue;
        for (int b = 1; b < bins_per_column; ++b) {
            const auto pos = static_cast<std::size_t>((static_cast<long long>(b) * n) / bins_per_column);
            const double cut = sorted[std::min(pos, sorted.size() - 1)];
            if (cuts.empty() || cut > cuts.back()) cuts.push_back(cut);
        }
    }
}

std::vector<int> QuantileGrid::coords(const double* row, Eigen::Index stride) const {
    std::vector<int> out(cuts_.size());
    for (std::size_t j = 0; j < cuts_.size(); ++j) {
        const double x = row[static_cast<Eigen::Index>(j) * stride];
        const auto& cuts = cuts_[j];
        out[j] = static_cast<int>(std::lower_bound(cuts.begin(), cuts.end(), x) - cuts.begin());
    }
    return out;
}

std::uint64_t QuantileGrid::key(const std::vector<int>& coords) const {
    std::uint64_t k = 0;
    for (int c : coords) k = k * static_cast<std::uint64_t>(bins_per_column_) + static_cast<std::uint64_t>(c);
    return k;
}

std::vector<int> QuantileGrid::decode(std::uint64_t key) const {
    std::vector<int> out(cuts_.size());
    for (std::size_t j = cuts_.size(); j-- > 0;) {
        out[j] = static_cast<int>(key % static_cast<std::uint64_t>(bins_per_column_));
        key /= static_cast<std::uint64_t>(bins_per_column_);
    }
    return out;
}

}  // namespace medaudit
