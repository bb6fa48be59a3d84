#include "medaudit/mediator_sampler.hpp"

#include "medaudit/error.hpp"

#include <algorithm>
#include <set>
#include <tuple>

namespace medaudit {

MediatorSampler MediatorSampler::fit(const Eigen::MatrixXd& w, const Eigen::MatrixXd& m, const std::vector<int>& a,
                                     const SamplerOptions& options) {
    if (w.rows() != m.rows() || static_cast<Eigen::Index>(a.size()) != w.rows())
        throw Error(ErrorKind::InvalidArgument, "sampler inputs are not row-aligned");
    if (options.min_pool < 1) throw Error(ErrorKind::InvalidArgument, "min_pool must be >= 1");
    MediatorSampler s;
    s.options_ = options;
    s.grid_ = QuantileGrid(w, options.bins_per_column);
    s.donors_ = m;
    std::set<std::uint64_t> occupied;
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        const int arm = a[static_cast<std::size_t>(i)];
        if (arm != 0 && arm != 1) throw Error(ErrorKind::InvalidArgument, "arm labels must be binary");
        const std::uint64_t key = s.grid_.key_of(w, i);
        s.own_[static_cast<std::size_t>(arm)][key].push_back(static_cast<std::uint32_t>(i));
        occupied.insert(key);
    }
    for (int arm = 0; arm < 2; ++arm) {
        if (s.own_[static_cast<std::size_t>(arm)].empty()) continue;
        for (const auto key : occupied) s.resolved_[static_cast<std::size_t>(arm)].emplace(key, s.resolve(key, arm));
    }
    return s;
}

MediatorSampler::Pool MediatorSampler::resolve(std::uint64_t key, int arm) const {
    const auto& own = own_[static_cast<std::size_t>(arm)];
    if (own.empty()) throw Error(ErrorKind::EmptyPool, "no donors for arm " + std::to_string(arm));
    Pool pool;
    const auto it = own.find(key);
    if (it != own.end() && it->second.size() >= options_.min_pool) {
        pool.rows = it->second;
        pool.cells = {key};
        return pool;
    }
    const std::vector<int> target = grid_.decode(key);
    std::vector<std::tuple<long, std::uint64_t>> order;
    order.reserve(own.size());
    for (const auto& [cell, rows] : own) {
        const std::vector<int> c = grid_.decode(cell);
        long d2 = 0;
        for (std::size_t j = 0; j < c.size(); ++j) d2 += static_cast<long>(c[j] - target[j]) * (c[j] - target[j]);
        order.emplace_back(d2, cell);
    }
    std::sort(order.begin(), order.end());
    for (const auto& [d2, cell] : order) {
        const auto& rows = own.at(cell);
        pool.rows.insert(pool.rows.end(), rows.begin(), rows.end());
        pool.cells.push_back(cell);
        if (pool.rows.size() >= options_.min_pool) break;
    }
    return pool;
}

const MediatorSampler::Pool* MediatorSampler::cached(std::uint64_t key, int arm) const {
    const auto& table = resolved_[static_cast<std::size_t>(arm)];
    const auto it = table.find(key);
    return it == table.end() ? nullptr : &it->second;
}

MediatorSampler::Pool MediatorSampler::pool_for(std::span<const double> w, int arm) const {
    if (arm != 0 && arm != 1) throw Error(ErrorKind::InvalidArgument, "arm must be 0 or 1");
    if (w.size() != grid_.columns()) throw Error(ErrorKind::InvalidArgument, "covariate row has the wrong width");
    const std::uint64_t key = grid_.key(grid_.coords(w.data(), 1));
    if (const Pool* p = cached(key, arm)) return *p;
    return resolve(key, arm);
}

void MediatorSampler::draw(std::span<const double> w, int arm, std::size_t d, Rng& rng, RowMatrix& out) const {
    out.resize(static_cast<Eigen::Index>(d), donors_.cols());
    if (d == 0) return;
    if (arm != 0 && arm != 1) throw Error(ErrorKind::InvalidArgument, "arm must be 0 or 1");
    if (w.size() != grid_.columns()) throw Error(ErrorKind::InvalidArgument, "covariate row has the wrong width");
    const std::uint64_t key = grid_.key(grid_.coords(w.data(), 1));
    const Pool* pool = cached(key, arm);
    Pool local;
    if (!pool) {
        local = resolve(key, arm);
        pool = &local;
    }
    const std::uint64_t size = pool->rows.size();
    for (std::size_t t = 0; t < d; ++t)
        out.row(static_cast<Eigen::Index>(t)) = donors_.row(pool->rows[rng.index(size)]);
}

Json MediatorSampler::to_json() const {
    Json j;
    j["strategy"] = "cell-empirical";
    j["bins_per_column"] = grid_.bins_per_column();
    j["min_pool"] = options_.min_pool;
    j["cuts"] = grid_.cuts();
    Json cells = Json::array();
    for (int arm = 0; arm < 2; ++arm) {
        for (const auto& [key, pool] : resolved_[static_cast<std::size_t>(arm)]) {
            const auto own = own_[static_cast<std::size_t>(arm)].find(key);
            Json c;
            c["arm"] = arm;
            c["cell"] = grid_.decode(key);
            c["own_donors"] = own == own_[static_cast<std::size_t>(arm)].end() ? 0 : own->second.size();
            c["pool_size"] = pool.rows.size();
            Json merged = Json::array();
            for (auto cell : pool.cells) merged.push_back(grid_.decode(cell));
            c["merged_cells"] = merged;
            cells.push_back(c);
        }
    }
    j["pools"] = cells;
    return j;
}

std::vector<Eigen::VectorXd> sample_mediators(const MediatorDistribution& sampler, const Eigen::RowVectorXd& unit_w,
                                              int arm, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    RowMatrix draws;
    sampler.draw({unit_w.data(), static_cast<std::size_t>(unit_w.size())}, arm, d, rng, draws);
    std::vector<Eigen::VectorXd> out;
    out.reserve(d);
    for (Eigen::Index t = 0; t < draws.rows(); ++t) out.emplace_back(draws.row(t).transpose());
    return out;
}

}  // namespace medaudit
