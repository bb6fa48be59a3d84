#include "medaudit/boosted_trees.hpp"

#include "medaudit/error.hpp"
#include "medaudit/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace medaudit {

double RegressionTree::predict(std::span<const double> x) const {
    int v = 0;
    while (nodes[static_cast<std::size_t>(v)].feature >= 0) {
        const TreeNode& node = nodes[static_cast<std::size_t>(v)];
        v = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    }
    return nodes[static_cast<std::size_t>(v)].value;
}

int RegressionTree::depth() const {
    std::vector<std::pair<int, int>> stack{{0, 0}};
    int best = 0;
    while (!stack.empty()) {
        auto [v, d] = stack.back();
        stack.pop_back();
        const TreeNode& node = nodes[static_cast<std::size_t>(v)];
        if (node.feature < 0) {
            best = std::max(best, d);
        } else {
            stack.emplace_back(node.left, d + 1);
            stack.emplace_back(node.right, d + 1);
        }
    }
    return best;
}

double BoostedTreesModel::margin(std::span<const double> x) const {
    double f = base_score;
    for (const auto& tree : trees) f += tree.predict(x);
    return f;
}

double BoostedTreesModel::predict(std::span<const double> x) const {
    constexpr double kEdge = 1e-12;
    return std::clamp(sigmoid(margin(x)), kEdge, 1.0 - kEdge);
}

Json BoostedTreesModel::to_json() const {
    Json j;
    j["type"] = "boosted_trees";
    j["base_score"] = base_score;
    j["learning_rate"] = learning_rate;
    j["n_estimators"] = n_estimators;
    j["max_depth"] = max_depth;
    Json trees_json = Json::array();
    for (const auto& tree : trees) {
        Json nodes = Json::array();
        for (const auto& node : tree.nodes) {
            if (node.feature < 0)
                nodes.push_back({{"leaf", node.value}});
            else
                nodes.push_back({{"feature", node.feature},
                                 {"threshold", node.threshold},
                                 {"left", node.left},
                                 {"right", node.right}});
        }
        trees_json.push_back(nodes);
    }
    j["trees"] = trees_json;
    return j;
}

namespace {

double mean_log_loss(const std::vector<double>& margin, const std::vector<int>& y) {
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += softplus(margin[i]) - y[i] * margin[i];
    return s / static_cast<double>(y.size());
}

struct Binned {
    std::vector<std::vector<double>> cuts;      // per feature, ascending thresholds
    std::vector<std::vector<std::uint16_t>> bin;  // per feature, per row
};

// Bin b holds values in (cuts[b-1], cuts[b]]; the last bin holds values above every cut.
Binned bin_features(const Eigen::MatrixXd& x, int max_bins) {
    const auto n = static_cast<std::size_t>(x.rows());
    Binned out;
    out.cuts.resize(static_cast<std::size_t>(x.cols()));
    out.bin.resize(static_cast<std::size_t>(x.cols()));
    std::vector<double> sorted(n);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        for (std::size_t i = 0; i < n; ++i) sorted[i] = x(static_cast<Eigen::Index>(i), j);
        std::sort(sorted.begin(), sorted.end());
        auto& cuts = out.cuts[static_cast<std::size_t>(j)];
        for (int b = 1; b < max_bins; ++b) {
            const double c = sorted[std::min(n - 1, static_cast<std::size_t>(b) * n / static_cast<std::size_t>(max_bins))];
            if (c < sorted.back() && (cuts.empty() || c > cuts.back())) cuts.push_back(c);
        }
        auto& bins = out.bin[static_cast<std::size_t>(j)];
        bins.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double v = x(static_cast<Eigen::Index>(i), j);
            bins[i] = static_cast<std::uint16_t>(std::lower_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
        }
    }
    return out;
}

struct Builder {
    const Binned& binned;
    const std::vector<double>& grad;
    const std::vector<double>& hess;
    const BoostingOptions& options;
    RegressionTree tree;

    int grow(std::vector<std::size_t>& rows, int depth) {
        double g_total = 0, h_total = 0;
        for (auto i : rows) {
            g_total += grad[i];
            h_total += hess[i];
        }
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({});
        tree.nodes.back().value = -g_total / (h_total + options.l2_leaf) * options.learning_rate;
        if (depth >= options.max_depth || rows.size() < 2) return id;

        const double parent = g_total * g_total / (h_total + options.l2_leaf);
        double best_gain = 1e-12;
        int best_feature = -1;
        int best_bin = -1;
        std::vector<double> hg, hh;
        for (std::size_t j = 0; j < binned.cuts.size(); ++j) {
            const auto n_cuts = binned.cuts[j].size();
            if (n_cuts == 0) continue;
            hg.assign(n_cuts + 1, 0.0);
            hh.assign(n_cuts + 1, 0.0);
            const auto& bins = binned.bin[j];
            for (auto i : rows) {
                hg[bins[i]] += grad[i];
                hh[bins[i]] += hess[i];
            }
            double gl = 0, hl = 0;
            for (std::size_t b = 0; b < n_cuts; ++b) {
                gl += hg[b];
                hl += hh[b];
                const double gr = g_total - gl, hr = h_total - hl;
                if (hl < options.min_child_hessian || hr < options.min_child_hessian) continue;
                const double gain = gl * gl / (hl + options.l2_leaf) + gr * gr / (hr + options.l2_leaf) - parent;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = static_cast<int>(j);
                    best_bin = static_cast<int>(b);
                }
            }
        }
        if (best_feature < 0) return id;

        const auto& bins = binned.bin[static_cast<std::size_t>(best_feature)];
        std::vector<std::size_t> left, right;
        for (auto i : rows) (bins[i] <= best_bin ? left : right).push_back(i);
        rows.clear();
        rows.shrink_to_fit();
        tree.nodes[static_cast<std::size_t>(id)].feature = best_feature;
        tree.nodes[static_cast<std::size_t>(id)].threshold =
            binned.cuts[static_cast<std::size_t>(best_feature)][static_cast<std::size_t>(best_bin)];
        const int l = grow(left, depth + 1);
        const int r = grow(right, depth + 1);
        tree.nodes[static_cast<std::size_t>(id)].left = l;
        tree.nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    }
};

}  // namespace

BoostedTreesModel fit_boosted_trees(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                                    const BoostingOptions& options) {
    const auto n = static_cast<std::size_t>(features.rows());
    if (labels.size() != n) throw Error(ErrorKind::InvalidArgument, "features and labels are not row-aligned");
    if (n == 0) throw Error(ErrorKind::InvalidArgument, "cannot fit on zero rows");
    if (options.n_estimators < 1) throw Error(ErrorKind::InvalidArgument, "n_estimators must be >= 1");
    if (options.max_depth < 1) throw Error(ErrorKind::InvalidArgument, "max_depth must be >= 1");
    if (options.max_bins < 2 || options.max_bins > 65535) throw Error(ErrorKind::InvalidArgument, "max_bins out of range");
    if (!(options.learning_rate > 0)) throw Error(ErrorKind::InvalidArgument, "learning_rate must be > 0");
    if (!features.allFinite()) throw Error(ErrorKind::NonFiniteInput, "boosting features contain NaN or inf");
    for (int v : labels)
        if (v != 0 && v != 1) throw Error(ErrorKind::InvalidArgument, "labels must be binary");

    BoostedTreesModel model;
    model.learning_rate = options.learning_rate;
    model.n_estimators = options.n_estimators;
    model.max_depth = options.max_depth;
    model.n_features = static_cast<std::size_t>(features.cols());
    double ybar = 0;
    for (int v : labels) ybar += v;
    ybar = std::clamp(ybar / static_cast<double>(n), 1e-6, 1 - 1e-6);
    model.base_score = std::log(ybar / (1 - ybar));

    const Binned binned = bin_features(features, options.max_bins);
    std::vector<double> margin(n, model.base_score), candidate(n), grad(n), hess(n);
    double loss = mean_log_loss(margin, labels);
    model.train_loss.push_back(loss);
    std::vector<double> row(model.n_features);

    for (int round = 0; round < options.n_estimators; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(margin[i]);
            grad[i] = p - labels[i];
            hess[i] = p * (1 - p);
        }
        Builder builder{binned, grad, hess, options, {}};
        std::vector<std::size_t> rows(n);
        for (std::size_t i = 0; i < n; ++i) rows[i] = i;
        builder.grow(rows, 0);
        RegressionTree tree = std::move(builder.tree);

        std::vector<double> step(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < model.n_features; ++j) row[j] = features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            step[i] = tree.predict(row);
        }
        // Halve the tree until the training loss does not increase.
        double scale = 1.0;
        double new_loss = loss;
        for (int attempt = 0; attempt < 30; ++attempt) {
            for (std::size_t i = 0; i < n; ++i) candidate[i] = margin[i] + scale * step[i];
            new_loss = mean_log_loss(candidate, labels);
            if (new_loss <= loss) break;
            scale *= 0.5;
        }
        if (new_loss > loss) {
            scale = 0.0;
            new_loss = loss;
            candidate = margin;
        }
        if (scale != 1.0)
            for (auto& node : tree.nodes) node.value *= scale;
        margin.swap(candidate);
        loss = new_loss;
        model.train_loss.push_back(loss);
        model.trees.push_back(std::move(tree));
    }
    return model;
}

}  // namespace medaudit
