#include "smartboost/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "smartboost/error.hpp"

namespace smartboost::trees {

void TreeConfig::validate() const {
    if (min_leaf < 1) throw Error(ErrorKind::Config, "min_leaf must be >= 1");
    if (max_depth < 1) throw Error(ErrorKind::Config, "max_depth must be >= 1");
}

RegressionTree::RegressionTree(std::vector<Node> nodes, std::size_t feature_dim)
    : nodes_(std::move(nodes)), feature_dim_(feature_dim) {
    if (nodes_.empty()) throw Error(ErrorKind::Format, "tree has no nodes");
    std::vector<int> parents(nodes_.size(), 0);
    for (const auto& n : nodes_) {
        if (n.is_leaf()) {
            if (!std::isfinite(n.value)) throw Error(ErrorKind::Format, "non-finite leaf value");
            continue;
        }
        if (static_cast<std::size_t>(n.feature) >= feature_dim_) {
            throw Error(ErrorKind::Format, "split feature " + std::to_string(n.feature) +
                                               " out of range for feature_dim " + std::to_string(feature_dim_));
        }
        if (!std::isfinite(n.threshold)) throw Error(ErrorKind::Format, "non-finite threshold");
        for (int child : {n.left, n.right}) {
            if (child <= 0 || static_cast<std::size_t>(child) >= nodes_.size()) {
                throw Error(ErrorKind::Format, "child index out of range");
            }
            ++parents[static_cast<std::size_t>(child)];
        }
    }
    for (std::size_t i = 1; i < parents.size(); ++i) {
        if (parents[i] != 1) throw Error(ErrorKind::Format, "tree nodes are not a connected binary tree");
    }
}

RegressionTree RegressionTree::leaf(double value, std::size_t feature_dim) {
    Node n;
    n.value = value;
    return RegressionTree({n}, feature_dim);
}

std::size_t RegressionTree::leaf_index(std::span<const double> features) const noexcept {
    std::size_t i = 0;
    while (!nodes_[i].is_leaf()) {
        const auto& n = nodes_[i];
        i = static_cast<std::size_t>(features[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return i;
}

double RegressionTree::predict_unchecked(std::span<const double> features) const noexcept {
    return nodes_[leaf_index(features)].value;
}

double RegressionTree::predict(std::span<const double> features) const {
    if (features.size() != feature_dim_) {
        throw Error(ErrorKind::Shape, "tree expects " + std::to_string(feature_dim_) + " features, got " +
                                          std::to_string(features.size()));
    }
    return predict_unchecked(features);
}

std::size_t RegressionTree::num_leaves() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

double predict_tree(const RegressionTree& tree, std::span<const double> features) {
    return tree.predict(features);
}

namespace {

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0;  // sum_L^2/n_L + sum_R^2/n_R
};

class Builder {
public:
    Builder(std::span<const RegressionSample> samples, const TreeConfig& config, std::size_t dim)
        : samples_(samples), config_(config), dim_(dim) {}

    std::vector<Node> build() {
        std::vector<std::size_t> idx(samples_.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        grow(idx, 0);
        return std::move(nodes_);
    }

private:
    int grow(std::vector<std::size_t>& idx, int depth) {
        const int self = static_cast<int>(nodes_.size());
        nodes_.emplace_back();

        double sum = 0.0;
        for (auto i : idx) sum += samples_[i].target;
        const double n = static_cast<double>(idx.size());
        nodes_[static_cast<std::size_t>(self)].value = sum / n;

        if (depth >= config_.max_depth) return self;
        if (idx.size() < 2 * static_cast<std::size_t>(config_.min_leaf)) return self;

        const Split split = best_split(idx, sum);
        if (split.feature < 0) return self;

        std::vector<std::size_t> left, right;
        for (auto i : idx) {
            (samples_[i].features[static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right).push_back(i);
        }
        idx.clear();
        idx.shrink_to_fit();

        const int l = grow(left, depth + 1);
        const int r = grow(right, depth + 1);
        auto& node = nodes_[static_cast<std::size_t>(self)];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = l;
        node.right = r;
        return self;
    }

    Split best_split(const std::vector<std::size_t>& idx, double sum) {
        const std::size_t n = idx.size();
        const auto min_leaf = static_cast<std::size_t>(config_.min_leaf);
        const double parent_score = sum * sum / static_cast<double>(n);

        double sum_sq = 0.0;
        for (auto i : idx) sum_sq += samples_[i].target * samples_[i].target;
        // Ignore reductions that are indistinguishable from rounding noise.
        const double min_gain = 1e-12 * (sum_sq + 1.0);

        Split best;
        best.score = parent_score + min_gain;
        std::vector<std::pair<double, double>> column(n);  // (value, target)
        for (std::size_t f = 0; f < dim_; ++f) {
            for (std::size_t j = 0; j < n; ++j) {
                const auto& s = samples_[idx[j]];
                column[j] = {s.features[f], s.target};
            }
            std::sort(column.begin(), column.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            double left_sum = 0.0;
            for (std::size_t j = 0; j + 1 < n; ++j) {
                left_sum += column[j].second;
                const std::size_t n_left = j + 1;
                if (n_left < min_leaf) continue;
                if (n - n_left < min_leaf) break;
                if (!(column[j].first < column[j + 1].first)) continue;
                const double right_sum = sum - left_sum;
                const double score = left_sum * left_sum / static_cast<double>(n_left) +
                                     right_sum * right_sum / static_cast<double>(n - n_left);
                if (score > best.score) {
                    best.score = score;
                    best.feature = static_cast<int>(f);
                    const double lo = column[j].first;
                    const double hi = column[j + 1].first;
                    double mid = lo + (hi - lo) / 2.0;
                    if (!(mid < hi)) mid = lo;
                    best.threshold = mid;
                }
            }
        }
        return best;
    }

    std::span<const RegressionSample> samples_;
    TreeConfig config_;
    std::size_t dim_;
    std::vector<Node> nodes_;
};

}  // namespace

RegressionTree train_tree(std::span<const RegressionSample> samples, const TreeConfig& config) {
    config.validate();
    if (samples.empty()) throw Error(ErrorKind::EmptyData, "no training samples");
    const std::size_t dim = samples.front().features.size();
    for (const auto& s : samples) {
        if (s.features.size() != dim) throw Error(ErrorKind::Shape, "inconsistent feature dimensions");
        if (!std::isfinite(s.target)) throw Error(ErrorKind::Shape, "non-finite regression target");
        for (double v : s.features) {
            if (!std::isfinite(v)) throw Error(ErrorKind::Shape, "non-finite feature value");
        }
    }
    Builder builder(samples, config, dim);
    return RegressionTree(builder.build(), dim);
}

}  // namespace smartboost::trees
