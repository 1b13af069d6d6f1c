#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace smartboost::trees {

struct TreeConfig {
    int min_leaf = 30;
    int max_depth = 4;

    void validate() const;
    friend bool operator==(const TreeConfig&, const TreeConfig&) = default;
};

// Features are a view; the caller keeps the underlying storage alive for the
// duration of train_tree.
struct RegressionSample {
    std::span<const double> features;
    double target = 0.0;
};

struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;

    bool is_leaf() const noexcept { return feature < 0; }
    friend bool operator==(const Node&, const Node&) = default;
};

// Axis-aligned binary regression tree. Routing: go left iff x[feature] <= threshold.
class RegressionTree {
public:
    // Validates structure: indices in range, every split feature < feature_dim,
    // node 0 is the root and every node is reachable exactly once.
    RegressionTree(std::vector<Node> nodes, std::size_t feature_dim);

    static RegressionTree leaf(double value, std::size_t feature_dim);

    // Throws Shape when features.size() != feature_dim().
    double predict(std::span<const double> features) const;
    double predict_unchecked(std::span<const double> features) const noexcept;

    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    std::size_t feature_dim() const noexcept { return feature_dim_; }
    std::size_t num_leaves() const noexcept;
    // Index of the leaf reached by routing.
    std::size_t leaf_index(std::span<const double> features) const noexcept;

    friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

private:
    std::vector<Node> nodes_;
    std::size_t feature_dim_ = 0;
};

// Greedy top-down CART on squared error. Candidate thresholds are midpoints of
// consecutive distinct sorted values; ties go to the lower feature index, then
// the lower threshold. A node stays a leaf at max_depth, below 2*min_leaf
// samples, or when no admissible split lowers the squared error. Leaves hold
// the mean target.
RegressionTree train_tree(std::span<const RegressionSample> samples, const TreeConfig& config);

double predict_tree(const RegressionTree& tree, std::span<const double> features);

}  // namespace smartboost::trees
