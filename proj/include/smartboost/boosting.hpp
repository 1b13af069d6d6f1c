#pragma once

// Functional-gradient boosting over factorized structured outputs.
//
// One shared scoring function F(x, y_k = u) = sum_m eta_m h_m(Phi(x, y_k = u))
// is grown tree by tree. Each round pools the point-wise negative functional
// gradients of every (candidate, option) pair across the corpus and fits a
// single regression tree to them.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smartboost/example.hpp"
#include "smartboost/lattice.hpp"
#include "smartboost/tree.hpp"

namespace smartboost::boosting {

enum class Loss { Log, Hinge };
// Structured: gradients and decoding respect the non-overlap constraint.
// Independent: the MART baseline; per-candidate softmax, per-candidate argmax.
enum class Mode { Structured, Independent };

std::string_view to_string(Loss loss) noexcept;
std::string_view to_string(Mode mode) noexcept;
Loss parse_loss(std::string_view name);
Mode parse_mode(std::string_view name);

struct BoostConfig {
    int num_trees = 300;
    double shrinkage = 1.0;
    trees::TreeConfig tree;
    Loss loss = Loss::Log;
    Mode mode = Mode::Structured;
    std::uint64_t seed = 0;  // echoed into the model; training is deterministic

    void validate() const;
    friend bool operator==(const BoostConfig&, const BoostConfig&) = default;
};

struct WeightedTree {
    trees::RegressionTree tree;
    double eta = 1.0;
};

class Ensemble {
public:
    Ensemble(std::size_t feature_dim, BoostConfig config);

    // Throws Shape when the tree's feature_dim differs.
    void add(trees::RegressionTree tree, double eta);

    double predict(std::span<const double> features) const;

    std::size_t feature_dim() const noexcept { return feature_dim_; }
    const BoostConfig& config() const noexcept { return config_; }
    const std::vector<WeightedTree>& trees() const noexcept { return trees_; }
    std::size_t size() const noexcept { return trees_.size(); }

private:
    std::size_t feature_dim_;
    BoostConfig config_;
    std::vector<WeightedTree> trees_;
};

struct GradientRecord {
    std::size_t candidate = 0;
    std::size_t option = 0;
    std::span<const double> features;  // view into the example's feature table
    double negative_gradient = 0.0;
};

struct RoundStats {
    int round = 0;
    double train_loss = 0.0;  // mean per example
    double seconds = 0.0;     // elapsed since training started
};

lattice::ScoreTable score_table(const Ensemble& ensemble, const linking::LinkingExample& example);

// ln Z(x) - S(x, y*). Throws InvalidGold if the gold is missing or invalid.
double log_loss(const linking::LinkingExample& example, const lattice::ScoreTable& scores);
// Sum over candidates of -ln softmax_k(gold_k), ignoring the structure.
double independent_log_loss(const linking::LinkingExample& example, const lattice::ScoreTable& scores);
// max(0, max_y [S(y) + Hamming(y, y*)] - S(y*)) over valid y.
double hinge_loss(const linking::LinkingExample& example, const lattice::ScoreTable& scores);

// -g_ku = 1[y*_k = u] - P(y_k = u | x), with marginals from the lattice.
std::vector<GradientRecord> pointwise_gradients_log(const linking::LinkingExample& example,
                                                    const lattice::ScoreTable& scores);
// Same formula with P replaced by each candidate's own softmax.
std::vector<GradientRecord> pointwise_gradients_independent(const linking::LinkingExample& example,
                                                            const lattice::ScoreTable& scores);
// Subgradient of the Hamming-augmented structured hinge loss.
std::vector<GradientRecord> hinge_gradients(const linking::LinkingExample& example,
                                            const lattice::ScoreTable& scores);

// Dispatches on the config's (loss, mode) pair.
std::vector<GradientRecord> gradients(const BoostConfig& config, const linking::LinkingExample& example,
                                      const lattice::ScoreTable& scores);
double loss_value(const BoostConfig& config, const linking::LinkingExample& example,
                  const lattice::ScoreTable& scores);

// Structured: Viterbi. Independent: per-candidate argmax (Nil wins ties),
// which may link overlapping candidates.
lattice::Assignment decode(Mode mode, const lattice::MentionLattice& lattice, const lattice::ScoreTable& scores);

// Runs the boosting loop for config.num_trees rounds. When `log` is non-null
// it receives round 0 (initial loss) followed by one entry per round.
Ensemble train(std::span<const linking::LinkingExample> corpus, const BoostConfig& config,
               std::vector<RoundStats>* log = nullptr);

std::string training_log_csv(std::span<const RoundStats> log);

}  // namespace smartboost::boosting
