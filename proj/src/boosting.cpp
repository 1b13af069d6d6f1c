#include "smartboost/boosting.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "smartboost/error.hpp"

namespace smartboost::boosting {

using lattice::Assignment;
using lattice::kNilOption;
using lattice::ScoreTable;
using linking::LinkingExample;

std::string_view to_string(Loss loss) noexcept {
    return loss == Loss::Log ? "log" : "hinge";
}

std::string_view to_string(Mode mode) noexcept {
    return mode == Mode::Structured ? "structured" : "independent";
}

Loss parse_loss(std::string_view name) {
    if (name == "log") return Loss::Log;
    if (name == "hinge") return Loss::Hinge;
    throw Error(ErrorKind::Config, "unknown loss '" + std::string(name) + "'");
}

Mode parse_mode(std::string_view name) {
    if (name == "structured") return Mode::Structured;
    if (name == "independent") return Mode::Independent;
    throw Error(ErrorKind::Config, "unknown mode '" + std::string(name) + "'");
}

void BoostConfig::validate() const {
    if (num_trees < 1) throw Error(ErrorKind::Config, "num_trees must be >= 1");
    if (!(shrinkage > 0.0 && shrinkage <= 1.0)) throw Error(ErrorKind::Config, "shrinkage must be in (0, 1]");
    tree.validate();
}

Ensemble::Ensemble(std::size_t feature_dim, BoostConfig config)
    : feature_dim_(feature_dim), config_(config) {}

void Ensemble::add(trees::RegressionTree tree, double eta) {
    if (tree.feature_dim() != feature_dim_) {
        throw Error(ErrorKind::Shape, "tree feature_dim " + std::to_string(tree.feature_dim()) +
                                          " does not match ensemble feature_dim " + std::to_string(feature_dim_));
    }
    trees_.push_back({std::move(tree), eta});
}

double Ensemble::predict(std::span<const double> features) const {
    if (features.size() != feature_dim_) {
        throw Error(ErrorKind::Shape, "ensemble expects " + std::to_string(feature_dim_) + " features, got " +
                                          std::to_string(features.size()));
    }
    double total = 0.0;
    for (const auto& t : trees_) total += t.eta * t.tree.predict_unchecked(features);
    return total;
}

ScoreTable score_table(const Ensemble& ensemble, const LinkingExample& example) {
    if (example.feature_dim != ensemble.feature_dim()) {
        throw Error(ErrorKind::Shape, "tweet '" + example.tweet.id + "' has feature_dim " +
                                          std::to_string(example.feature_dim) + ", model expects " +
                                          std::to_string(ensemble.feature_dim()));
    }
    ScoreTable scores(example.lattice.size());
    for (std::size_t k = 0; k < scores.size(); ++k) {
        scores[k].resize(example.lattice.num_options(k));
        for (std::size_t u = 0; u < scores[k].size(); ++u) {
            scores[k][u] = ensemble.predict(example.option_features(k, u));
        }
    }
    return scores;
}

namespace {

const Assignment& require_gold(const LinkingExample& example) {
    if (!example.gold) {
        throw Error(ErrorKind::InvalidGold, "tweet '" + example.tweet.id + "' has no gold assignment");
    }
    if (!lattice::is_valid(example.lattice, *example.gold)) {
        throw Error(ErrorKind::InvalidGold, "tweet '" + example.tweet.id + "' gold violates the non-overlap constraint");
    }
    return *example.gold;
}

// Records -g_ku = 1[gold_k = u] - prob[k][u].
std::vector<GradientRecord> records_from_probabilities(const LinkingExample& example, const Assignment& gold,
                                                       const std::vector<std::vector<double>>& prob) {
    std::vector<GradientRecord> out;
    for (std::size_t k = 0; k < prob.size(); ++k) {
        for (std::size_t u = 0; u < prob[k].size(); ++u) {
            const double indicator = gold.choice[k] == u ? 1.0 : 0.0;
            out.push_back({k, u, example.option_features(k, u), indicator - prob[k][u]});
        }
    }
    return out;
}

std::vector<std::vector<double>> per_candidate_softmax(const ScoreTable& scores) {
    std::vector<std::vector<double>> prob(scores.size());
    for (std::size_t k = 0; k < scores.size(); ++k) {
        const double lse = lattice::log_sum_exp(scores[k]);
        prob[k].resize(scores[k].size());
        for (std::size_t u = 0; u < scores[k].size(); ++u) prob[k][u] = std::exp(scores[k][u] - lse);
    }
    return prob;
}

// Loss-augmented decoding: argmax over valid y of S(y) + Hamming(y, y*).
lattice::ViterbiResult augmented_viterbi(const LinkingExample& example, const ScoreTable& scores,
                                         const Assignment& gold) {
    ScoreTable augmented = scores;
    for (std::size_t k = 0; k < augmented.size(); ++k) {
        for (std::size_t u = 0; u < augmented[k].size(); ++u) {
            if (u != gold.choice[k]) augmented[k][u] += 1.0;
        }
    }
    return lattice::viterbi(example.lattice, augmented);
}

}  // namespace

double log_loss(const LinkingExample& example, const ScoreTable& scores) {
    const auto& gold = require_gold(example);
    const double log_z = lattice::log_partition(example.lattice, scores);
    return std::max(0.0, log_z - lattice::assignment_score(example.lattice, scores, gold));
}

double independent_log_loss(const LinkingExample& example, const ScoreTable& scores) {
    const auto& gold = require_gold(example);
    lattice::check_scores(example.lattice, scores);
    double total = 0.0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
        total += lattice::log_sum_exp(scores[k]) - scores[k][gold.choice[k]];
    }
    return std::max(0.0, total);
}

double hinge_loss(const LinkingExample& example, const ScoreTable& scores) {
    const auto& gold = require_gold(example);
    // best.score is already S(y_hat) + Hamming(y_hat, y*).
    const auto best = augmented_viterbi(example, scores, gold);
    return std::max(0.0, best.score - lattice::assignment_score(example.lattice, scores, gold));
}

std::vector<GradientRecord> pointwise_gradients_log(const LinkingExample& example, const ScoreTable& scores) {
    const auto& gold = require_gold(example);
    const auto inference = lattice::marginals(example.lattice, scores);
    return records_from_probabilities(example, gold, inference.marginals);
}

std::vector<GradientRecord> pointwise_gradients_independent(const LinkingExample& example,
                                                            const ScoreTable& scores) {
    const auto& gold = require_gold(example);
    lattice::check_scores(example.lattice, scores);
    return records_from_probabilities(example, gold, per_candidate_softmax(scores));
}

std::vector<GradientRecord> hinge_gradients(const LinkingExample& example, const ScoreTable& scores) {
    const auto& gold = require_gold(example);
    const auto best = augmented_viterbi(example, scores, gold);
    const double gold_score = lattice::assignment_score(example.lattice, scores, gold);
    const bool margin_ok = best.score <= gold_score;  // augmented score of y_hat vs S(y*)

    std::vector<GradientRecord> out;
    for (std::size_t k = 0; k < example.lattice.size(); ++k) {
        for (std::size_t u = 0; u < example.lattice.num_options(k); ++u) {
            double g = 0.0;
            if (!margin_ok) {
                g = (gold.choice[k] == u ? 1.0 : 0.0) - (best.assignment.choice[k] == u ? 1.0 : 0.0);
            }
            out.push_back({k, u, example.option_features(k, u), g});
        }
    }
    return out;
}

std::vector<GradientRecord> gradients(const BoostConfig& config, const LinkingExample& example,
                                      const ScoreTable& scores) {
    if (config.loss == Loss::Hinge) return hinge_gradients(example, scores);
    if (config.mode == Mode::Independent) return pointwise_gradients_independent(example, scores);
    return pointwise_gradients_log(example, scores);
}

double loss_value(const BoostConfig& config, const LinkingExample& example, const ScoreTable& scores) {
    if (config.loss == Loss::Hinge) return hinge_loss(example, scores);
    if (config.mode == Mode::Independent) return independent_log_loss(example, scores);
    return log_loss(example, scores);
}

Assignment decode(Mode mode, const lattice::MentionLattice& lat, const ScoreTable& scores) {
    if (mode == Mode::Structured) return lattice::viterbi(lat, scores).assignment;
    lattice::check_scores(lat, scores);
    Assignment out;
    out.choice.resize(lat.size(), kNilOption);
    for (std::size_t k = 0; k < lat.size(); ++k) {
        for (std::size_t u = 1; u < scores[k].size(); ++u) {
            if (scores[k][u] > scores[k][out.choice[k]]) out.choice[k] = u;
        }
    }
    return out;
}

Ensemble train(std::span<const LinkingExample> corpus, const BoostConfig& config, std::vector<RoundStats>* log) {
    config.validate();
    const std::size_t dim = linking::corpus_feature_dim(corpus);
    for (const auto& ex : corpus) require_gold(ex);

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

    Ensemble ensemble(dim, config);
    std::vector<ScoreTable> cached;
    cached.reserve(corpus.size());
    for (const auto& ex : corpus) cached.push_back(lattice::zero_scores(ex.lattice));

    auto mean_loss = [&] {
        double total = 0.0;
        for (std::size_t i = 0; i < corpus.size(); ++i) total += loss_value(config, corpus[i], cached[i]);
        return total / static_cast<double>(corpus.size());
    };
    if (log) {
        log->clear();
        log->push_back({0, mean_loss(), elapsed()});
    }

    std::vector<trees::RegressionSample> pool;
    for (int m = 1; m <= config.num_trees; ++m) {
        pool.clear();
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            for (const auto& r : gradients(config, corpus[i], cached[i])) {
                pool.push_back({r.features, r.negative_gradient});
            }
        }
        if (pool.empty()) throw Error(ErrorKind::EmptyData, "corpus has no candidates to fit");

        auto tree = trees::train_tree(pool, config.tree);
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            auto& scores = cached[i];
            for (std::size_t k = 0; k < scores.size(); ++k) {
                for (std::size_t u = 0; u < scores[k].size(); ++u) {
                    scores[k][u] += config.shrinkage * tree.predict_unchecked(corpus[i].option_features(k, u));
                }
            }
        }
        ensemble.add(std::move(tree), config.shrinkage);
        if (log) log->push_back({m, mean_loss(), elapsed()});
    }
    return ensemble;
}

std::string training_log_csv(std::span<const RoundStats> log) {
    std::ostringstream os;
    os.precision(17);
    os << "round,train_loss,seconds\n";
    for (const auto& r : log) os << r.round << ',' << r.train_loss << ',' << r.seconds << '\n';
    return os.str();
}

}  // namespace smartboost::boosting
