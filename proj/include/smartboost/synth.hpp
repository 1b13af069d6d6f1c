#pragma once

// Deterministic synthetic entity-linking corpora with a planted nonlinear
// scorer, used where real annotated tweets cannot be shipped.
//
// Each tweet belongs to a topic. Option scores are
//   planted(e) = interaction(z) + coherence * [topic(e) == tweet topic] - offset
// where z are latent per-option features and interaction() is an XOR (or
// product) of thresholds, so linear scorers underfit. The topic bonus is
// invisible in the features but recoverable from the link graph, where
// entities of one topic share linking pages. Gold = Viterbi of the planted
// scores with Nil at 0; observed features = z + Gaussian noise.

#include <cstdint>
#include <string_view>
#include <vector>

#include "smartboost/example.hpp"
#include "smartboost/lattice.hpp"
#include "smartboost/linking.hpp"

namespace smartboost::synth {

enum class Nonlinearity { Xor, ThresholdProduct };

std::string_view to_string(Nonlinearity n) noexcept;
Nonlinearity parse_nonlinearity(std::string_view name);

struct SynthConfig {
    std::uint64_t seed = 7;
    int num_tweets = 715;  // 70/15/15 split: 500 train, 107 dev, 108 test
    int tokens_per_tweet = 14;
    double candidate_density = 0.35;
    int max_entities = 3;
    int feature_dim = 7;  // latent columns + one Nil indicator column
    double overlap_rate = 0.5;
    Nonlinearity nonlinearity = Nonlinearity::Xor;
    double noise = 0.1;
    double coherence = 1.5;
    int num_topics = 12;
    int entities_per_topic = 10;
    int pages_per_topic = 30;

    // Throws Config on counts < 1, rates outside [0, 1], feature_dim < 5, noise < 0.
    void validate() const;
};

struct SynthSplit {
    std::vector<linking::LinkingExample> examples;
    std::vector<lattice::ScoreTable> planted;  // noise-free planted scores per example
};

struct SynthCorpus {
    SynthSplit train;
    SynthSplit dev;
    SynthSplit test;
    linking::LinkGraph graph;
};

SynthCorpus generate(const SynthConfig& config);

}  // namespace smartboost::synth
