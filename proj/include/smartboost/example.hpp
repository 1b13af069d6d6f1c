#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smartboost/lattice.hpp"

namespace smartboost::linking {

struct Tweet {
    std::string id;
    std::vector<std::string> tokens;
};

// One tweet ready for training or prediction: its lattice, a dense feature
// vector Phi(x, y_k = u) for every (candidate, option) including Nil, and the
// gold assignment when known.
struct LinkingExample {
    Tweet tweet;
    lattice::MentionLattice lattice;
    std::vector<std::vector<std::vector<double>>> features;  // [candidate][option][dim]
    std::size_t feature_dim = 0;
    std::optional<lattice::Assignment> gold;

    std::span<const double> option_features(std::size_t k, std::size_t u) const {
        return features[k][u];
    }

    // Throws Shape on feature-table mismatch, InvalidGold when the gold
    // assignment is present but violates the non-overlap constraint.
    void validate() const;
};

// Validates every example and that they share one feature_dim. Throws
// EmptyData on an empty corpus.
std::size_t corpus_feature_dim(std::span<const LinkingExample> corpus);

}  // namespace smartboost::linking
