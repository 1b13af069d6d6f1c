#include "smartboost/example.hpp"

#include <cmath>

#include "smartboost/error.hpp"

namespace smartboost::linking {

void LinkingExample::validate() const {
    const std::string where = "tweet '" + tweet.id + "': ";
    if (features.size() != lattice.size()) {
        throw Error(ErrorKind::Shape, where + "feature table does not match candidate count");
    }
    for (std::size_t k = 0; k < lattice.size(); ++k) {
        if (features[k].size() != lattice.num_options(k)) {
            throw Error(ErrorKind::Shape, where + "feature table does not match option count");
        }
        for (const auto& f : features[k]) {
            if (f.size() != feature_dim) {
                throw Error(ErrorKind::Shape, where + "feature vector of length " + std::to_string(f.size()) +
                                                  ", expected " + std::to_string(feature_dim));
            }
            for (double v : f) {
                if (!std::isfinite(v)) throw Error(ErrorKind::Shape, where + "non-finite feature value");
            }
        }
    }
    if (gold && !lattice::is_valid(lattice, *gold)) {
        throw Error(ErrorKind::InvalidGold, where + "gold assignment is not a valid non-overlapping assignment");
    }
}

std::size_t corpus_feature_dim(std::span<const LinkingExample> corpus) {
    if (corpus.empty()) throw Error(ErrorKind::EmptyData, "corpus is empty");
    const std::size_t dim = corpus.front().feature_dim;
    for (const auto& ex : corpus) {
        if (ex.feature_dim != dim) {
            throw Error(ErrorKind::Shape, "tweet '" + ex.tweet.id + "' has feature_dim " +
                                              std::to_string(ex.feature_dim) + ", corpus uses " +
                                              std::to_string(dim));
        }
        ex.validate();
    }
    return dim;
}

}  // namespace smartboost::linking
