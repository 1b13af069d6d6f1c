#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "smartboost/boosting.hpp"
#include "smartboost/example.hpp"
#include "smartboost/lattice.hpp"

namespace smartboost::linking {

struct LexiconEntry {
    std::string entity;
    double anchor_prob = 0.0;
    std::int64_t count = 0;
};

// Lowercase surface form -> candidate entities.
class Lexicon {
public:
    // Throws Config on a duplicate entity for the surface, anchor_prob outside
    // [0, 1] or a negative count.
    void add(std::string_view surface, LexiconEntry entry);

    const std::vector<LexiconEntry>* find(std::string_view surface) const;
    std::size_t size() const noexcept { return entries_.size(); }

private:
    std::map<std::string, std::vector<LexiconEntry>, std::less<>> entries_;
};

std::string to_lower(std::string_view text);

inline constexpr int kDefaultMaxNgram = 6;

// Every n-gram (n <= max_ngram) whose lowercase space-joined form is a lexicon
// surface becomes one candidate; output sorted by (start, end).
std::vector<lattice::CandidateInput> generate_candidates(const Tweet& tweet, const Lexicon& lexicon,
                                                         int max_ngram = kDefaultMaxNgram);

// Column layout of basic_features before any passthrough columns.
enum BasicFeature : std::size_t {
    kAnchorProb = 0,
    kLogCount,
    kSpanLength,
    kCapitalizationRatio,
    kSurfaceEntityCount,
    kNilIndicator,
    kBasicFeatureCount,
};

// Self-contained lexicon features for one (candidate, option). Entity-specific
// columns are 0 for Nil. `passthrough` is appended verbatim.
std::vector<double> basic_features(const Tweet& tweet, lattice::MentionSpan span, std::string_view entity,
                                   const Lexicon& lexicon, std::span<const double> passthrough = {});

struct GoldLink {
    lattice::MentionSpan span;
    std::string entity;
};

// Candidate generation + basic_features for every option. When `gold` is given
// each candidate whose span and entity match a gold link takes that entity,
// all others Nil.
LinkingExample featurize(const Tweet& tweet, const Lexicon& lexicon, int max_ngram = kDefaultMaxNgram,
                         const std::vector<GoldLink>* gold = nullptr);

// entity -> pages linking to it.
class LinkGraph {
public:
    void add_edge(std::string_view entity, std::string_view page);
    // Empty set for unknown entities.
    const std::set<std::string>& pages(std::string_view entity) const;
    std::size_t num_entities() const noexcept { return edges_.size(); }
    const std::map<std::string, std::set<std::string>, std::less<>>& edges() const noexcept { return edges_; }

private:
    std::map<std::string, std::set<std::string>, std::less<>> edges_;
};

// |pages(e) & pages(others)| / |pages(e) | pages(others)| where "others" is
// every first-stage entity except `entity`; 0 when the union is empty.
double jaccard(std::string_view entity, const std::set<std::string>& first_stage_entities, const LinkGraph& graph);

inline constexpr std::size_t kEntityEntityFeatureCount = 2;

// Appends [jaccard, is_max] to every option (Nil gets [0, 0]). is_max is 1 for
// every entity of the candidate attaining the candidate's maximum jaccard, when
// that maximum is positive.
LinkingExample entity_entity_features(const LinkingExample& example, const lattice::Assignment& first_stage,
                                      const LinkGraph& graph);

// F(x, y_k = Nil) += b for every candidate.
lattice::ScoreTable apply_nil_bias(lattice::ScoreTable scores, double bias);

// One- or two-stage trained model.
struct LinkingModel {
    boosting::Ensemble stage1;
    std::optional<boosting::Ensemble> stage2;

    bool two_stage() const noexcept { return stage2.has_value(); }
    boosting::Mode mode() const noexcept { return stage1.config().mode; }
};

// Stage-one decoding (bias 0) used to derive entity-entity features.
lattice::Assignment first_stage_prediction(const boosting::Ensemble& stage1, const LinkingExample& example);

std::pair<boosting::Ensemble, boosting::Ensemble> two_stage_train(
    std::span<const LinkingExample> corpus, const boosting::BoostConfig& config, const LinkGraph& graph,
    std::vector<boosting::RoundStats>* stage1_log = nullptr, std::vector<boosting::RoundStats>* stage2_log = nullptr);

// Final score table used for decoding (stage two when present), Nil bias applied.
// `graph` is required for two-stage models.
lattice::ScoreTable final_scores(const LinkingModel& model, const LinkingExample& example, double nil_bias,
                                 const LinkGraph* graph);

lattice::Assignment predict(const LinkingModel& model, const LinkingExample& example, double nil_bias,
                            const LinkGraph* graph);

}  // namespace smartboost::linking
