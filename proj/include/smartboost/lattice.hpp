#pragma once

// Non-overlapping mention lattice and exact inference over it.
//
// A valid assignment picks one option per candidate (Nil or an entity) such
// that no two candidates with intersecting token spans are both non-Nil.
// Scores decompose per candidate, so every quantity here is a sum over the
// valid assignments of exp(sum_k F(k, y_k)), computed in log space.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace smartboost::lattice {

inline constexpr std::string_view kNil = "NIL";
inline constexpr std::size_t kNilOption = 0;

struct MentionSpan {
    int start = 0;  // inclusive token index
    int end = 0;    // exclusive token index

    int length() const noexcept { return end - start; }
    bool overlaps(const MentionSpan& other) const noexcept {
        return start < other.end && other.start < end;
    }
    friend bool operator==(const MentionSpan&, const MentionSpan&) = default;
    friend auto operator<=>(const MentionSpan&, const MentionSpan&) = default;
};

struct CandidateInput {
    MentionSpan span;
    std::vector<std::string> entities;  // Nil may be listed; it is moved to index 0
};

struct Candidate {
    MentionSpan span;
    std::vector<std::string> options;  // options[0] == kNil
    std::size_t source_index = 0;      // position in the input list
};

class MentionLattice {
public:
    MentionLattice() = default;

    std::size_t size() const noexcept { return candidates_.size(); }
    bool empty() const noexcept { return candidates_.empty(); }
    const Candidate& operator[](std::size_t k) const { return candidates_[k]; }
    std::span<const Candidate> candidates() const noexcept { return candidates_; }
    std::size_t num_options(std::size_t k) const { return candidates_[k].options.size(); }
    bool overlaps(std::size_t i, std::size_t j) const {
        return i != j && candidates_[i].span.overlaps(candidates_[j].span);
    }

    // Candidates in ascending end order (ties by canonical index).
    std::span<const std::size_t> by_end() const noexcept { return by_end_; }
    // Number of candidates whose span ends at or before k's start; those are
    // exactly the first prev_count(k) entries of by_end().
    std::size_t prev_count(std::size_t k) const { return prev_count_[k]; }
    // First canonical index whose span starts at or after k's end (size() if none).
    std::size_t next_free(std::size_t k) const { return next_free_[k]; }

    friend MentionLattice build_lattice(std::vector<CandidateInput> inputs);

private:
    std::vector<Candidate> candidates_;
    std::vector<std::size_t> by_end_;
    std::vector<std::size_t> prev_count_;
    std::vector<std::size_t> next_free_;
};

// Canonicalizes candidates: sorted by (start, end), input order breaks ties,
// Nil placed at option index 0. Throws MalformedSpan for start >= end or start < 0.
MentionLattice build_lattice(std::vector<CandidateInput> inputs);

// scores[k][u] = F(x, y_k = u); row k has num_options(k) entries.
using ScoreTable = std::vector<std::vector<double>>;

struct Assignment {
    std::vector<std::size_t> choice;  // option index per candidate
    friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct InferenceResult {
    double log_partition = 0.0;
    std::vector<std::vector<double>> marginals;  // same shape as the score table
};

struct ViterbiResult {
    Assignment assignment;
    double score = 0.0;
};

struct BruteForceResult {
    InferenceResult inference;
    ViterbiResult best;
};

inline constexpr double kMaxOracleStates = 1e6;

// Throws Shape when the table does not match the lattice or holds non-finite values.
void check_scores(const MentionLattice& lattice, const ScoreTable& scores);

bool is_valid(const MentionLattice& lattice, const Assignment& assignment);
double assignment_score(const MentionLattice& lattice, const ScoreTable& scores,
                        const Assignment& assignment);
std::size_t count_links(const Assignment& assignment);

ScoreTable zero_scores(const MentionLattice& lattice);

double log_partition(const MentionLattice& lattice, const ScoreTable& scores);
// Same quantity from the start-ordered (backward) recursion.
double log_partition_backward(const MentionLattice& lattice, const ScoreTable& scores);

InferenceResult marginals(const MentionLattice& lattice, const ScoreTable& scores);

// Highest-scoring valid assignment. Among equal scores the lexicographically
// smallest option vector wins: Nil before entities, lower option index first,
// earlier candidates resolved first.
ViterbiResult viterbi(const MentionLattice& lattice, const ScoreTable& scores);

// Exhaustive enumeration; throws OracleTooLarge when the option product exceeds max_states.
BruteForceResult brute_force(const MentionLattice& lattice, const ScoreTable& scores,
                             double max_states = kMaxOracleStates);

double log_add_exp(double a, double b) noexcept;
double log_sum_exp(std::span<const double> values) noexcept;

}  // namespace smartboost::lattice
