#include "smartboost/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "smartboost/error.hpp"

namespace smartboost::lattice {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Log of the summed weight of turning candidate k on, relative to leaving it
// at Nil: ln sum_{u>=1} exp(F(k,u) - F(k,Nil)). -inf for Nil-only candidates.
std::vector<double> log_gains(const MentionLattice& lattice, const ScoreTable& scores) {
    std::vector<double> gains(lattice.size(), kNegInf);
    std::vector<double> rel;
    for (std::size_t k = 0; k < lattice.size(); ++k) {
        const auto& row = scores[k];
        if (row.size() < 2) continue;
        rel.assign(row.begin() + 1, row.end());
        for (double& r : rel) r -= row[kNilOption];
        gains[k] = log_sum_exp(rel);
    }
    return gains;
}

double nil_total(const ScoreTable& scores) {
    double total = 0.0;
    for (const auto& row : scores) total += row[kNilOption];
    return total;
}

// forward[j] = ln of the summed weight of independent sets drawn from the
// first j candidates in end order.
std::vector<double> forward_table(const MentionLattice& lattice, std::span<const double> gains) {
    const auto order = lattice.by_end();
    std::vector<double> forward(lattice.size() + 1, 0.0);
    for (std::size_t j = 0; j < order.size(); ++j) {
        const std::size_t k = order[j];
        forward[j + 1] = log_add_exp(forward[j], gains[k] + forward[lattice.prev_count(k)]);
    }
    return forward;
}

// backward[k] = ln of the summed weight of independent sets drawn from
// canonical candidates k..K-1.
std::vector<double> backward_table(const MentionLattice& lattice, std::span<const double> gains) {
    const std::size_t K = lattice.size();
    std::vector<double> backward(K + 1, 0.0);
    for (std::size_t k = K; k-- > 0;) {
        backward[k] = log_add_exp(backward[k + 1], gains[k] + backward[lattice.next_free(k)]);
    }
    return backward;
}

}  // namespace

double log_add_exp(double a, double b) noexcept {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double hi = std::max(a, b);
    const double lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

double log_sum_exp(std::span<const double> values) noexcept {
    if (values.empty()) return kNegInf;
    const double hi = *std::max_element(values.begin(), values.end());
    if (hi == kNegInf) return kNegInf;
    double sum = 0.0;
    for (double v : values) sum += std::exp(v - hi);
    return hi + std::log(sum);
}

MentionLattice build_lattice(std::vector<CandidateInput> inputs) {
    MentionLattice lattice;
    lattice.candidates_.reserve(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        auto& in = inputs[i];
        if (in.span.start < 0 || in.span.start >= in.span.end) {
            throw Error(ErrorKind::MalformedSpan, "candidate " + std::to_string(i) + " has span [" +
                                                      std::to_string(in.span.start) + ", " +
                                                      std::to_string(in.span.end) + ")");
        }
        Candidate c;
        c.span = in.span;
        c.source_index = i;
        c.options.reserve(in.entities.size() + 1);
        c.options.emplace_back(kNil);
        for (auto& e : in.entities) {
            if (e != kNil) c.options.push_back(std::move(e));
        }
        lattice.candidates_.push_back(std::move(c));
    }
    std::stable_sort(lattice.candidates_.begin(), lattice.candidates_.end(),
                     [](const Candidate& a, const Candidate& b) { return a.span < b.span; });

    const std::size_t K = lattice.candidates_.size();
    const auto& cands = lattice.candidates_;

    lattice.by_end_.resize(K);
    std::iota(lattice.by_end_.begin(), lattice.by_end_.end(), std::size_t{0});
    std::stable_sort(lattice.by_end_.begin(), lattice.by_end_.end(),
                     [&](std::size_t a, std::size_t b) { return cands[a].span.end < cands[b].span.end; });

    std::vector<int> ends(K);
    for (std::size_t j = 0; j < K; ++j) ends[j] = cands[lattice.by_end_[j]].span.end;
    std::vector<int> starts(K);
    for (std::size_t k = 0; k < K; ++k) starts[k] = cands[k].span.start;

    lattice.prev_count_.resize(K);
    lattice.next_free_.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        lattice.prev_count_[k] = static_cast<std::size_t>(
            std::upper_bound(ends.begin(), ends.end(), cands[k].span.start) - ends.begin());
        lattice.next_free_[k] = static_cast<std::size_t>(
            std::lower_bound(starts.begin(), starts.end(), cands[k].span.end) - starts.begin());
    }
    return lattice;
}

void check_scores(const MentionLattice& lattice, const ScoreTable& scores) {
    if (scores.size() != lattice.size()) {
        throw Error(ErrorKind::Shape, "score table has " + std::to_string(scores.size()) +
                                          " rows, lattice has " + std::to_string(lattice.size()) +
                                          " candidates");
    }
    for (std::size_t k = 0; k < scores.size(); ++k) {
        if (scores[k].size() != lattice.num_options(k)) {
            throw Error(ErrorKind::Shape, "score row " + std::to_string(k) + " has " +
                                              std::to_string(scores[k].size()) + " entries, expected " +
                                              std::to_string(lattice.num_options(k)));
        }
        for (double v : scores[k]) {
            if (!std::isfinite(v)) {
                throw Error(ErrorKind::Shape, "non-finite score in row " + std::to_string(k));
            }
        }
    }
}

bool is_valid(const MentionLattice& lattice, const Assignment& assignment) {
    if (assignment.choice.size() != lattice.size()) return false;
    for (std::size_t k = 0; k < lattice.size(); ++k) {
        if (assignment.choice[k] >= lattice.num_options(k)) return false;
    }
    for (std::size_t i = 0; i < lattice.size(); ++i) {
        if (assignment.choice[i] == kNilOption) continue;
        for (std::size_t j = i + 1; j < lattice.size(); ++j) {
            if (assignment.choice[j] != kNilOption && lattice.overlaps(i, j)) return false;
        }
    }
    return true;
}

double assignment_score(const MentionLattice& lattice, const ScoreTable& scores,
                        const Assignment& assignment) {
    check_scores(lattice, scores);
    if (assignment.choice.size() != lattice.size()) {
        throw Error(ErrorKind::Shape, "assignment length does not match lattice");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < lattice.size(); ++k) {
        if (assignment.choice[k] >= lattice.num_options(k)) {
            throw Error(ErrorKind::Shape, "assignment option out of range");
        }
        total += scores[k][assignment.choice[k]];
    }
    return total;
}

std::size_t count_links(const Assignment& assignment) {
    return static_cast<std::size_t>(std::count_if(assignment.choice.begin(), assignment.choice.end(),
                                                  [](std::size_t c) { return c != kNilOption; }));
}

ScoreTable zero_scores(const MentionLattice& lattice) {
    ScoreTable scores(lattice.size());
    for (std::size_t k = 0; k < lattice.size(); ++k) scores[k].assign(lattice.num_options(k), 0.0);
    return scores;
}

double log_partition(const MentionLattice& lattice, const ScoreTable& scores) {
    check_scores(lattice, scores);
    const auto gains = log_gains(lattice, scores);
    return nil_total(scores) + forward_table(lattice, gains).back();
}

double log_partition_backward(const MentionLattice& lattice, const ScoreTable& scores) {
    check_scores(lattice, scores);
    const auto gains = log_gains(lattice, scores);
    return nil_total(scores) + backward_table(lattice, gains).front();
}

InferenceResult marginals(const MentionLattice& lattice, const ScoreTable& scores) {
    check_scores(lattice, scores);
    const std::size_t K = lattice.size();
    const auto gains = log_gains(lattice, scores);
    const auto forward = forward_table(lattice, gains);
    const auto backward = backward_table(lattice, gains);
    const double log_z_rel = forward.back();

    InferenceResult result;
    result.log_partition = nil_total(scores) + log_z_rel;
    result.marginals.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        const auto& row = scores[k];
        auto& out = result.marginals[k];
        out.assign(row.size(), 0.0);
        if (row.size() < 2) {
            out[kNilOption] = 1.0;
            continue;
        }
        // Sets containing k factor into (sets left of k) x (sets right of k).
        const double log_on = gains[k] + forward[lattice.prev_count(k)] +
                              backward[lattice.next_free(k)] - log_z_rel;
        for (std::size_t u = 1; u < row.size(); ++u) {
            out[u] = std::exp(log_on + (row[u] - row[kNilOption]) - gains[k]);
        }
        out[kNilOption] = std::clamp(-std::expm1(std::min(log_on, 0.0)), 0.0, 1.0);
    }
    return result;
}

ViterbiResult viterbi(const MentionLattice& lattice, const ScoreTable& scores) {
    check_scores(lattice, scores);
    const std::size_t K = lattice.size();

    std::vector<double> gain(K, kNegInf);
    std::vector<std::size_t> best_option(K, kNilOption);
    for (std::size_t k = 0; k < K; ++k) {
        const auto& row = scores[k];
        for (std::size_t u = 1; u < row.size(); ++u) {
            const double g = row[u] - row[kNilOption];
            if (g > gain[k]) {
                gain[k] = g;
                best_option[k] = u;
            }
        }
    }

    // best[k]: max relative gain of an independent set among canonical k..K-1.
    std::vector<double> best(K + 1, 0.0);
    std::vector<double> take(K, kNegInf);
    for (std::size_t k = K; k-- > 0;) {
        if (best_option[k] != kNilOption) take[k] = gain[k] + best[lattice.next_free(k)];
        best[k] = take[k] > best[k + 1] ? take[k] : best[k + 1];
    }

    ViterbiResult result;
    result.assignment.choice.assign(K, kNilOption);
    for (std::size_t k = 0; k < K;) {
        if (take[k] > best[k + 1]) {
            result.assignment.choice[k] = best_option[k];
            k = lattice.next_free(k);
        } else {
            ++k;
        }
    }
    result.score = assignment_score(lattice, scores, result.assignment);
    return result;
}

BruteForceResult brute_force(const MentionLattice& lattice, const ScoreTable& scores,
                             double max_states) {
    check_scores(lattice, scores);
    const std::size_t K = lattice.size();
    double states = 1.0;
    for (std::size_t k = 0; k < K; ++k) states *= static_cast<double>(lattice.num_options(k));
    if (states > max_states) {
        throw Error(ErrorKind::OracleTooLarge,
                    "state space of " + std::to_string(states) + " exceeds " + std::to_string(max_states));
    }

    std::vector<std::vector<char>> overlap(K, std::vector<char>(K, 0));
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = 0; j < K; ++j) overlap[i][j] = lattice.overlaps(i, j) ? 1 : 0;

    // Visits every valid assignment in lexicographic order (candidate 0 most significant).
    auto for_each_valid = [&](auto&& visit) {
        std::vector<std::size_t> choice(K, 0);
        while (true) {
            bool valid = true;
            for (std::size_t i = 0; i < K && valid; ++i) {
                if (choice[i] == kNilOption) continue;
                for (std::size_t j = i + 1; j < K; ++j) {
                    if (choice[j] != kNilOption && overlap[i][j]) {
                        valid = false;
                        break;
                    }
                }
            }
            if (valid) {
                double s = 0.0;
                for (std::size_t k = 0; k < K; ++k) s += scores[k][choice[k]];
                visit(choice, s);
            }
            std::size_t pos = K;
            while (pos > 0) {
                --pos;
                if (++choice[pos] < lattice.num_options(pos)) break;
                choice[pos] = 0;
                if (pos == 0) return;
            }
            if (K == 0) return;
        }
    };

    BruteForceResult out;
    double max_score = kNegInf;
    for_each_valid([&](const std::vector<std::size_t>& choice, double s) {
        if (s > max_score) {
            max_score = s;
            out.best.assignment.choice = choice;
            out.best.score = s;
        }
    });

    double z = 0.0;
    auto& marg = out.inference.marginals;
    marg.resize(K);
    for (std::size_t k = 0; k < K; ++k) marg[k].assign(lattice.num_options(k), 0.0);
    for_each_valid([&](const std::vector<std::size_t>& choice, double s) {
        const double w = std::exp(s - max_score);
        z += w;
        for (std::size_t k = 0; k < K; ++k) marg[k][choice[k]] += w;
    });
    for (auto& row : marg)
        for (double& p : row) p /= z;
    out.inference.log_partition = max_score + std::log(z);
    return out;
}

}  // namespace smartboost::lattice
