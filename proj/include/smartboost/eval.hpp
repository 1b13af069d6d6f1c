#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smartboost/example.hpp"
#include "smartboost/lattice.hpp"
#include "smartboost/linking.hpp"

namespace smartboost::eval {

struct Link {
    lattice::MentionSpan span;
    std::string entity;
    friend bool operator==(const Link&, const Link&) = default;
};

// Non-Nil links for one tweet.
struct LinkPrediction {
    std::string tweet_id;
    std::vector<Link> links;
    friend bool operator==(const LinkPrediction&, const LinkPrediction&) = default;
};

struct MetricsReport {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    static MetricsReport from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn);
};

LinkPrediction to_prediction(const linking::LinkingExample& example, const lattice::Assignment& assignment);
// Gold links of an annotated example. Throws InvalidGold when absent.
LinkPrediction gold_links(const linking::LinkingExample& example);

// Overlap-relaxed matching. Per tweet, predictions in (start, end) order each
// claim the first unmatched gold link that overlaps and names the same
// entity. Micro-averaged. Tweets with gold but no prediction count as empty
// predictions; predictions for unknown tweets throw Keying.
MetricsReport eval_ie(std::span<const LinkPrediction> predictions, std::span<const LinkPrediction> golds);

struct QueryJudgement {
    std::string tweet_id;
    bool relevant = false;
};

struct QuerySet {
    std::string query_entity;
    std::vector<QueryJudgement> tweets;
};

struct QueryReport {
    std::string query_entity;
    MetricsReport report;
};

struct IrReport {
    MetricsReport micro;
    std::vector<QueryReport> per_query;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
};

// A tweet is predicted relevant to a query iff its links contain the query
// entity. Every judged tweet must have a prediction (Keying otherwise).
IrReport eval_ir(std::span<const LinkPrediction> predictions, std::span<const QuerySet> query_sets);

struct BiasGrid {
    double lo = -3.0;
    double hi = 3.0;
    double step = 0.25;

    void validate() const;
    std::vector<double> points() const;
    // "LO:HI:STEP"
    static BiasGrid parse(std::string_view text);
};

struct SweepPoint {
    double bias = 0.0;
    MetricsReport report;
};

struct TuneResult {
    double bias = 0.0;
    MetricsReport report;
    std::vector<SweepPoint> sweep;
};

enum class Policy { IE, IR };

// Best F1 over the grid; ties go to the smallest |b|, then the smaller b.
TuneResult tune_bias(const BiasGrid& grid, const std::function<MetricsReport(double)>& evaluate);

// Sweeps the Nil bias of a trained model over a dev corpus. IR policy needs query sets.
TuneResult tune_bias(const linking::LinkingModel& model, std::span<const linking::LinkingExample> dev,
                     const BiasGrid& grid, Policy policy, const linking::LinkGraph* graph = nullptr,
                     std::span<const QuerySet> queries = {});

std::vector<LinkPrediction> predict_corpus(const linking::LinkingModel& model,
                                           std::span<const linking::LinkingExample> corpus, double nil_bias,
                                           const linking::LinkGraph* graph);

// bias,tp,fp,fn,precision,recall,f1
std::string sweep_csv(const TuneResult& result);

}  // namespace smartboost::eval
