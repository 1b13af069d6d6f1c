#include "smartboost/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "smartboost/error.hpp"

namespace smartboost::eval {

using lattice::kNilOption;

MetricsReport MetricsReport::from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
    MetricsReport r;
    r.tp = tp;
    r.fp = fp;
    r.fn = fn;
    r.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    r.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

LinkPrediction to_prediction(const linking::LinkingExample& example, const lattice::Assignment& assignment) {
    if (assignment.choice.size() != example.lattice.size()) {
        throw Error(ErrorKind::Shape, "assignment does not match tweet '" + example.tweet.id + "'");
    }
    LinkPrediction p;
    p.tweet_id = example.tweet.id;
    for (std::size_t k = 0; k < example.lattice.size(); ++k) {
        if (assignment.choice[k] == kNilOption) continue;
        const auto& cand = example.lattice[k];
        p.links.push_back({cand.span, cand.options.at(assignment.choice[k])});
    }
    return p;
}

LinkPrediction gold_links(const linking::LinkingExample& example) {
    if (!example.gold) throw Error(ErrorKind::InvalidGold, "tweet '" + example.tweet.id + "' has no gold");
    return to_prediction(example, *example.gold);
}

namespace {

template <typename T>
std::map<std::string, const T*> index_by_id(std::span<const T> items, auto id_of, const char* what) {
    std::map<std::string, const T*> out;
    for (const auto& item : items) {
        if (!out.emplace(id_of(item), &item).second) {
            throw Error(ErrorKind::Keying, std::string("duplicate tweet id '") + id_of(item) + "' in " + what);
        }
    }
    return out;
}

struct Counts {
    std::int64_t tp = 0, fp = 0, fn = 0;
};

Counts match_tweet(std::vector<Link> preds, std::vector<Link> golds) {
    auto by_span = [](const Link& a, const Link& b) { return a.span < b.span; };
    std::stable_sort(preds.begin(), preds.end(), by_span);
    std::stable_sort(golds.begin(), golds.end(), by_span);
    std::vector<char> used(golds.size(), 0);
    Counts c;
    for (const auto& p : preds) {
        bool matched = false;
        for (std::size_t g = 0; g < golds.size(); ++g) {
            if (used[g] || golds[g].entity != p.entity || !golds[g].span.overlaps(p.span)) continue;
            used[g] = 1;
            matched = true;
            break;
        }
        if (matched) ++c.tp;
        else ++c.fp;
    }
    c.fn = static_cast<std::int64_t>(golds.size()) - c.tp;
    return c;
}

}  // namespace

MetricsReport eval_ie(std::span<const LinkPrediction> predictions, std::span<const LinkPrediction> golds) {
    auto id = [](const LinkPrediction& p) { return p.tweet_id; };
    const auto gold_index = index_by_id(golds, id, "gold");
    const auto pred_index = index_by_id(predictions, id, "predictions");
    Counts total;
    for (const auto& [tweet, pred] : pred_index) {
        if (!gold_index.count(tweet)) {
            throw Error(ErrorKind::Keying, "prediction for unknown tweet '" + tweet + "'");
        }
        (void)pred;
    }
    for (const auto& [tweet, gold] : gold_index) {
        auto it = pred_index.find(tweet);
        const auto c = match_tweet(it == pred_index.end() ? std::vector<Link>{} : it->second->links, gold->links);
        total.tp += c.tp;
        total.fp += c.fp;
        total.fn += c.fn;
    }
    return MetricsReport::from_counts(total.tp, total.fp, total.fn);
}

IrReport eval_ir(std::span<const LinkPrediction> predictions, std::span<const QuerySet> query_sets) {
    const auto pred_index =
        index_by_id(predictions, [](const LinkPrediction& p) { return p.tweet_id; }, "predictions");
    IrReport out;
    Counts micro;
    for (const auto& q : query_sets) {
        Counts c;
        for (const auto& judged : q.tweets) {
            auto it = pred_index.find(judged.tweet_id);
            if (it == pred_index.end()) {
                throw Error(ErrorKind::Keying, "no prediction for tweet '" + judged.tweet_id + "' in query '" +
                                                   q.query_entity + "'");
            }
            const auto& links = it->second->links;
            const bool predicted = std::any_of(links.begin(), links.end(),
                                               [&](const Link& l) { return l.entity == q.query_entity; });
            if (predicted && judged.relevant) ++c.tp;
            else if (predicted) ++c.fp;
            else if (judged.relevant) ++c.fn;
        }
        out.per_query.push_back({q.query_entity, MetricsReport::from_counts(c.tp, c.fp, c.fn)});
        micro.tp += c.tp;
        micro.fp += c.fp;
        micro.fn += c.fn;
    }
    out.micro = MetricsReport::from_counts(micro.tp, micro.fp, micro.fn);
    if (!out.per_query.empty()) {
        for (const auto& q : out.per_query) {
            out.macro_precision += q.report.precision;
            out.macro_recall += q.report.recall;
            out.macro_f1 += q.report.f1;
        }
        const auto n = static_cast<double>(out.per_query.size());
        out.macro_precision /= n;
        out.macro_recall /= n;
        out.macro_f1 /= n;
    }
    return out;
}

void BiasGrid::validate() const {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !std::isfinite(step)) {
        throw Error(ErrorKind::Config, "bias grid values must be finite");
    }
    if (lo > hi) throw Error(ErrorKind::Config, "bias grid needs lo <= hi");
    if (!(step > 0.0)) throw Error(ErrorKind::Config, "bias grid needs step > 0");
}

std::vector<double> BiasGrid::points() const {
    validate();
    const auto n = static_cast<std::int64_t>(std::floor((hi - lo) / step + 1e-9));
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n + 1));
    for (std::int64_t i = 0; i <= n; ++i) out.push_back(lo + static_cast<double>(i) * step);
    return out;
}

BiasGrid BiasGrid::parse(std::string_view text) {
    BiasGrid grid;
    double* fields[] = {&grid.lo, &grid.hi, &grid.step};
    std::size_t pos = 0;
    for (int i = 0; i < 3; ++i) {
        const std::size_t colon = i < 2 ? text.find(':', pos) : text.size();
        if (colon == std::string_view::npos) throw Error(ErrorKind::Config, "grid must be LO:HI:STEP");
        const std::string part(text.substr(pos, colon - pos));
        try {
            std::size_t used = 0;
            *fields[i] = std::stod(part, &used);
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw Error(ErrorKind::Config, "bad grid component '" + part + "'");
        }
        pos = colon + 1;
    }
    grid.validate();
    return grid;
}

TuneResult tune_bias(const BiasGrid& grid, const std::function<MetricsReport(double)>& evaluate) {
    TuneResult result;
    bool first = true;
    for (double b : grid.points()) {
        const auto report = evaluate(b);
        result.sweep.push_back({b, report});
        const bool better = first || report.f1 > result.report.f1 ||
                            (report.f1 == result.report.f1 &&
                             (std::abs(b) < std::abs(result.bias) ||
                              (std::abs(b) == std::abs(result.bias) && b < result.bias)));
        if (better) {
            result.bias = b;
            result.report = report;
            first = false;
        }
    }
    return result;
}

std::vector<LinkPrediction> predict_corpus(const linking::LinkingModel& model,
                                           std::span<const linking::LinkingExample> corpus, double nil_bias,
                                           const linking::LinkGraph* graph) {
    std::vector<LinkPrediction> out;
    out.reserve(corpus.size());
    for (const auto& ex : corpus) out.push_back(to_prediction(ex, linking::predict(model, ex, nil_bias, graph)));
    return out;
}

TuneResult tune_bias(const linking::LinkingModel& model, std::span<const linking::LinkingExample> dev,
                     const BiasGrid& grid, Policy policy, const linking::LinkGraph* graph,
                     std::span<const QuerySet> queries) {
    if (dev.empty()) throw Error(ErrorKind::EmptyData, "dev corpus is empty");
    if (policy == Policy::IR && queries.empty()) {
        throw Error(ErrorKind::Config, "IR bias tuning needs query sets");
    }
    std::vector<LinkPrediction> golds;
    if (policy == Policy::IE) {
        for (const auto& ex : dev) golds.push_back(gold_links(ex));
    }
    // Scores do not depend on the bias; compute them once and shift Nil per grid point.
    std::vector<lattice::ScoreTable> base;
    base.reserve(dev.size());
    for (const auto& ex : dev) base.push_back(linking::final_scores(model, ex, 0.0, graph));
    const auto mode = model.two_stage() ? model.stage2->config().mode : model.mode();

    return tune_bias(grid, [&](double b) {
        std::vector<LinkPrediction> preds;
        preds.reserve(dev.size());
        for (std::size_t i = 0; i < dev.size(); ++i) {
            const auto scores = linking::apply_nil_bias(base[i], b);
            preds.push_back(to_prediction(dev[i], boosting::decode(mode, dev[i].lattice, scores)));
        }
        return policy == Policy::IE ? eval_ie(preds, golds) : eval_ir(preds, queries).micro;
    });
}

std::string sweep_csv(const TuneResult& result) {
    std::ostringstream os;
    os.precision(17);
    os << "bias,tp,fp,fn,precision,recall,f1\n";
    for (const auto& p : result.sweep) {
        os << p.bias << ',' << p.report.tp << ',' << p.report.fp << ',' << p.report.fn << ',' << p.report.precision
           << ',' << p.report.recall << ',' << p.report.f1 << '\n';
    }
    return os.str();
}

}  // namespace smartboost::eval
