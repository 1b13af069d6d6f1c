#include "smartboost/linking.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "smartboost/error.hpp"

namespace smartboost::linking {

using lattice::Assignment;
using lattice::kNil;
using lattice::kNilOption;
using lattice::MentionSpan;
using lattice::ScoreTable;

std::string to_lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

void Lexicon::add(std::string_view surface, LexiconEntry entry) {
    if (!(entry.anchor_prob >= 0.0 && entry.anchor_prob <= 1.0)) {
        throw Error(ErrorKind::Config, "anchor_prob for '" + entry.entity + "' outside [0, 1]");
    }
    if (entry.count < 0) throw Error(ErrorKind::Config, "negative count for '" + entry.entity + "'");
    if (entry.entity.empty() || entry.entity == kNil) {
        throw Error(ErrorKind::Config, "lexicon entity id must be non-empty and not NIL");
    }
    auto& list = entries_[to_lower(surface)];
    for (const auto& e : list) {
        if (e.entity == entry.entity) {
            throw Error(ErrorKind::Config, "duplicate entity '" + entry.entity + "' for surface '" +
                                               std::string(surface) + "'");
        }
    }
    list.push_back(std::move(entry));
}

const std::vector<LexiconEntry>* Lexicon::find(std::string_view surface) const {
    auto it = entries_.find(surface);
    return it == entries_.end() ? nullptr : &it->second;
}

std::vector<lattice::CandidateInput> generate_candidates(const Tweet& tweet, const Lexicon& lexicon, int max_ngram) {
    if (max_ngram < 1) throw Error(ErrorKind::Config, "max_ngram must be >= 1");
    std::vector<lattice::CandidateInput> out;
    const int n_tokens = static_cast<int>(tweet.tokens.size());
    for (int start = 0; start < n_tokens; ++start) {
        std::string surface;
        for (int end = start + 1; end <= std::min(n_tokens, start + max_ngram); ++end) {
            if (end > start + 1) surface += ' ';
            surface += to_lower(tweet.tokens[static_cast<std::size_t>(end - 1)]);
            if (const auto* entries = lexicon.find(surface)) {
                lattice::CandidateInput c;
                c.span = {start, end};
                for (const auto& e : *entries) c.entities.push_back(e.entity);
                out.push_back(std::move(c));
            }
        }
    }
    return out;
}

namespace {

std::string surface_of(const Tweet& tweet, MentionSpan span) {
    if (span.start < 0 || span.end > static_cast<int>(tweet.tokens.size()) || span.start >= span.end) {
        throw Error(ErrorKind::MalformedSpan, "span outside tweet '" + tweet.id + "'");
    }
    std::string surface;
    for (int i = span.start; i < span.end; ++i) {
        if (i > span.start) surface += ' ';
        surface += to_lower(tweet.tokens[static_cast<std::size_t>(i)]);
    }
    return surface;
}

}  // namespace

std::vector<double> basic_features(const Tweet& tweet, MentionSpan span, std::string_view entity,
                                   const Lexicon& lexicon, std::span<const double> passthrough) {
    const std::string surface = surface_of(tweet, span);
    const auto* entries = lexicon.find(surface);

    std::vector<double> f(kBasicFeatureCount, 0.0);
    f[kSpanLength] = span.length();
    int capitalized = 0;
    for (int i = span.start; i < span.end; ++i) {
        const auto& tok = tweet.tokens[static_cast<std::size_t>(i)];
        if (!tok.empty() && std::isupper(static_cast<unsigned char>(tok.front()))) ++capitalized;
    }
    f[kCapitalizationRatio] = static_cast<double>(capitalized) / span.length();
    f[kSurfaceEntityCount] = entries ? static_cast<double>(entries->size()) : 0.0;

    if (entity == kNil) {
        f[kNilIndicator] = 1.0;
    } else {
        const LexiconEntry* match = nullptr;
        if (entries) {
            for (const auto& e : *entries) {
                if (e.entity == entity) match = &e;
            }
        }
        if (!match) {
            throw Error(ErrorKind::MissingLexiconEntry,
                        "entity '" + std::string(entity) + "' not listed for surface '" + surface + "'");
        }
        f[kAnchorProb] = match->anchor_prob;
        f[kLogCount] = std::log1p(static_cast<double>(match->count));
    }
    f.insert(f.end(), passthrough.begin(), passthrough.end());
    return f;
}

LinkingExample featurize(const Tweet& tweet, const Lexicon& lexicon, int max_ngram, const std::vector<GoldLink>* gold) {
    LinkingExample ex;
    ex.tweet = tweet;
    ex.lattice = lattice::build_lattice(generate_candidates(tweet, lexicon, max_ngram));
    ex.feature_dim = kBasicFeatureCount;
    ex.features.resize(ex.lattice.size());
    for (std::size_t k = 0; k < ex.lattice.size(); ++k) {
        const auto& cand = ex.lattice[k];
        for (const auto& option : cand.options) {
            ex.features[k].push_back(basic_features(tweet, cand.span, option, lexicon));
        }
    }
    if (gold) {
        Assignment a;
        a.choice.assign(ex.lattice.size(), kNilOption);
        for (std::size_t k = 0; k < ex.lattice.size(); ++k) {
            const auto& cand = ex.lattice[k];
            for (const auto& link : *gold) {
                if (link.span != cand.span) continue;
                auto it = std::find(cand.options.begin(), cand.options.end(), link.entity);
                if (it != cand.options.end()) a.choice[k] = static_cast<std::size_t>(it - cand.options.begin());
            }
        }
        ex.gold = std::move(a);
    }
    ex.validate();
    return ex;
}

void LinkGraph::add_edge(std::string_view entity, std::string_view page) {
    auto it = edges_.find(entity);
    if (it == edges_.end()) it = edges_.emplace(std::string(entity), std::set<std::string>{}).first;
    it->second.emplace(page);
}

const std::set<std::string>& LinkGraph::pages(std::string_view entity) const {
    static const std::set<std::string> kEmpty;
    auto it = edges_.find(entity);
    return it == edges_.end() ? kEmpty : it->second;
}

double jaccard(std::string_view entity, const std::set<std::string>& first_stage_entities, const LinkGraph& graph) {
    std::set<std::string> others;
    for (const auto& e : first_stage_entities) {
        if (e == entity) continue;
        const auto& p = graph.pages(e);
        others.insert(p.begin(), p.end());
    }
    const auto& mine = graph.pages(entity);
    std::size_t intersection = 0;
    for (const auto& page : mine) intersection += others.count(page);
    const std::size_t uni = mine.size() + others.size() - intersection;
    return uni == 0 ? 0.0 : static_cast<double>(intersection) / static_cast<double>(uni);
}

LinkingExample entity_entity_features(const LinkingExample& example, const Assignment& first_stage,
                                      const LinkGraph& graph) {
    if (first_stage.choice.size() != example.lattice.size()) {
        throw Error(ErrorKind::Shape, "first-stage assignment does not match the lattice");
    }
    std::set<std::string> identified;
    for (std::size_t k = 0; k < example.lattice.size(); ++k) {
        if (first_stage.choice[k] >= example.lattice.num_options(k)) {
            throw Error(ErrorKind::Shape, "first-stage option out of range");
        }
        if (first_stage.choice[k] != kNilOption) identified.insert(example.lattice[k].options[first_stage.choice[k]]);
    }

    LinkingExample out = example;
    out.feature_dim = example.feature_dim + kEntityEntityFeatureCount;
    for (std::size_t k = 0; k < out.lattice.size(); ++k) {
        const auto& options = out.lattice[k].options;
        std::vector<double> jac(options.size(), 0.0);
        double best = 0.0;
        for (std::size_t u = 1; u < options.size(); ++u) {
            jac[u] = jaccard(options[u], identified, graph);
            best = std::max(best, jac[u]);
        }
        for (std::size_t u = 0; u < options.size(); ++u) {
            const double flag = (u != kNilOption && best > 0.0 && jac[u] == best) ? 1.0 : 0.0;
            out.features[k][u].push_back(jac[u]);
            out.features[k][u].push_back(flag);
        }
    }
    return out;
}

ScoreTable apply_nil_bias(ScoreTable scores, double bias) {
    if (!std::isfinite(bias)) throw Error(ErrorKind::Config, "nil bias must be finite");
    for (auto& row : scores) {
        if (!row.empty()) row[kNilOption] += bias;
    }
    return scores;
}

Assignment first_stage_prediction(const boosting::Ensemble& stage1, const LinkingExample& example) {
    return boosting::decode(stage1.config().mode, example.lattice, boosting::score_table(stage1, example));
}

std::pair<boosting::Ensemble, boosting::Ensemble> two_stage_train(std::span<const LinkingExample> corpus,
                                                                  const boosting::BoostConfig& config,
                                                                  const LinkGraph& graph,
                                                                  std::vector<boosting::RoundStats>* stage1_log,
                                                                  std::vector<boosting::RoundStats>* stage2_log) {
    auto stage1 = boosting::train(corpus, config, stage1_log);
    std::vector<LinkingExample> augmented;
    augmented.reserve(corpus.size());
    for (const auto& ex : corpus) {
        augmented.push_back(entity_entity_features(ex, first_stage_prediction(stage1, ex), graph));
    }
    auto stage2 = boosting::train(augmented, config, stage2_log);
    return {std::move(stage1), std::move(stage2)};
}

ScoreTable final_scores(const LinkingModel& model, const LinkingExample& example, double nil_bias,
                        const LinkGraph* graph) {
    if (!model.two_stage()) return apply_nil_bias(boosting::score_table(model.stage1, example), nil_bias);
    if (!graph) throw Error(ErrorKind::Config, "two-stage model requires a link graph");
    const auto augmented = entity_entity_features(example, first_stage_prediction(model.stage1, example), *graph);
    return apply_nil_bias(boosting::score_table(*model.stage2, augmented), nil_bias);
}

Assignment predict(const LinkingModel& model, const LinkingExample& example, double nil_bias, const LinkGraph* graph) {
    const auto scores = final_scores(model, example, nil_bias, graph);
    const auto mode = model.two_stage() ? model.stage2->config().mode : model.mode();
    return boosting::decode(mode, example.lattice, scores);
}

}  // namespace smartboost::linking
