#include "smartboost/io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "smartboost/error.hpp"

namespace smartboost::io {

namespace fs = std::filesystem;
using lattice::kNil;
using lattice::MentionSpan;
using linking::LinkingExample;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, "cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error(ErrorKind::Io, "write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot rename '" + tmp.string() + "': " + ec.message());
}

namespace {

std::vector<std::pair<std::size_t, std::string>> split_lines(std::string_view text) {
    std::vector<std::pair<std::size_t, std::string>> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        ++line_no;
        std::string line(text.substr(pos, nl - pos));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.emplace_back(line_no, std::move(line));
        pos = nl + 1;
    }
    return out;
}

// Runs `fn` on each parsed JSON line, rewrapping errors with the line number.
template <typename Fn>
void for_each_json_line(std::string_view jsonl, Fn&& fn) {
    for (const auto& [line_no, line] : split_lines(jsonl)) {
        try {
            fn(Json::parse(line));
        } catch (const Json::exception& e) {
            throw Error(ErrorKind::Format, "line " + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(e.kind(), "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t tab = line.find('\t', pos);
        out.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
        if (tab == std::string::npos) break;
        pos = tab + 1;
    }
    return out;
}

MentionSpan span_from_json(const Json& j) {
    return {j.at("start").get<int>(), j.at("end").get<int>()};
}

}  // namespace

std::vector<std::pair<std::size_t, std::string>> read_lines(const fs::path& path) {
    return split_lines(read_file(path));
}

Json example_to_json(const LinkingExample& example) {
    Json candidates = Json::array();
    for (std::size_t k = 0; k < example.lattice.size(); ++k) {
        const auto& cand = example.lattice[k];
        Json options = Json::array();
        for (std::size_t u = 0; u < cand.options.size(); ++u) {
            Json opt = {{"entity", cand.options[u]}, {"features", example.features[k][u]}};
            if (example.gold) opt["gold"] = example.gold->choice[k] == u;
            options.push_back(std::move(opt));
        }
        candidates.push_back({{"start", cand.span.start}, {"end", cand.span.end}, {"options", std::move(options)}});
    }
    return {{"id", example.tweet.id}, {"tokens", example.tweet.tokens}, {"candidates", std::move(candidates)}};
}

LinkingExample example_from_json(const Json& line, std::size_t feature_dim_hint) {
    LinkingExample ex;
    ex.tweet.id = line.at("id").get<std::string>();
    if (line.contains("tokens")) ex.tweet.tokens = line.at("tokens").get<std::vector<std::string>>();

    struct SourceOption {
        std::vector<double> features;
        bool gold = false;
    };
    std::vector<std::map<std::string, SourceOption>> source;
    std::vector<lattice::CandidateInput> inputs;
    std::size_t gold_flags = 0;
    for (const auto& c : line.at("candidates")) {
        lattice::CandidateInput in;
        in.span = span_from_json(c);
        std::map<std::string, SourceOption> opts;
        for (const auto& o : c.at("options")) {
            auto entity = o.at("entity").get<std::string>();
            SourceOption so{o.at("features").get<std::vector<double>>(), o.value("gold", false)};
            gold_flags += so.gold ? 1 : 0;
            if (!opts.emplace(entity, std::move(so)).second) {
                throw Error(ErrorKind::Format, "tweet '" + ex.tweet.id + "': duplicate option '" + entity + "'");
            }
            in.entities.push_back(std::move(entity));
        }
        if (!opts.count(std::string(kNil))) {
            throw Error(ErrorKind::Format, "tweet '" + ex.tweet.id + "': candidate without a NIL option");
        }
        inputs.push_back(std::move(in));
        source.push_back(std::move(opts));
    }

    ex.lattice = lattice::build_lattice(std::move(inputs));
    ex.feature_dim = feature_dim_hint;
    bool dim_set = false;
    ex.features.resize(ex.lattice.size());
    lattice::Assignment gold;
    gold.choice.assign(ex.lattice.size(), lattice::kNilOption);
    for (std::size_t k = 0; k < ex.lattice.size(); ++k) {
        const auto& cand = ex.lattice[k];
        const auto& opts = source[cand.source_index];
        std::size_t golds_here = 0;
        for (std::size_t u = 0; u < cand.options.size(); ++u) {
            const auto& so = opts.at(cand.options[u]);
            if (!dim_set) {
                ex.feature_dim = so.features.size();
                dim_set = true;
            }
            ex.features[k].push_back(so.features);
            if (so.gold) {
                gold.choice[k] = u;
                ++golds_here;
            }
        }
        if (gold_flags > 0 && golds_here != 1) {
            throw Error(ErrorKind::Format, "tweet '" + ex.tweet.id + "': candidate at [" +
                                               std::to_string(cand.span.start) + ", " + std::to_string(cand.span.end) +
                                               ") needs exactly one gold option");
        }
    }
    if (gold_flags > 0 || ex.lattice.empty()) ex.gold = std::move(gold);
    ex.validate();
    return ex;
}

std::vector<LinkingExample> parse_corpus(std::string_view jsonl) {
    std::vector<LinkingExample> out;
    for_each_json_line(jsonl, [&](const Json& j) { out.push_back(example_from_json(j)); });
    std::size_t dim = 0;
    for (const auto& ex : out) {
        if (!ex.lattice.empty()) {
            dim = ex.feature_dim;
            break;
        }
    }
    for (auto& ex : out) {
        if (ex.lattice.empty()) ex.feature_dim = dim;
    }
    return out;
}

std::vector<LinkingExample> read_corpus(const fs::path& path) {
    try {
        return parse_corpus(read_file(path));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Io) throw;
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

std::string format_corpus(std::span<const LinkingExample> corpus) {
    std::string out;
    for (const auto& ex : corpus) {
        out += example_to_json(ex).dump();
        out += '\n';
    }
    return out;
}

linking::Lexicon parse_lexicon(std::string_view tsv) {
    linking::Lexicon lexicon;
    for (const auto& [line_no, line] : split_lines(tsv)) {
        if (line.front() == '#') continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 4) {
            throw Error(ErrorKind::Format, "lexicon line " + std::to_string(line_no) + ": expected 4 tab-separated fields");
        }
        try {
            std::size_t used_p = 0, used_c = 0;
            const double prob = std::stod(fields[2], &used_p);
            const long long count = std::stoll(fields[3], &used_c);
            if (used_p != fields[2].size() || used_c != fields[3].size()) throw std::invalid_argument("trailing");
            lexicon.add(fields[0], {fields[1], prob, count});
        } catch (const Error& e) {
            throw Error(ErrorKind::Format, "lexicon line " + std::to_string(line_no) + ": " + e.what());
        } catch (const std::exception&) {
            throw Error(ErrorKind::Format, "lexicon line " + std::to_string(line_no) + ": bad number");
        }
    }
    return lexicon;
}

linking::Lexicon read_lexicon(const fs::path& path) { return parse_lexicon(read_file(path)); }

linking::LinkGraph parse_link_graph(std::string_view tsv) {
    linking::LinkGraph graph;
    for (const auto& [line_no, line] : split_lines(tsv)) {
        if (line.front() == '#') continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
            throw Error(ErrorKind::Format, "link graph line " + std::to_string(line_no) + ": expected entity\\tpage");
        }
        graph.add_edge(fields[0], fields[1]);
    }
    return graph;
}

linking::LinkGraph read_link_graph(const fs::path& path) { return parse_link_graph(read_file(path)); }

std::string format_link_graph(const linking::LinkGraph& graph) {
    std::string out;
    for (const auto& [entity, pages] : graph.edges()) {
        for (const auto& page : pages) out += entity + '\t' + page + '\n';
    }
    return out;
}

Json prediction_to_json(const eval::LinkPrediction& prediction) {
    Json links = Json::array();
    for (const auto& l : prediction.links) {
        links.push_back({{"start", l.span.start}, {"end", l.span.end}, {"entity", l.entity}});
    }
    return {{"id", prediction.tweet_id}, {"links", std::move(links)}};
}

eval::LinkPrediction prediction_from_json(const Json& line) {
    eval::LinkPrediction p;
    p.tweet_id = line.at("id").get<std::string>();
    for (const auto& l : line.at("links")) {
        eval::Link link{span_from_json(l), l.at("entity").get<std::string>()};
        if (link.span.start < 0 || link.span.start >= link.span.end) {
            throw Error(ErrorKind::MalformedSpan, "tweet '" + p.tweet_id + "': malformed link span");
        }
        p.links.push_back(std::move(link));
    }
    return p;
}

std::string format_predictions(std::span<const eval::LinkPrediction> predictions) {
    std::string out;
    for (const auto& p : predictions) {
        out += prediction_to_json(p).dump();
        out += '\n';
    }
    return out;
}

std::vector<eval::LinkPrediction> parse_predictions(std::string_view jsonl) {
    std::vector<eval::LinkPrediction> out;
    for_each_json_line(jsonl, [&](const Json& j) {
        out.push_back(j.contains("candidates") ? eval::gold_links(example_from_json(j)) : prediction_from_json(j));
    });
    return out;
}

std::vector<eval::LinkPrediction> read_predictions(const fs::path& path) { return parse_predictions(read_file(path)); }

std::vector<eval::QuerySet> parse_query_sets(std::string_view jsonl) {
    std::vector<eval::QuerySet> out;
    for_each_json_line(jsonl, [&](const Json& j) {
        eval::QuerySet q;
        q.query_entity = j.at("query").get<std::string>();
        for (const auto& t : j.at("tweets")) q.tweets.push_back({t.at("id").get<std::string>(), t.at("relevant").get<bool>()});
        out.push_back(std::move(q));
    });
    return out;
}

std::vector<eval::QuerySet> read_query_sets(const fs::path& path) { return parse_query_sets(read_file(path)); }

std::vector<AnnotatedTweet> parse_tweets(std::string_view jsonl) {
    std::vector<AnnotatedTweet> out;
    for_each_json_line(jsonl, [&](const Json& j) {
        AnnotatedTweet t;
        t.tweet.id = j.at("id").get<std::string>();
        t.tweet.tokens = j.at("tokens").get<std::vector<std::string>>();
        if (j.contains("links")) {
            t.links.emplace();
            for (const auto& l : j.at("links")) t.links->push_back({span_from_json(l), l.at("entity").get<std::string>()});
        }
        out.push_back(std::move(t));
    });
    return out;
}

Json metrics_to_json(const eval::MetricsReport& report, std::string_view policy) {
    return {{"policy", policy},         {"tp", report.tp},         {"fp", report.fp}, {"fn", report.fn},
            {"precision", report.precision}, {"recall", report.recall}, {"f1", report.f1}};
}

Json ir_to_json(const eval::IrReport& report) {
    Json doc = metrics_to_json(report.micro, "ir");
    Json per_query = Json::array();
    for (const auto& q : report.per_query) {
        Json block = metrics_to_json(q.report, "ir");
        block.erase("policy");
        block["query"] = q.query_entity;
        per_query.push_back(std::move(block));
    }
    doc["per_query"] = std::move(per_query);
    doc["macro"] = {{"precision", report.macro_precision}, {"recall", report.macro_recall}, {"f1", report.macro_f1}};
    return doc;
}

namespace {

Json tree_to_json(const trees::RegressionTree& tree) {
    Json nodes = Json::array();
    for (const auto& n : tree.nodes()) {
        if (n.is_leaf()) {
            nodes.push_back({{"value", n.value}});
        } else {
            nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
        }
    }
    return nodes;
}

trees::RegressionTree tree_from_json(const Json& nodes, std::size_t feature_dim) {
    std::vector<trees::Node> out;
    for (const auto& j : nodes) {
        trees::Node n;
        if (j.contains("value")) {
            n.value = j.at("value").get<double>();
        } else {
            n.feature = j.at("feature").get<int>();
            n.threshold = j.at("threshold").get<double>();
            n.left = j.at("left").get<int>();
            n.right = j.at("right").get<int>();
        }
        out.push_back(n);
    }
    return trees::RegressionTree(std::move(out), feature_dim);
}

Json stage_to_json(const boosting::Ensemble& ensemble) {
    Json trees = Json::array();
    for (const auto& t : ensemble.trees()) trees.push_back({{"eta", t.eta}, {"nodes", tree_to_json(t.tree)}});
    return {{"feature_dim", ensemble.feature_dim()}, {"trees", std::move(trees)}};
}

boosting::Ensemble stage_from_json(const Json& j, const boosting::BoostConfig& config) {
    boosting::Ensemble ensemble(j.at("feature_dim").get<std::size_t>(), config);
    for (const auto& t : j.at("trees")) {
        ensemble.add(tree_from_json(t.at("nodes"), ensemble.feature_dim()), t.at("eta").get<double>());
    }
    return ensemble;
}

}  // namespace

Json model_to_json(const linking::LinkingModel& model) {
    const auto& config = model.stage1.config();
    Json stages = Json::array();
    stages.push_back(stage_to_json(model.stage1));
    if (model.stage2) stages.push_back(stage_to_json(*model.stage2));
    return {
        {"format", kModelFormat},
        {"version", kModelVersion},
        {"loss", boosting::to_string(config.loss)},
        {"mode", boosting::to_string(config.mode)},
        {"feature_dim", model.stage1.feature_dim()},
        {"stage_count", stages.size()},
        {"config",
         {{"trees", config.num_trees},
          {"shrinkage", config.shrinkage},
          {"min_leaf", config.tree.min_leaf},
          {"max_depth", config.tree.max_depth},
          {"seed", config.seed}}},
        {"stages", std::move(stages)},
    };
}

linking::LinkingModel model_from_json(const Json& doc) {
    try {
        if (doc.at("format").get<std::string>() != kModelFormat) {
            throw Error(ErrorKind::Format, "not a smartboost model file");
        }
        const int version = doc.at("version").get<int>();
        if (version != kModelVersion) {
            throw Error(ErrorKind::Format, "unsupported model version " + std::to_string(version));
        }
        boosting::BoostConfig config;
        config.loss = boosting::parse_loss(doc.at("loss").get<std::string>());
        config.mode = boosting::parse_mode(doc.at("mode").get<std::string>());
        const auto& c = doc.at("config");
        config.num_trees = c.at("trees").get<int>();
        config.shrinkage = c.at("shrinkage").get<double>();
        config.tree.min_leaf = c.at("min_leaf").get<int>();
        config.tree.max_depth = c.at("max_depth").get<int>();
        config.seed = c.at("seed").get<std::uint64_t>();

        const auto& stages = doc.at("stages");
        const auto count = doc.at("stage_count").get<std::size_t>();
        if (count != stages.size() || count < 1 || count > 2) {
            throw Error(ErrorKind::Format, "stage_count must be 1 or 2 and match the stage list");
        }
        linking::LinkingModel model{stage_from_json(stages[0], config), std::nullopt};
        if (model.stage1.feature_dim() != doc.at("feature_dim").get<std::size_t>()) {
            throw Error(ErrorKind::Format, "feature_dim does not match stage one");
        }
        if (count == 2) {
            model.stage2 = stage_from_json(stages[1], config);
            if (model.stage2->feature_dim() != model.stage1.feature_dim() + linking::kEntityEntityFeatureCount) {
                throw Error(ErrorKind::Format, "stage two feature_dim must be stage one + 2");
            }
        }
        return model;
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::Format, std::string("model: ") + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Format) throw;
        throw Error(ErrorKind::Format, std::string("model: ") + e.what());
    }
}

std::string format_model(const linking::LinkingModel& model) { return model_to_json(model).dump(1) + '\n'; }

linking::LinkingModel read_model(const fs::path& path) {
    const auto text = read_file(path);
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::Format, path.string() + ": " + e.what());
    }
    return model_from_json(doc);
}

}  // namespace smartboost::io
