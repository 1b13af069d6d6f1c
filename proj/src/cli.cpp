#include "smartboost/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <optional>
#include <ostream>

#include "smartboost/boosting.hpp"
#include "smartboost/error.hpp"
#include "smartboost/eval.hpp"
#include "smartboost/io.hpp"
#include "smartboost/linking.hpp"
#include "smartboost/synth.hpp"

namespace smartboost::cli {

namespace fs = std::filesystem;

namespace {

struct TrainArgs {
    std::string corpus;
    std::string model_out;
    std::string log_out;
    std::string loss = "log";
    std::string mode = "structured";
    int trees = 300;
    int min_leaf = 30;
    int max_depth = 4;
    double shrinkage = 1.0;
    bool two_stage = false;
    std::string link_graph;
    std::uint64_t seed = 0;
};

struct PredictArgs {
    std::string model;
    std::string corpus;
    std::string out;
    double nil_bias = 0.0;
    std::string link_graph;
};

struct EvalArgs {
    std::string pred;
    std::string gold;
    std::string queries;
    std::string out;
};

struct TuneArgs {
    std::string model;
    std::string corpus;
    std::string grid = "-3:3:0.25";
    std::string policy = "ie";
    std::string queries;
    std::string link_graph;
    std::string out;
    std::string sweep_out;
};

struct SynthArgs {
    std::string out_dir;
    synth::SynthConfig config;
    std::string nonlinearity = "xor";
};

struct FeaturizeArgs {
    std::string tweets;
    std::string lexicon;
    std::string out;
    int max_ngram = linking::kDefaultMaxNgram;
};

// Inserts `tag` before the extension: run.csv -> run.stage2.csv.
fs::path tagged_path(const fs::path& path, const std::string& tag) {
    fs::path out = path;
    out.replace_filename(path.stem().string() + "." + tag + path.extension().string());
    return out;
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << content;
    } else {
        io::write_file_atomic(path, content);
    }
}

std::optional<linking::LinkGraph> maybe_graph(const std::string& path) {
    if (path.empty()) return std::nullopt;
    return io::read_link_graph(path);
}

void check_model_corpus(const linking::LinkingModel& model, std::span<const linking::LinkingExample> corpus) {
    for (const auto& ex : corpus) {
        ex.validate();
        if (!ex.lattice.empty() && ex.feature_dim != model.stage1.feature_dim()) {
            throw Error(ErrorKind::Shape, "tweet '" + ex.tweet.id + "' has feature_dim " +
                                              std::to_string(ex.feature_dim) + ", model expects " +
                                              std::to_string(model.stage1.feature_dim()));
        }
    }
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
    boosting::BoostConfig config;
    config.num_trees = a.trees;
    config.shrinkage = a.shrinkage;
    config.tree.min_leaf = a.min_leaf;
    config.tree.max_depth = a.max_depth;
    config.loss = boosting::parse_loss(a.loss);
    config.mode = boosting::parse_mode(a.mode);
    config.seed = a.seed;
    config.validate();

    const auto corpus = io::read_corpus(a.corpus);
    const fs::path log_path = a.log_out.empty() ? fs::path(a.model_out + ".log.csv") : fs::path(a.log_out);
    std::vector<boosting::RoundStats> log1;
    std::vector<boosting::RoundStats> log2;
    std::optional<linking::LinkingModel> model;
    if (a.two_stage) {
        const auto graph = io::read_link_graph(a.link_graph);
        auto [s1, s2] = linking::two_stage_train(corpus, config, graph, &log1, &log2);
        model.emplace(linking::LinkingModel{std::move(s1), std::move(s2)});
    } else {
        model.emplace(linking::LinkingModel{boosting::train(corpus, config, &log1), std::nullopt});
    }
    io::write_file_atomic(a.model_out, io::format_model(*model));
    io::write_file_atomic(log_path, boosting::training_log_csv(log1));
    if (a.two_stage) io::write_file_atomic(tagged_path(log_path, "stage2"), boosting::training_log_csv(log2));
    out << "trained " << model->stage1.size() << " trees" << (a.two_stage ? " per stage" : "") << " on "
        << corpus.size() << " tweets; final train loss " << (a.two_stage ? log2 : log1).back().train_loss << '\n';
    return kExitOk;
}

int cmd_predict(const PredictArgs& a, std::ostream& out) {
    const auto model = io::read_model(a.model);
    if (model.two_stage() && a.link_graph.empty()) {
        throw Error(ErrorKind::Config, "a two-stage model needs --link-graph");
    }
    const auto graph = maybe_graph(a.link_graph);
    const auto corpus = io::read_corpus(a.corpus);
    check_model_corpus(model, corpus);
    const auto preds = eval::predict_corpus(model, corpus, a.nil_bias, graph ? &*graph : nullptr);
    emit(a.out, io::format_predictions(preds), out);
    return kExitOk;
}

int cmd_eval_ie(const EvalArgs& a, std::ostream& out) {
    const auto preds = io::read_predictions(a.pred);
    const auto golds = io::read_predictions(a.gold);
    emit(a.out, io::metrics_to_json(eval::eval_ie(preds, golds), "ie").dump(2) + "\n", out);
    return kExitOk;
}

int cmd_eval_ir(const EvalArgs& a, std::ostream& out) {
    const auto preds = io::read_predictions(a.pred);
    const auto queries = io::read_query_sets(a.queries);
    emit(a.out, io::ir_to_json(eval::eval_ir(preds, queries)).dump(2) + "\n", out);
    return kExitOk;
}

int cmd_tune(const TuneArgs& a, std::ostream& out) {
    const auto grid = eval::BiasGrid::parse(a.grid);
    const auto policy = a.policy == "ir" ? eval::Policy::IR : eval::Policy::IE;
    const auto model = io::read_model(a.model);
    if (model.two_stage() && a.link_graph.empty()) {
        throw Error(ErrorKind::Config, "a two-stage model needs --link-graph");
    }
    if (policy == eval::Policy::IR && a.queries.empty()) {
        throw Error(ErrorKind::Config, "--policy ir needs --queries");
    }
    const auto graph = maybe_graph(a.link_graph);
    const auto dev = io::read_corpus(a.corpus);
    check_model_corpus(model, dev);
    std::vector<eval::QuerySet> queries;
    if (!a.queries.empty()) queries = io::read_query_sets(a.queries);
    const auto result = eval::tune_bias(model, dev, grid, policy, graph ? &*graph : nullptr, queries);

    auto doc = io::metrics_to_json(result.report, a.policy);
    doc["nil_bias"] = result.bias;
    emit(a.out, doc.dump(2) + "\n", out);
    if (!a.sweep_out.empty()) io::write_file_atomic(a.sweep_out, eval::sweep_csv(result));
    return kExitOk;
}

int cmd_synth(SynthArgs a, std::ostream& out) {
    a.config.nonlinearity = synth::parse_nonlinearity(a.nonlinearity);
    const auto corpus = synth::generate(a.config);
    const fs::path dir(a.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create '" + dir.string() + "': " + ec.message());
    io::write_file_atomic(dir / "train.jsonl", io::format_corpus(corpus.train.examples));
    io::write_file_atomic(dir / "dev.jsonl", io::format_corpus(corpus.dev.examples));
    io::write_file_atomic(dir / "test.jsonl", io::format_corpus(corpus.test.examples));
    io::write_file_atomic(dir / "link_graph.tsv", io::format_link_graph(corpus.graph));
    out << "wrote " << corpus.train.examples.size() << '/' << corpus.dev.examples.size() << '/'
        << corpus.test.examples.size() << " train/dev/test tweets to " << dir.string() << '\n';
    return kExitOk;
}

int cmd_featurize(const FeaturizeArgs& a, std::ostream& out) {
    const auto lexicon = io::read_lexicon(a.lexicon);
    const auto tweets = io::parse_tweets(io::read_file(a.tweets));
    std::vector<linking::LinkingExample> corpus;
    corpus.reserve(tweets.size());
    for (const auto& t : tweets) {
        corpus.push_back(linking::featurize(t.tweet, lexicon, a.max_ngram, t.links ? &*t.links : nullptr));
    }
    emit(a.out, io::format_corpus(corpus), out);
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"smartboost: structured gradient boosting for entity linking", "smartboost"};
    app.require_subcommand(1);

    TrainArgs train;
    auto* t = app.add_subcommand("train", "Train a model from a corpus JSONL file");
    t->add_option("--corpus", train.corpus, "Annotated corpus JSONL")->required();
    t->add_option("--model-out", train.model_out, "Model file to write")->required();
    t->add_option("--log-out", train.log_out, "Training-log CSV (default: <model-out>.log.csv)");
    t->add_option("--loss", train.loss, "Loss function")->check(CLI::IsMember({"log", "hinge"}))->capture_default_str();
    t->add_option("--mode", train.mode, "Gradient and decoding mode")
        ->check(CLI::IsMember({"structured", "independent"}))
        ->capture_default_str();
    t->add_option("--trees", train.trees, "Boosting rounds")->capture_default_str();
    t->add_option("--min-leaf", train.min_leaf, "Minimum samples per leaf")->capture_default_str();
    t->add_option("--max-depth", train.max_depth, "Maximum tree depth")->capture_default_str();
    t->add_option("--shrinkage", train.shrinkage, "Per-tree shrinkage")->capture_default_str();
    auto* link_graph_opt = t->add_option("--link-graph", train.link_graph, "Link-graph TSV for entity-entity features");
    t->add_flag("--two-stage", train.two_stage, "Train a second stage with entity-entity features")
        ->needs(link_graph_opt);
    t->add_option("--seed", train.seed, "Seed echoed into the model")->capture_default_str();

    PredictArgs predict;
    auto* p = app.add_subcommand("predict", "Decode a corpus with a trained model");
    p->add_option("--model", predict.model, "Model file")->required();
    p->add_option("--corpus", predict.corpus, "Corpus JSONL")->required();
    p->add_option("--out", predict.out, "Predictions JSONL (default: stdout)");
    p->add_option("--nil-bias", predict.nil_bias, "Constant added to every Nil score")->capture_default_str();
    p->add_option("--link-graph", predict.link_graph, "Link-graph TSV (required for two-stage models)");

    EvalArgs eval_ie;
    auto* ie = app.add_subcommand("eval-ie", "Overlap-relaxed link precision/recall/F1");
    ie->add_option("--pred", eval_ie.pred, "Predictions JSONL")->required();
    ie->add_option("--gold", eval_ie.gold, "Gold predictions or annotated corpus JSONL")->required();
    ie->add_option("--out", eval_ie.out, "Metrics JSON (default: stdout)");

    EvalArgs eval_ir;
    auto* ir = app.add_subcommand("eval-ir", "Per-query tweet relevance precision/recall/F1");
    ir->add_option("--pred", eval_ir.pred, "Predictions JSONL")->required();
    ir->add_option("--queries", eval_ir.queries, "Query judgements JSONL")->required();
    ir->add_option("--out", eval_ir.out, "Metrics JSON (default: stdout)");

    TuneArgs tune;
    auto* tb = app.add_subcommand("tune-bias", "Choose the Nil bias maximizing dev F1");
    tb->add_option("--model", tune.model, "Model file")->required();
    tb->add_option("--corpus", tune.corpus, "Annotated dev corpus JSONL")->required();
    tb->add_option("--grid", tune.grid, "Bias grid LO:HI:STEP")->capture_default_str();
    tb->add_option("--policy", tune.policy, "Evaluation policy")->check(CLI::IsMember({"ie", "ir"}))->capture_default_str();
    tb->add_option("--queries", tune.queries, "Query judgements JSONL (IR policy)");
    tb->add_option("--link-graph", tune.link_graph, "Link-graph TSV (required for two-stage models)");
    tb->add_option("--out", tune.out, "Metrics JSON with the chosen nil_bias (default: stdout)");
    tb->add_option("--sweep-out", tune.sweep_out, "Per-grid-point CSV");

    SynthArgs syn;
    auto* s = app.add_subcommand("synth", "Generate a synthetic corpus");
    s->add_option("--out-dir", syn.out_dir, "Output directory")->required();
    s->add_option("--seed", syn.config.seed, "Generator seed")->capture_default_str();
    s->add_option("--tweets", syn.config.num_tweets, "Total tweets across splits")->capture_default_str();
    s->add_option("--tokens", syn.config.tokens_per_tweet, "Tokens per tweet")->capture_default_str();
    s->add_option("--density", syn.config.candidate_density, "Probability a position starts a mention")
        ->capture_default_str();
    s->add_option("--max-entities", syn.config.max_entities, "Maximum entities per candidate")->capture_default_str();
    s->add_option("--feature-dim", syn.config.feature_dim, "Feature columns per option")->capture_default_str();
    s->add_option("--overlap-rate", syn.config.overlap_rate, "Probability of an overlapping variant per mention")
        ->capture_default_str();
    s->add_option("--nonlinearity", syn.nonlinearity, "Planted interaction")
        ->check(CLI::IsMember({"xor", "threshold-product"}))
        ->capture_default_str();
    s->add_option("--noise", syn.config.noise, "Feature noise standard deviation")->capture_default_str();
    s->add_option("--coherence", syn.config.coherence, "Planted on-topic score bonus")->capture_default_str();
    s->add_option("--topics", syn.config.num_topics, "Number of topics")->capture_default_str();
    s->add_option("--entities-per-topic", syn.config.entities_per_topic, "Entities per topic")->capture_default_str();
    s->add_option("--pages-per-topic", syn.config.pages_per_topic, "Link-graph pages per topic")->capture_default_str();

    FeaturizeArgs feat;
    auto* f = app.add_subcommand("featurize", "Build a corpus from tweets and a lexicon");
    f->add_option("--tweets", feat.tweets, "Tweets JSONL")->required();
    f->add_option("--lexicon", feat.lexicon, "Lexicon TSV")->required();
    f->add_option("--out", feat.out, "Corpus JSONL (default: stdout)");
    f->add_option("--max-ngram", feat.max_ngram, "Longest n-gram looked up")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*t) return cmd_train(train, out);
        if (*p) return cmd_predict(predict, out);
        if (*ie) return cmd_eval_ie(eval_ie, out);
        if (*ir) return cmd_eval_ir(eval_ir, out);
        if (*tb) return cmd_tune(tune, out);
        if (*s) return cmd_synth(syn, out);
        if (*f) return cmd_featurize(feat, out);
    } catch (const Error& e) {
        err << "smartboost: " << e.what() << '\n';
        return e.kind() == ErrorKind::Config ? kExitUsage : kExitRuntime;
    } catch (const std::exception& e) {
        err << "smartboost: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("smartboost");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace smartboost::cli
