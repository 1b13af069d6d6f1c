#include <doctest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "smartboost/cli.hpp"
#include "smartboost/io.hpp"

using namespace smartboost;
namespace fs = std::filesystem;

namespace {

struct Workspace {
    fs::path dir;
    std::ostringstream out, err;

    Workspace() : dir(fs::temp_directory_path() / ("smartboost_cli_" + std::to_string(std::random_device{}()))) {
        fs::create_directories(dir);
    }
    ~Workspace() { fs::remove_all(dir); }

    std::string path(const std::string& name) const { return (dir / name).string(); }

    int run(std::vector<std::string> args) {
        out.str("");
        err.str("");
        return cli::run(args, out, err);
    }

    // Small synthetic corpus under dir/data.
    void synth(int tweets = 60) {
        REQUIRE(run({"synth", "--out-dir", path("data"), "--tweets", std::to_string(tweets), "--seed", "3"}) == 0);
    }

    void train(const std::string& model, std::vector<std::string> extra = {}) {
        std::vector<std::string> args{"train", "--corpus", path("data/train.jsonl"), "--model-out", path(model),
                                      "--trees", "3", "--min-leaf", "5"};
        args.insert(args.end(), extra.begin(), extra.end());
        REQUIRE(run(args) == 0);
    }
};

std::size_t count_lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST_CASE("usage errors exit with 2") {
    Workspace w;
    CHECK(w.run({}) == cli::kExitUsage);
    CHECK(w.run({"frobnicate"}) == cli::kExitUsage);
    CHECK(w.run({"train", "--corpus", "x"}) == cli::kExitUsage);
    CHECK(w.run({"train", "--corpus", "x", "--model-out", "y", "--loss", "squared"}) == cli::kExitUsage);
    CHECK(w.run({"train", "--corpus", "x", "--model-out", "y", "--two-stage"}) == cli::kExitUsage);
    CHECK(w.run({"tune-bias", "--model", "m", "--corpus", "c", "--grid", "1:0:1"}) == cli::kExitUsage);
    CHECK(w.run({"--help"}) == cli::kExitOk);
    CHECK(w.out.str().find("train") != std::string::npos);
}

TEST_CASE("synth writes deterministic splits") {
    Workspace w;
    REQUIRE(w.run({"synth", "--out-dir", w.path("a"), "--tweets", "100", "--seed", "7"}) == 0);
    REQUIRE(w.run({"synth", "--out-dir", w.path("b"), "--tweets", "100", "--seed", "7"}) == 0);
    std::size_t lines = 0;
    for (auto name : {"train.jsonl", "dev.jsonl", "test.jsonl", "link_graph.tsv"}) {
        const auto a = io::read_file(w.dir / "a" / name);
        CHECK(a == io::read_file(w.dir / "b" / name));
        if (std::string(name) != "link_graph.tsv") lines += count_lines(a);
    }
    CHECK(lines == 100);
    CHECK(w.run({"synth", "--out-dir", w.path("c"), "--feature-dim", "3"}) == cli::kExitUsage);
}

TEST_CASE("train writes a model and a training log") {
    Workspace w;
    w.synth();
    REQUIRE(w.run({"train", "--corpus", w.path("data/train.jsonl"), "--model-out", w.path("m.json"), "--trees", "1"}) == 0);
    const auto model = io::read_model(w.path("m.json"));
    CHECK(model.stage1.size() == 1);
    CHECK(model.stage1.config().tree.min_leaf == 30);
    const auto log = io::read_file(w.path("m.json.log.csv"));
    CHECK(log.rfind("round,train_loss,seconds\n", 0) == 0);
    CHECK(count_lines(log) == 3);

    w.train("two.json", {"--two-stage", "--link-graph", w.path("data/link_graph.tsv"), "--log-out", w.path("two.csv")});
    CHECK(io::read_model(w.path("two.json")).two_stage());
    CHECK(fs::exists(w.path("two.stage2.csv")));

    io::write_file_atomic(w.path("bad.jsonl"), "{\"id\": 1}\n");
    CHECK(w.run({"train", "--corpus", w.path("bad.jsonl"), "--model-out", w.path("x.json")}) == cli::kExitRuntime);
    CHECK(w.run({"train", "--corpus", w.path("missing.jsonl"), "--model-out", w.path("x.json")}) == cli::kExitRuntime);
    CHECK_FALSE(w.err.str().empty());
}

TEST_CASE("predict") {
    Workspace w;
    w.synth();
    w.train("m.json");
    REQUIRE(w.run({"predict", "--model", w.path("m.json"), "--corpus", w.path("data/test.jsonl"), "--out",
                   w.path("p.jsonl")}) == 0);
    const auto preds = io::read_predictions(w.path("p.jsonl"));
    const auto corpus = io::read_corpus(w.path("data/test.jsonl"));
    REQUIRE(preds.size() == corpus.size());

    // Loaded-model predictions equal in-memory decoding.
    const auto model = io::read_model(w.path("m.json"));
    CHECK(eval::predict_corpus(model, corpus, 0.0, nullptr) == preds);

    REQUIRE(w.run({"predict", "--model", w.path("m.json"), "--corpus", w.path("data/test.jsonl"), "--nil-bias", "50"}) == 0);
    for (const auto& p : io::parse_predictions(w.out.str())) CHECK(p.links.empty());

    w.train("two.json", {"--two-stage", "--link-graph", w.path("data/link_graph.tsv")});
    CHECK(w.run({"predict", "--model", w.path("two.json"), "--corpus", w.path("data/test.jsonl")}) != 0);
    CHECK(w.run({"predict", "--model", w.path("two.json"), "--corpus", w.path("data/test.jsonl"), "--link-graph",
                 w.path("data/link_graph.tsv")}) == 0);

    REQUIRE(w.run({"synth", "--out-dir", w.path("wide"), "--tweets", "20", "--feature-dim", "9"}) == 0);
    CHECK(w.run({"predict", "--model", w.path("m.json"), "--corpus", w.path("wide/test.jsonl")}) == cli::kExitRuntime);
    CHECK(w.err.str().find("feature_dim") != std::string::npos);
}

TEST_CASE("evaluation commands") {
    Workspace w;
    w.synth();
    REQUIRE(w.run({"eval-ie", "--pred", w.path("data/test.jsonl"), "--gold", w.path("data/test.jsonl")}) == 0);
    auto ie = io::Json::parse(w.out.str());
    CHECK(ie["policy"] == "ie");
    CHECK(ie["f1"] == 1.0);

    io::write_file_atomic(w.path("stray.jsonl"), "{\"id\":\"nope\",\"links\":[]}\n");
    CHECK(w.run({"eval-ie", "--pred", w.path("stray.jsonl"), "--gold", w.path("data/test.jsonl")}) == cli::kExitRuntime);

    const auto corpus = io::read_corpus(w.path("data/test.jsonl"));
    std::string queries = "{\"query\":\"E0000\",\"tweets\":[";
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        queries += (i ? "," : "") + std::string("{\"id\":\"") + corpus[i].tweet.id + "\",\"relevant\":" +
                   (i % 2 ? "true" : "false") + "}";
    }
    queries += "]}\n";
    io::write_file_atomic(w.path("q.jsonl"), queries);
    REQUIRE(w.run({"eval-ir", "--pred", w.path("data/test.jsonl"), "--queries", w.path("q.jsonl"), "--out",
                   w.path("ir.json")}) == 0);
    const auto ir = io::Json::parse(io::read_file(w.path("ir.json")));
    CHECK(ir["policy"] == "ir");
    CHECK(ir.contains("tp"));
    CHECK(ir["per_query"].size() == 1);

    w.train("m.json");
    REQUIRE(w.run({"tune-bias", "--model", w.path("m.json"), "--corpus", w.path("data/dev.jsonl"), "--grid", "0:0:1",
                   "--sweep-out", w.path("sweep.csv")}) == 0);
    CHECK(io::Json::parse(w.out.str())["nil_bias"] == 0.0);
    CHECK(count_lines(io::read_file(w.path("sweep.csv"))) == 2);
    REQUIRE(w.run({"tune-bias", "--model", w.path("m.json"), "--corpus", w.path("data/test.jsonl"), "--policy", "ir",
                   "--queries", w.path("q.jsonl")}) == 0);
    CHECK(io::Json::parse(w.out.str())["policy"] == "ir");
    // The queries judge test tweets, which the dev corpus does not contain.
    CHECK(w.run({"tune-bias", "--model", w.path("m.json"), "--corpus", w.path("data/dev.jsonl"), "--policy", "ir",
                 "--queries", w.path("q.jsonl")}) == cli::kExitRuntime);
    CHECK(w.run({"tune-bias", "--model", w.path("m.json"), "--corpus", w.path("data/dev.jsonl"), "--policy", "ir"}) ==
          cli::kExitUsage);
}

TEST_CASE("featurize builds a trainable corpus") {
    Workspace w;
    io::write_file_atomic(w.path("lex.tsv"), "paris\tParis\t0.9\t100\nparis\tParis_Hilton\t0.1\t10\nhilton\tHilton\t1\t5\n");
    std::string tweets;
    for (int i = 0; i < 12; ++i) {
        const bool city = i % 2 == 0;
        tweets += "{\"id\":\"t" + std::to_string(i) + "\",\"tokens\":[\"Paris\",\"Hilton\",\"x\"],\"links\":[" +
                  (city ? "{\"start\":0,\"end\":1,\"entity\":\"Paris\"}" : "{\"start\":1,\"end\":2,\"entity\":\"Hilton\"}") +
                  "]}\n";
    }
    io::write_file_atomic(w.path("tweets.jsonl"), tweets);
    REQUIRE(w.run({"featurize", "--tweets", w.path("tweets.jsonl"), "--lexicon", w.path("lex.tsv"), "--out",
                   w.path("corpus.jsonl")}) == 0);
    const auto corpus = io::read_corpus(w.path("corpus.jsonl"));
    REQUIRE(corpus.size() == 12);
    CHECK(corpus[0].lattice.size() == 2);
    CHECK(corpus[0].gold->choice == std::vector<std::size_t>{1, 0});
    CHECK(w.run({"train", "--corpus", w.path("corpus.jsonl"), "--model-out", w.path("m.json"), "--trees", "2",
                 "--min-leaf", "1"}) == 0);
}

TEST_CASE("identical flags give identical model and prediction bytes") {
    Workspace w;
    w.synth();
    for (auto name : {"a", "b"}) {
        w.train(std::string(name) + ".json", {"--loss", "hinge", "--seed", "5"});
        REQUIRE(w.run({"predict", "--model", w.path(std::string(name) + ".json"), "--corpus", w.path("data/test.jsonl"),
                       "--out", w.path(std::string(name) + ".jsonl")}) == 0);
    }
    CHECK(io::read_file(w.path("a.json")) == io::read_file(w.path("b.json")));
    CHECK(io::read_file(w.path("a.jsonl")) == io::read_file(w.path("b.jsonl")));
}
