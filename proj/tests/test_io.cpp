#include <doctest.h>

#include <filesystem>
#include <random>

#include "smartboost/error.hpp"
#include "smartboost/io.hpp"
#include "smartboost/synth.hpp"
#include "test_support.hpp"

using namespace smartboost;
using namespace smartboost::io;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::Io;
}

void check_same(const linking::LinkingExample& a, const linking::LinkingExample& b) {
    CHECK(a.tweet.id == b.tweet.id);
    CHECK(a.tweet.tokens == b.tweet.tokens);
    CHECK(a.feature_dim == b.feature_dim);
    REQUIRE(a.lattice.size() == b.lattice.size());
    for (std::size_t k = 0; k < a.lattice.size(); ++k) {
        CHECK(a.lattice[k].span == b.lattice[k].span);
        CHECK(a.lattice[k].options == b.lattice[k].options);
    }
    CHECK(a.features == b.features);
    CHECK(a.gold == b.gold);
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("smartboost_io_" + std::to_string(std::random_device{}()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

const char* kLine =
    R"({"id":"t1","tokens":["a","b","c"],"candidates":[)"
    R"({"start":1,"end":3,"options":[{"entity":"Y","features":[2,0],"gold":true},{"entity":"NIL","features":[0,1],"gold":false}]},)"
    R"({"start":0,"end":1,"options":[{"entity":"NIL","features":[0,1],"gold":true},{"entity":"X","features":[1,0],"gold":false}]}]})";

}  // namespace

TEST_CASE("corpus lines are canonicalized with features following their options") {
    const auto ex = example_from_json(Json::parse(kLine));
    REQUIRE(ex.lattice.size() == 2);
    CHECK(ex.lattice[0].span == lattice::MentionSpan{0, 1});
    CHECK(ex.lattice[0].options == std::vector<std::string>{"NIL", "X"});
    CHECK(ex.lattice[1].options == std::vector<std::string>{"NIL", "Y"});
    CHECK(ex.features[1][0] == std::vector<double>{0, 1});
    CHECK(ex.features[1][1] == std::vector<double>{2, 0});
    REQUIRE(ex.gold);
    CHECK(ex.gold->choice == std::vector<std::size_t>{0, 1});
    CHECK(ex.feature_dim == 2);
}

TEST_CASE("corpus round-trips exactly") {
    synth::SynthConfig c;
    c.num_tweets = 40;
    c.noise = 0.37;
    const auto corpus = synth::generate(c).train.examples;
    const auto text = format_corpus(corpus);
    const auto back = parse_corpus(text);
    REQUIRE(back.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) check_same(corpus[i], back[i]);
    CHECK(format_corpus(back) == text);

    std::mt19937_64 rng(41);
    std::vector<linking::LinkingExample> random;
    for (int i = 0; i < 30; ++i) random.push_back(testing::random_example(rng, 3));
    const auto again = parse_corpus(format_corpus(random));
    for (std::size_t i = 0; i < random.size(); ++i) check_same(random[i], again[i]);
}

TEST_CASE("unannotated and empty tweets") {
    const auto corpus = parse_corpus(
        R"({"id":"a","tokens":["x"],"candidates":[{"start":0,"end":1,"options":[{"entity":"NIL","features":[0,1,2]},{"entity":"E","features":[1,1,1]}]}]})"
        "\n"
        R"({"id":"b","tokens":[],"candidates":[]})"
        "\n");
    REQUIRE(corpus.size() == 2);
    CHECK_FALSE(corpus[0].gold.has_value());
    CHECK(corpus[1].lattice.empty());
    CHECK(corpus[1].feature_dim == 3);
    CHECK(linking::corpus_feature_dim(corpus) == 3);
}

TEST_CASE("malformed corpus lines") {
    auto parse = [](std::string line) { return [line] { parse_corpus(line); }; };
    CHECK(kind_of(parse("{not json")) == ErrorKind::Format);
    CHECK(kind_of(parse(R"({"id":"a","candidates":[{"start":0,"end":1,"options":[{"entity":"E","features":[1]}]}]})")) ==
          ErrorKind::Format);
    CHECK(kind_of(parse(R"({"id":"a","candidates":[{"start":0,"end":1,"options":[{"entity":"NIL","features":[1]},)"
                        R"({"entity":"E","features":[1]},{"entity":"E","features":[2]}]}]})")) == ErrorKind::Format);
    CHECK(kind_of(parse(R"({"id":"a","candidates":[{"start":0,"end":1,"options":[{"entity":"NIL","features":[1],"gold":true},)"
                        R"({"entity":"E","features":[1],"gold":true}]}]})")) == ErrorKind::Format);
    CHECK(kind_of(parse(R"({"id":"a","candidates":[{"start":0,"end":1,"options":[{"entity":"NIL","features":[1],"gold":true}]},)"
                        R"({"start":2,"end":3,"options":[{"entity":"NIL","features":[1]}]}]})")) == ErrorKind::Format);
    CHECK(kind_of(parse(R"({"id":"a","candidates":[{"start":2,"end":2,"options":[{"entity":"NIL","features":[1]}]}]})")) ==
          ErrorKind::MalformedSpan);
    CHECK(kind_of(parse(R"({"id":"a","candidates":[{"start":0,"end":1,"options":[{"entity":"NIL","features":[1]},)"
                        R"({"entity":"E","features":[1,2]}]}]})")) == ErrorKind::Shape);
    CHECK(kind_of(parse(R"({"id":"a","candidates":[)"
                        R"({"start":0,"end":2,"options":[{"entity":"NIL","features":[1]},{"entity":"E","features":[1],"gold":true}]},)"
                        R"({"start":1,"end":3,"options":[{"entity":"NIL","features":[1]},{"entity":"F","features":[1],"gold":true}]}]})")) ==
          ErrorKind::InvalidGold);
    try {
        parse_corpus(std::string(kLine) + "\n\n{oops\n");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("lexicon TSV") {
    const auto lex = parse_lexicon("# comment\nNew York\tNYC\t0.8\t120\nnew york\tNY_State\t0.2\t30\n\ngiants\tNY_Giants\t1\t5\n");
    CHECK(lex.size() == 2);
    REQUIRE(lex.find("new york"));
    CHECK(lex.find("new york")->at(1).entity == "NY_State");
    CHECK(lex.find("giants")->at(0).count == 5);
    CHECK(kind_of([] { parse_lexicon("a\tb\t0.5\n"); }) == ErrorKind::Format);
    CHECK(kind_of([] { parse_lexicon("a\tb\tx\t1\n"); }) == ErrorKind::Format);
    CHECK(kind_of([] { parse_lexicon("a\tb\t2\t1\n"); }) == ErrorKind::Format);
}

TEST_CASE("link graph TSV round-trips") {
    const auto g = parse_link_graph("B\tp2\nA\tp1\nA\tp3\r\nA\tp1\n");
    CHECK(g.num_entities() == 2);
    CHECK(g.pages("A").size() == 2);
    CHECK(format_link_graph(g) == "A\tp1\nA\tp3\nB\tp2\n");
    CHECK(format_link_graph(parse_link_graph(format_link_graph(g))) == format_link_graph(g));
    CHECK(kind_of([] { parse_link_graph("A\n"); }) == ErrorKind::Format);
}

TEST_CASE("predictions, queries and tweets") {
    const std::vector<eval::LinkPrediction> preds{{"t1", {{{0, 2}, "A"}}}, {"t2", {}}};
    const auto text = format_predictions(preds);
    CHECK(text == "{\"id\":\"t1\",\"links\":[{\"end\":2,\"entity\":\"A\",\"start\":0}]}\n{\"id\":\"t2\",\"links\":[]}\n");
    CHECK(parse_predictions(text) == preds);

    const auto from_corpus = parse_predictions(kLine);
    REQUIRE(from_corpus.size() == 1);
    CHECK(from_corpus[0].links == std::vector<eval::Link>{{{1, 3}, "Y"}});

    const auto q = parse_query_sets(R"({"query":"A","tweets":[{"id":"t1","relevant":true},{"id":"t2","relevant":false}]})");
    REQUIRE(q.size() == 1);
    CHECK(q[0].query_entity == "A");
    CHECK(q[0].tweets.size() == 2);
    CHECK_FALSE(q[0].tweets[1].relevant);

    const auto tweets = parse_tweets(
        R"({"id":"a","tokens":["x","y"]})"
        "\n"
        R"({"id":"b","tokens":["z"],"links":[{"start":0,"end":1,"entity":"Z"}]})");
    REQUIRE(tweets.size() == 2);
    CHECK_FALSE(tweets[0].links.has_value());
    CHECK(tweets[1].links->at(0).entity == "Z");
    CHECK(kind_of([] { parse_predictions(R"({"id":"t","links":[{"start":3,"end":1,"entity":"A"}]})"); }) ==
          ErrorKind::MalformedSpan);
}

TEST_CASE("metrics JSON schema") {
    const auto ie = metrics_to_json(eval::MetricsReport::from_counts(1, 1, 0), "ie");
    CHECK(ie["policy"] == "ie");
    CHECK(ie["tp"] == 1);
    CHECK(ie["precision"] == 0.5);
    CHECK_FALSE(ie.contains("per_query"));

    eval::IrReport r;
    r.micro = eval::MetricsReport::from_counts(2, 1, 1);
    r.per_query.push_back({"A", r.micro});
    const auto ir = ir_to_json(r);
    CHECK(ir["policy"] == "ir");
    CHECK(ir["tp"] == 2);
    REQUIRE(ir["per_query"].size() == 1);
    CHECK(ir["per_query"][0]["query"] == "A");
    CHECK(ir.contains("macro"));
}

TEST_CASE("model files round-trip") {
    std::mt19937_64 rng(42);
    std::vector<linking::LinkingExample> corpus;
    for (int i = 0; i < 30; ++i) corpus.push_back(testing::random_example(rng, 3));
    boosting::BoostConfig c;
    c.num_trees = 4;
    c.tree.min_leaf = 3;
    c.shrinkage = 0.3;
    c.loss = boosting::Loss::Hinge;
    c.seed = 99;
    const linking::LinkingModel model{boosting::train(corpus, c), std::nullopt};

    const auto text = format_model(model);
    const auto back = model_from_json(Json::parse(text));
    CHECK(back.stage1.config() == c);
    CHECK_FALSE(back.two_stage());
    CHECK(format_model(back) == text);
    for (const auto& ex : corpus) {
        CHECK(boosting::score_table(back.stage1, ex) == boosting::score_table(model.stage1, ex));
    }

    auto doc = Json::parse(text);
    CHECK(doc["format"] == kModelFormat);
    CHECK(doc["stage_count"] == 1);
    doc["version"] = kModelVersion + 1;
    CHECK(kind_of([&] { model_from_json(doc); }) == ErrorKind::Format);
    doc = Json::parse(text);
    doc["format"] = "other";
    CHECK(kind_of([&] { model_from_json(doc); }) == ErrorKind::Format);
    doc = Json::parse(text);
    doc["stage_count"] = 2;
    CHECK(kind_of([&] { model_from_json(doc); }) == ErrorKind::Format);
    doc = Json::parse(text);
    doc["stages"][0]["trees"][0]["nodes"][0]["left"] = 77;
    CHECK(kind_of([&] { model_from_json(doc); }) == ErrorKind::Format);
}

TEST_CASE("two-stage model round-trip") {
    std::mt19937_64 rng(43);
    std::vector<linking::LinkingExample> corpus;
    for (int i = 0; i < 20; ++i) corpus.push_back(testing::random_example(rng, 2));
    linking::LinkGraph g;
    g.add_edge("E0_0", "p");
    g.add_edge("E1_0", "p");
    boosting::BoostConfig c;
    c.num_trees = 2;
    c.tree.min_leaf = 3;
    auto [s1, s2] = linking::two_stage_train(corpus, c, g);
    const linking::LinkingModel model{std::move(s1), std::move(s2)};
    const auto back = model_from_json(Json::parse(format_model(model)));
    REQUIRE(back.two_stage());
    CHECK(back.stage2->feature_dim() == 4);
    for (const auto& ex : corpus) {
        CHECK(linking::predict(back, ex, 0.0, &g) == linking::predict(model, ex, 0.0, &g));
    }
}

TEST_CASE("atomic writes and file errors") {
    TempDir dir;
    const auto file = dir.path / "out.txt";
    write_file_atomic(file, "one\n");
    write_file_atomic(file, "two\nthree\n");
    CHECK(read_file(file) == "two\nthree\n");
    CHECK(read_lines(file).size() == 2);
    CHECK_FALSE(fs::exists(dir.path / "out.txt.tmp"));
    CHECK(kind_of([&] { read_file(dir.path / "missing"); }) == ErrorKind::Io);
    CHECK(kind_of([&] { read_corpus(dir.path / "missing"); }) == ErrorKind::Io);
}
