#include "smartboost/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <string>

#include "smartboost/error.hpp"

namespace smartboost::synth {

using lattice::MentionSpan;

std::string_view to_string(Nonlinearity n) noexcept {
    return n == Nonlinearity::Xor ? "xor" : "threshold-product";
}

Nonlinearity parse_nonlinearity(std::string_view name) {
    if (name == "xor") return Nonlinearity::Xor;
    if (name == "threshold-product") return Nonlinearity::ThresholdProduct;
    throw Error(ErrorKind::Config, "unknown nonlinearity '" + std::string(name) + "'");
}

void SynthConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw Error(ErrorKind::Config, what);
    };
    require(num_tweets >= 1, "num_tweets must be >= 1");
    require(tokens_per_tweet >= 1, "tokens_per_tweet must be >= 1");
    require(max_entities >= 1, "max_entities must be >= 1");
    require(feature_dim >= 5, "feature_dim must be >= 5 (four interaction columns plus the Nil indicator)");
    require(candidate_density >= 0.0 && candidate_density <= 1.0, "candidate_density must be in [0, 1]");
    require(overlap_rate >= 0.0 && overlap_rate <= 1.0, "overlap_rate must be in [0, 1]");
    require(noise >= 0.0, "noise must be >= 0");
    require(num_topics >= 1 && entities_per_topic >= 1 && pages_per_topic >= 1, "topic counts must be >= 1");
    require(std::isfinite(coherence), "coherence must be finite");
}

namespace {

constexpr int kPagesPerEntity = 10;
constexpr int kStrayPagesPerEntity = 2;

std::string entity_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "E%04d", index);
    return buf;
}

class Generator {
public:
    explicit Generator(const SynthConfig& config)
        : config_(config), rng_(config.seed), latent_dim_(static_cast<std::size_t>(config.feature_dim - 1)) {}

    SynthCorpus run() {
        SynthCorpus corpus;
        corpus.graph = make_graph();
        const int n = config_.num_tweets;
        const int n_train = n * 70 / 100;
        const int n_dev = n * 15 / 100;
        for (int i = 0; i < n; ++i) {
            SynthSplit& split = i < n_train ? corpus.train : (i < n_train + n_dev ? corpus.dev : corpus.test);
            auto [example, planted] = make_tweet(i);
            split.examples.push_back(std::move(example));
            split.planted.push_back(std::move(planted));
        }
        return corpus;
    }

private:
    int num_entities() const { return config_.num_topics * config_.entities_per_topic; }
    int topic_of(int entity) const { return entity / config_.entities_per_topic; }

    int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
    bool coin(double p) { return uniform() < p; }

    linking::LinkGraph make_graph() {
        linking::LinkGraph graph;
        const int pages = config_.pages_per_topic;
        for (int e = 0; e < num_entities(); ++e) {
            const int topic = topic_of(e);
            std::set<int> mine;
            const int wanted = std::min(kPagesPerEntity, pages);
            while (static_cast<int>(mine.size()) < wanted) mine.insert(uniform_int(0, pages - 1));
            for (int p : mine) graph.add_edge(entity_name(e), "P" + std::to_string(topic) + "_" + std::to_string(p));
            for (int s = 0; s < kStrayPagesPerEntity; ++s) {
                const int other = uniform_int(0, config_.num_topics - 1);
                graph.add_edge(entity_name(e), "P" + std::to_string(other) + "_" + std::to_string(uniform_int(0, pages - 1)));
            }
        }
        return graph;
    }

    std::vector<MentionSpan> make_spans() {
        const int T = config_.tokens_per_tweet;
        std::vector<MentionSpan> base;
        for (int pos = 0; pos < T;) {
            if (coin(config_.candidate_density)) {
                const int len = std::min(uniform_int(1, 3), T - pos);
                base.push_back({pos, pos + len});
                pos += len;
            } else {
                ++pos;
            }
        }
        std::vector<MentionSpan> spans = base;
        for (const auto& s : base) {
            if (!coin(config_.overlap_rate)) continue;
            std::vector<MentionSpan> variants;
            if (s.end < T) variants.push_back({s.start, s.end + 1});
            if (s.start > 0) variants.push_back({s.start - 1, s.end});
            if (s.length() >= 2) {
                variants.push_back({s.start + 1, s.end});
                variants.push_back({s.start, s.end - 1});
            }
            if (variants.empty()) continue;
            const auto v = variants[static_cast<std::size_t>(uniform_int(0, static_cast<int>(variants.size()) - 1))];
            if (std::find(spans.begin(), spans.end(), v) == spans.end()) spans.push_back(v);
        }
        return spans;
    }

    std::vector<int> make_entities(int tweet_topic) {
        const int n = uniform_int(1, config_.max_entities);
        std::vector<int> out;
        for (int attempt = 0; static_cast<int>(out.size()) < n && attempt < 50; ++attempt) {
            int e = coin(0.5) ? tweet_topic * config_.entities_per_topic + uniform_int(0, config_.entities_per_topic - 1)
                              : uniform_int(0, num_entities() - 1);
            if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(e);
        }
        return out;
    }

    double interaction(const std::vector<double>& z) const {
        const bool a = z[0] > 0.5, b = z[1] > 0.5, c = z[2] > 0.5, d = z[3] > 0.5;
        if (config_.nonlinearity == Nonlinearity::Xor) return 2.0 * (a != b) + 2.0 * (c != d) - 2.5;
        return 3.0 * (a && b) + 3.0 * (c && d) - 2.0;
    }

    std::pair<linking::LinkingExample, lattice::ScoreTable> make_tweet(int index) {
        const int topic = uniform_int(0, config_.num_topics - 1);
        linking::LinkingExample ex;
        char id[32];
        std::snprintf(id, sizeof id, "t%05d", index);
        ex.tweet.id = id;
        for (int t = 0; t < config_.tokens_per_tweet; ++t) ex.tweet.tokens.push_back("tok" + std::to_string(uniform_int(0, 9999)));

        std::vector<lattice::CandidateInput> inputs;
        for (const auto& span : make_spans()) {
            lattice::CandidateInput in;
            in.span = span;
            for (int e : make_entities(topic)) in.entities.push_back(entity_name(e));
            inputs.push_back(std::move(in));
        }
        ex.lattice = lattice::build_lattice(std::move(inputs));
        ex.feature_dim = static_cast<std::size_t>(config_.feature_dim);

        std::normal_distribution<double> gauss(0.0, 1.0);
        lattice::ScoreTable planted(ex.lattice.size());
        ex.features.resize(ex.lattice.size());
        for (std::size_t k = 0; k < ex.lattice.size(); ++k) {
            const auto& options = ex.lattice[k].options;
            planted[k].assign(options.size(), 0.0);
            std::vector<double> nil_features(ex.feature_dim, 0.0);
            nil_features.back() = 1.0;
            ex.features[k].push_back(std::move(nil_features));
            for (std::size_t u = 1; u < options.size(); ++u) {
                std::vector<double> z(latent_dim_);
                for (double& v : z) v = uniform();
                const int entity = std::stoi(options[u].substr(1));
                planted[k][u] = interaction(z) + (topic_of(entity) == topic ? config_.coherence : 0.0);
                std::vector<double> observed(ex.feature_dim, 0.0);
                for (std::size_t d = 0; d < latent_dim_; ++d) observed[d] = z[d] + config_.noise * gauss(rng_);
                ex.features[k].push_back(std::move(observed));
            }
        }
        ex.gold = lattice::viterbi(ex.lattice, planted).assignment;
        return {std::move(ex), std::move(planted)};
    }

    SynthConfig config_;
    std::mt19937_64 rng_;
    std::size_t latent_dim_;
};

}  // namespace

SynthCorpus generate(const SynthConfig& config) {
    config.validate();
    return Generator(config).run();
}

}  // namespace smartboost::synth
