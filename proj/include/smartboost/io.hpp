#pragma once

// File formats shared by the CLI and the synthetic generator.
//
//   corpus JSONL     {"id", "tokens", "candidates": [{"start", "end",
//                     "options": [{"entity", "features", "gold"}]}]}
//   predictions      {"id", "links": [{"start", "end", "entity"}]}
//   queries JSONL    {"query", "tweets": [{"id", "relevant"}]}
//   tweets JSONL     {"id", "tokens", "links"?: [{"start", "end", "entity"}]}
//   lexicon TSV      surface \t entity \t anchor_prob \t count
//   link graph TSV   entity \t page_id
//   model            versioned JSON document

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "smartboost/eval.hpp"
#include "smartboost/example.hpp"
#include "smartboost/linking.hpp"

namespace smartboost::io {

using Json = nlohmann::json;

inline constexpr std::string_view kModelFormat = "smartboost-model";
inline constexpr int kModelVersion = 1;

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
// Non-empty lines, with line numbers for error messages.
std::vector<std::pair<std::size_t, std::string>> read_lines(const std::filesystem::path& path);

Json example_to_json(const linking::LinkingExample& example);
// Candidates are canonicalized; option order is preserved apart from Nil
// moving to index 0. Gold is present iff every candidate carries exactly one
// gold=true option; a corpus with no gold flags at all is unannotated.
linking::LinkingExample example_from_json(const Json& line, std::size_t feature_dim_hint = 0);

std::vector<linking::LinkingExample> parse_corpus(std::string_view jsonl);
std::vector<linking::LinkingExample> read_corpus(const std::filesystem::path& path);
std::string format_corpus(std::span<const linking::LinkingExample> corpus);

linking::Lexicon parse_lexicon(std::string_view tsv);
linking::Lexicon read_lexicon(const std::filesystem::path& path);

linking::LinkGraph parse_link_graph(std::string_view tsv);
linking::LinkGraph read_link_graph(const std::filesystem::path& path);
std::string format_link_graph(const linking::LinkGraph& graph);

Json prediction_to_json(const eval::LinkPrediction& prediction);
eval::LinkPrediction prediction_from_json(const Json& line);
std::string format_predictions(std::span<const eval::LinkPrediction> predictions);
// Accepts prediction lines or corpus lines (gold links are extracted from the latter).
std::vector<eval::LinkPrediction> parse_predictions(std::string_view jsonl);
std::vector<eval::LinkPrediction> read_predictions(const std::filesystem::path& path);

std::vector<eval::QuerySet> parse_query_sets(std::string_view jsonl);
std::vector<eval::QuerySet> read_query_sets(const std::filesystem::path& path);

struct AnnotatedTweet {
    linking::Tweet tweet;
    std::optional<std::vector<linking::GoldLink>> links;
};
std::vector<AnnotatedTweet> parse_tweets(std::string_view jsonl);

Json metrics_to_json(const eval::MetricsReport& report, std::string_view policy);
Json ir_to_json(const eval::IrReport& report);

Json model_to_json(const linking::LinkingModel& model);
linking::LinkingModel model_from_json(const Json& doc);
std::string format_model(const linking::LinkingModel& model);
linking::LinkingModel read_model(const std::filesystem::path& path);

}  // namespace smartboost::io
