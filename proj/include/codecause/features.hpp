#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "codecause/ingest.hpp"
#include "codecause/python/tree.hpp"

namespace codecause::features {

struct FeatureVector {
  std::int64_t n_whitespaces = 0;
  std::int64_t nloc = 0;
  std::int64_t token_count = 0;
  std::int64_t n_identifiers = 0;
  std::int64_t complexity = 0;
  std::int64_t n_ast_errors = 0;
  std::int64_t n_ast_levels = 0;
  std::int64_t n_ast_nodes = 0;
  std::int64_t n_words = 0;
  std::int64_t vocab_size = 0;
  std::string language = "en";

  bool operator==(const FeatureVector&) const = default;
};

/// Names of the numeric columns in Table-I order followed by the documentation counts.
const std::vector<std::string>& numeric_feature_names();
/// Looks up a numeric feature by its column name; nullopt when unknown.
std::optional<double> feature_value(const FeatureVector& f, std::string_view name);

struct DataPoint {
  ingest::RawSample raw;
  FeatureVector features;

  bool operator==(const DataPoint&) const = default;
};

struct SyntacticFeatures {
  std::int64_t n_ast_nodes = 0;
  std::int64_t n_ast_levels = 0;
  std::int64_t n_ast_errors = 0;
  std::int64_t token_count = 0;
  std::int64_t n_whitespaces = 0;
};

struct SoftwareMetrics {
  std::int64_t nloc = 0;
  std::int64_t complexity = 1;
  std::int64_t n_identifiers = 0;
};

struct DocstringFeatures {
  std::int64_t n_words = 0;
  std::int64_t vocab_size = 0;
  std::string language = "en";
};

/// Never throws on syntax errors; rejects only non-UTF-8 input.
python::ParseResult parse_method(std::string code);

SyntacticFeatures compute_syntactic_features(const python::ParseResult& parsed);
SoftwareMetrics compute_software_metrics(const python::ParseResult& parsed);

/// Decision points counted on top of the base complexity of 1.
bool is_decision_point(std::string_view node_type);

DocstringFeatures extract_docstring_features(const std::optional<std::string>& docstring);
/// A docstring is valid when it has more than three words.
bool is_valid_docstring(const std::optional<std::string>& docstring);
std::int64_t count_words(std::string_view text);
/// Character-trigram guess of the natural language; "en" when nothing matches.
std::string detect_language(std::string_view text);

FeatureVector compute_features(const ingest::RawSample& raw);
DataPoint make_datapoint(ingest::RawSample raw);

/// Per-sample feature extraction, OpenMP-parallel; output order equals input order.
std::vector<DataPoint> extract_all(std::vector<ingest::RawSample> samples);
/// Single-threaded reference for extract_all.
std::vector<DataPoint> extract_all_serial(std::vector<ingest::RawSample> samples);

nlohmann::ordered_json to_json(const DataPoint& p);
DataPoint datapoint_from_json(const nlohmann::ordered_json& j, std::size_t line);

std::string export_jsonl(const std::vector<DataPoint>& points);
/// Accepts feature-augmented lines; lines without features are recomputed from code.
std::vector<DataPoint> import_jsonl(std::string_view text);

}  // namespace codecause::features
