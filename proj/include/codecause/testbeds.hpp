#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "codecause/features.hpp"
#include "codecause/tokenization.hpp"

namespace codecause::testbeds {

enum class TestbedName { RawData, RawDataDocstring, RandomCut, WithDocstring, FromDocstring, CommitGen, SummarizationGen };
enum class Task { code_completion, code_generation, summarization, raw };
enum class IoKind { code_to_code, code_text_to_code, text_to_code, code_to_text };

std::string_view name_str(TestbedName n);
TestbedName name_from_str(std::string_view s);
std::string_view task_str(Task t);
std::string_view io_str(IoKind k);
Task task_of(TestbedName n);
IoKind io_of(TestbedName n);

struct TestbedPoint {
  features::DataPoint point;
  std::optional<std::string> cut_prefix;
  std::optional<std::string> expected_suffix;
};

struct Testbed {
  TestbedName name = TestbedName::RawData;
  std::vector<TestbedPoint> points;
  std::uint64_t seed = 0;

  Task task() const { return task_of(name); }
  IoKind io_kind() const { return io_of(name); }
};

struct DedupReport {
  std::string testbed;
  std::size_t before = 0;
  std::size_t dupes = 0;
  std::size_t after = 0;

  /// Percentage of `before` that was dropped.
  double rate() const { return before == 0 ? 0.0 : 100.0 * static_cast<double>(dupes) / static_cast<double>(before); }
};

/// Sorted, distinct token ids.
using TokenSet = std::vector<std::int32_t>;

TokenSet token_set(const tokenization::BpeModel& model, std::string_view text);

/// |a ∩ b| / |a ∪ b|; two empty sets compare as 1.0.
double jaccard_similarity(const TokenSet& a, const TokenSet& b);

struct DedupResult {
  std::vector<std::size_t> kept;  // indices into the input, ascending
  DedupReport report;
};

/// Greedy first-wins: an item is dropped iff its similarity to an already kept item is at
/// least `threshold`. Pairwise similarities are computed in parallel.
DedupResult dedup(const std::vector<TokenSet>& sets, double threshold = 0.7);
/// Sequential reference for dedup.
DedupResult dedup_serial(const std::vector<TokenSet>& sets, double threshold = 0.7);

/// Uniform sample without replacement; throws DataError when n exceeds the corpus size.
std::vector<std::size_t> sample_indices(std::size_t corpus_size, std::size_t n, std::uint64_t seed);

/// More than 10 lexical tokens or more than 100 characters.
bool is_cut_eligible(const features::DataPoint& p);
/// More than 10 words or more than 50 characters.
bool is_descriptive_text(std::string_view text);

struct Cut {
  std::size_t offset = 0;
  std::string prefix;
  std::string suffix;
};

/// Byte offsets at lexical-token starts after the header colon, up to and including the start
/// of the final token.
std::vector<std::size_t> cut_candidates(std::string_view code);

/// nullopt when the point is ineligible or has no body token to cut before.
std::optional<Cut> build_random_cut(const features::DataPoint& p, std::uint64_t seed);

struct DerivedTestbeds {
  std::vector<Testbed> testbeds;       // RandomCut, WithDocstring, FromDocstring, CommitGen, SummarizationGen
  std::vector<DedupReport> reports;    // same order
};

/// Throws DataError naming the testbed when fewer than n points are eligible.
DerivedTestbeds derive_task_testbeds(const Testbed& raw, const Testbed& raw_doc, std::size_t n,
                                     std::uint64_t seed, const tokenization::BpeModel& model,
                                     double threshold = 0.7);

/// RawData from every point, RawDataDocstring from points with a valid docstring.
Testbed make_raw_testbed(std::vector<features::DataPoint> points);
Testbed make_raw_docstring_testbed(const std::vector<features::DataPoint>& points);

std::string export_jsonl(const Testbed& tb);
Testbed import_jsonl(std::string_view text);

std::string dedup_csv_header();
std::string dedup_csv_row(const DedupReport& r);
std::vector<DedupReport> parse_dedup_csv(std::string_view text);

}  // namespace codecause::testbeds
