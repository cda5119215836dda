#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "codecause/util.hpp"
#include "json.hpp"

namespace codecause::ingest {

/// Repository-search predicate. Size is in KB (search API convention).
struct RepoQuery {
  std::string language = "Python";
  bool fork_allowed = false;
  std::int64_t min_size_kb = 30000;
  Date pushed_after{2021, 12, 31};
  std::int64_t min_stars = 1000;

  /// Throws DataError when a count is negative.
  void validate() const;
};

/// Metadata for one entry of a repository catalog (search results or a pre-fetched dump).
struct RepoInfo {
  std::string full_name;
  std::string language;
  bool fork = false;
  std::int64_t size_kb = 0;
  Date pushed_at;
  std::int64_t stars = 0;
  std::string clone_path;  // local clone, empty when not yet cloned
};

/// Inclusive on both ends, compared on the UTC calendar date.
struct DateWindow {
  Date start{2022, 1, 2};
  Date end{2023, 1, 1};

  DateWindow() = default;
  /// Throws DataError when start > end.
  DateWindow(Date start, Date end);

  bool contains(const Timestamp& t) const;
};

struct RawSample {
  std::string commit_id;
  std::string repository;
  std::string path;
  std::string file_name;
  std::string fun_name;
  std::string commit_message;
  std::optional<std::string> docstring;
  std::string code;
  Timestamp committed_at;
  /// Unknown JSONL keys, kept verbatim as serialized JSON values.
  std::map<std::string, std::string> extras;

  bool operator==(const RawSample&) const = default;
};

bool is_commit_hash(std::string_view id);

/// Entries of `catalog` that satisfy every predicate of `query`, in input order.
std::vector<RepoInfo> select_repositories(const RepoQuery& query, const std::vector<RepoInfo>& catalog);

std::vector<RepoInfo> read_catalog_jsonl(std::string_view text);

/// One sample per Python function added or changed by each non-merge commit whose committer
/// date falls in `window`. Throws DataError naming the repository when it cannot be read.
std::vector<RawSample> harvest_methods(const std::filesystem::path& repo, const DateWindow& window);

/// Harvests several repositories, one worker per repository, merged in input order.
std::vector<RawSample> harvest_all(const std::vector<std::filesystem::path>& repos,
                                   const DateWindow& window, int jobs);

struct ValidationReport {
  bool pass = true;
  std::vector<std::string> reasons;
};

ValidationReport validate_sample(const RawSample& sample, const DateWindow& window);

/// Schema keys first, extras after in key order.
nlohmann::ordered_json to_json(const RawSample& s);
/// Keys outside the schema land in `extras`. `line` is used in error messages.
RawSample sample_from_json(const nlohmann::ordered_json& j, std::size_t line);
/// Schema keys of the sample JSONL, in emission order.
const std::vector<std::string>& sample_keys();

std::string export_jsonl(const std::vector<RawSample>& samples);
/// Throws DataError citing the 1-based line number on malformed JSON or a missing field.
std::vector<RawSample> import_jsonl(std::string_view text);

/// A function definition located in a Python module.
struct FunctionSource {
  std::string name;            // simple name
  std::string qualified_name;  // Outer.inner
  std::string code;            // dedented source from `def` (or first decorator) to body end
  std::optional<std::string> docstring;
  std::uint32_t line = 0;
};

/// Every function definition in `module_source`, in source order (nested ones included).
std::vector<FunctionSource> extract_functions(const std::string& module_source);

/// Leading string literal of a function body, unquoted and stripped; comments never contribute.
std::optional<std::string> function_docstring(std::string_view function_code);

}  // namespace codecause::ingest
