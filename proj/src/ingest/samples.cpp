#include <algorithm>
#include <cctype>

#include "codecause/error.hpp"
#include "codecause/features.hpp"
#include "codecause/ingest.hpp"

namespace codecause::ingest {

using ojson = nlohmann::ordered_json;

void RepoQuery::validate() const {
  if (min_size_kb < 0) throw DataError("min_size_kb must be >= 0");
  if (min_stars < 0) throw DataError("min_stars must be >= 0");
}

DateWindow::DateWindow(Date s, Date e) : start(s), end(e) {
  if (end < start) {
    throw DataError("date window start " + format_date(start) + " is after end " + format_date(end));
  }
}

bool DateWindow::contains(const Timestamp& t) const {
  const Date d = t.date();
  return start <= d && d <= end;
}

bool is_commit_hash(std::string_view id) {
  if (id.size() < 7 || id.size() > 40) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isdigit(static_cast<unsigned char>(c)) || (c >= 'a' && c <= 'f');
  });
}

std::vector<RepoInfo> select_repositories(const RepoQuery& query, const std::vector<RepoInfo>& catalog) {
  query.validate();
  std::vector<RepoInfo> out;
  std::copy_if(catalog.begin(), catalog.end(), std::back_inserter(out), [&](const RepoInfo& r) {
    return to_lower(r.language) == to_lower(query.language) && (query.fork_allowed || !r.fork) &&
           r.size_kb >= query.min_size_kb && r.pushed_at > query.pushed_after &&
           r.stars > query.min_stars;
  });
  return out;
}

std::vector<RepoInfo> read_catalog_jsonl(std::string_view text) {
  std::vector<RepoInfo> out;
  std::size_t line_no = 0;
  for (const std::string& line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const ojson j = ojson::parse(line);
      RepoInfo r;
      r.full_name = j.at("full_name").get<std::string>();
      r.language = j.value("language", std::string());
      r.fork = j.value("fork", false);
      r.size_kb = j.at("size").get<std::int64_t>();
      std::string pushed = j.at("pushed_at").get<std::string>();
      r.pushed_at = parse_date(std::string_view(pushed).substr(0, 10));
      r.stars = j.at("stargazers_count").get<std::int64_t>();
      r.clone_path = j.value("clone_path", std::string());
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("catalog line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

ValidationReport validate_sample(const RawSample& sample, const DateWindow& window) {
  ValidationReport report;
  auto violate = [&](std::string reason) {
    report.pass = false;
    report.reasons.push_back(std::move(reason));
  };
  if (!window.contains(sample.committed_at)) violate("outside window");
  if (sample.code.empty()) violate("empty code");
  if (sample.docstring && !features::is_valid_docstring(sample.docstring)) {
    violate("docstring not larger than 3 words");
  }
  if (!is_commit_hash(sample.commit_id)) violate("malformed commit_id");
  return report;
}

const std::vector<std::string>& sample_keys() {
  static const std::vector<std::string> keys = {"commit_id", "repo",    "path",
                                                "file_name", "fun_name", "commit_message",
                                                "docstring", "code",    "committed_at"};
  return keys;
}

ojson to_json(const RawSample& s) {
  ojson j;
  j["commit_id"] = s.commit_id;
  j["repo"] = s.repository;
  j["path"] = s.path;
  j["file_name"] = s.file_name;
  j["fun_name"] = s.fun_name;
  j["commit_message"] = s.commit_message;
  j["docstring"] = s.docstring ? ojson(*s.docstring) : ojson(nullptr);
  j["code"] = s.code;
  j["committed_at"] = format_timestamp(s.committed_at);
  for (const auto& [key, value] : s.extras) j[key] = ojson::parse(value);
  return j;
}

RawSample sample_from_json(const ojson& j, std::size_t line) {
  const std::string where = "line " + std::to_string(line) + ": ";
  if (!j.is_object()) throw DataError(where + "expected a JSON object");
  auto field = [&](const char* key) -> std::string {
    if (!j.contains(key)) throw DataError(where + "missing required field '" + key + "'");
    if (!j[key].is_string()) throw DataError(where + "field '" + key + "' must be a string");
    return j[key].get<std::string>();
  };
  RawSample s;
  s.commit_id = field("commit_id");
  s.repository = field("repo");
  s.path = field("path");
  s.file_name = field("file_name");
  s.fun_name = field("fun_name");
  s.commit_message = field("commit_message");
  if (!j.contains("docstring")) throw DataError(where + "missing required field 'docstring'");
  if (!j["docstring"].is_null()) {
    if (!j["docstring"].is_string()) throw DataError(where + "field 'docstring' must be a string or null");
    s.docstring = j["docstring"].get<std::string>();
  }
  s.code = field("code");
  try {
    s.committed_at = parse_timestamp(field("committed_at"));
  } catch (const DataError& e) {
    throw DataError(where + e.what());
  }
  for (const auto& [key, value] : j.items()) {
    if (std::find(sample_keys().begin(), sample_keys().end(), key) == sample_keys().end()) {
      s.extras[key] = value.dump();
    }
  }
  return s;
}

std::string export_jsonl(const std::vector<RawSample>& samples) {
  std::string out;
  for (const RawSample& s : samples) {
    out += to_json(s).dump();
    out += '\n';
  }
  return out;
}

std::vector<RawSample> import_jsonl(std::string_view text) {
  std::vector<RawSample> out;
  std::size_t line_no = 0;
  for (const std::string& line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) + ": malformed JSON (" + e.what() + ")");
    }
    out.push_back(sample_from_json(j, line_no));
  }
  return out;
}

}  // namespace codecause::ingest
