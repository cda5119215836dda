#include "codecause/testbeds.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "codecause/csv.hpp"
#include "codecause/error.hpp"
#include "codecause/util.hpp"

namespace codecause::testbeds {
namespace {

struct NameInfo {
  TestbedName name;
  std::string_view str;
  Task task;
  IoKind io;
};

constexpr NameInfo kNames[] = {
    {TestbedName::RawData, "RawData", Task::raw, IoKind::code_to_code},
    {TestbedName::RawDataDocstring, "RawDataDocstring", Task::raw, IoKind::code_to_code},
    {TestbedName::RandomCut, "RandomCut", Task::code_completion, IoKind::code_to_code},
    {TestbedName::WithDocstring, "WithDocstring", Task::code_completion, IoKind::code_text_to_code},
    {TestbedName::FromDocstring, "FromDocstring", Task::code_completion, IoKind::text_to_code},
    {TestbedName::CommitGen, "CommitGen", Task::code_generation, IoKind::code_to_text},
    {TestbedName::SummarizationGen, "SummarizationGen", Task::summarization, IoKind::code_to_text},
};

const NameInfo& info(TestbedName n) {
  for (const auto& i : kNames) {
    if (i.name == n) return i;
  }
  return kNames[0];
}

// Stable per-point seed: independent of the point's position in the corpus.
std::uint64_t point_seed(const features::DataPoint& p, std::uint64_t seed) {
  const std::string key = p.raw.commit_id + "\x1f" + p.raw.path + "\x1f" + p.raw.fun_name + "\x1f" +
                          std::to_string(seed);
  return std::stoull(sha256_hex(key).substr(0, 16), nullptr, 16);
}

}  // namespace

std::string_view name_str(TestbedName n) { return info(n).str; }
Task task_of(TestbedName n) { return info(n).task; }
IoKind io_of(TestbedName n) { return info(n).io; }

TestbedName name_from_str(std::string_view s) {
  for (const auto& i : kNames) {
    if (i.str == s) return i.name;
  }
  throw DataError("unknown testbed '" + std::string(s) + "'");
}

std::string_view task_str(Task t) {
  switch (t) {
    case Task::code_completion: return "code completion";
    case Task::code_generation: return "code generation";
    case Task::summarization: return "summarization";
    case Task::raw: return "raw";
  }
  return "raw";
}

std::string_view io_str(IoKind k) {
  switch (k) {
    case IoKind::code_to_code: return "code=>code";
    case IoKind::code_text_to_code: return "code-text=>code";
    case IoKind::text_to_code: return "text=>code";
    case IoKind::code_to_text: return "code=>text";
  }
  return "code=>code";
}

TokenSet token_set(const tokenization::BpeModel& model, std::string_view text) {
  TokenSet ids = model.encode_ids(text);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

double jaccard_similarity(const TokenSet& a, const TokenSet& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

DedupResult dedup_serial(const std::vector<TokenSet>& sets, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw UsageError("dedup threshold must be in (0, 1]");
  DedupResult result;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const bool dup = std::any_of(result.kept.begin(), result.kept.end(), [&](std::size_t k) {
      return jaccard_similarity(sets[i], sets[k]) >= threshold;
    });
    if (!dup) result.kept.push_back(i);
  }
  result.report.before = sets.size();
  result.report.after = result.kept.size();
  result.report.dupes = sets.size() - result.kept.size();
  return result;
}

DedupResult dedup(const std::vector<TokenSet>& sets, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw UsageError("dedup threshold must be in (0, 1]");
  const auto n = static_cast<std::ptrdiff_t>(sets.size());
  // Earlier items each item is too similar to; the keep/drop pass below is sequential.
  std::vector<std::vector<std::size_t>> similar_earlier(sets.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    for (std::ptrdiff_t j = 0; j < i; ++j) {
      if (jaccard_similarity(sets[i], sets[j]) >= threshold) {
        similar_earlier[i].push_back(static_cast<std::size_t>(j));
      }
    }
  }
  std::vector<char> kept(sets.size(), 0);
  DedupResult result;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const bool dup = std::any_of(similar_earlier[i].begin(), similar_earlier[i].end(),
                                 [&](std::size_t j) { return kept[j] != 0; });
    if (!dup) {
      kept[i] = 1;
      result.kept.push_back(i);
    }
  }
  result.report.before = sets.size();
  result.report.after = result.kept.size();
  result.report.dupes = sets.size() - result.kept.size();
  return result;
}

std::vector<std::size_t> sample_indices(std::size_t corpus_size, std::size_t n, std::uint64_t seed) {
  if (n > corpus_size) {
    throw DataError("cannot sample " + std::to_string(n) + " points from a corpus of " +
                    std::to_string(corpus_size));
  }
  std::vector<std::size_t> idx(corpus_size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(n);
  return idx;
}

bool is_cut_eligible(const features::DataPoint& p) {
  return p.features.token_count > 10 || p.raw.code.size() > 100;
}

bool is_descriptive_text(std::string_view text) {
  return features::count_words(text) > 10 || text.size() > 50;
}

std::vector<std::size_t> cut_candidates(std::string_view code) {
  const python::ParseResult parsed = python::parse(std::string(code));
  const python::Node* fn = nullptr;
  python::walk(parsed.root, [&](const python::Node& n) {
    if (!fn && n.type == "function_definition") fn = &n;
  });
  if (!fn) return {};
  const python::Node& body = fn->children.back();
  std::vector<const python::Token*> sig;
  for (const python::Token& t : parsed.tokens) {
    if (python::is_significant(t.kind)) sig.push_back(&t);
  }
  std::ptrdiff_t colon = -1;
  for (std::size_t k = 0; k < sig.size(); ++k) {
    if (sig[k]->begin >= body.begin) break;
    if (sig[k]->kind == python::TokenKind::Op && sig[k]->text(parsed.source) == ":") {
      colon = static_cast<std::ptrdiff_t>(k);
    }
  }
  std::vector<std::size_t> out;
  if (colon < 0) return out;
  for (std::size_t k = static_cast<std::size_t>(colon) + 1; k < sig.size(); ++k) out.push_back(sig[k]->begin);
  return out;
}

std::optional<Cut> build_random_cut(const features::DataPoint& p, std::uint64_t seed) {
  if (!is_cut_eligible(p)) return std::nullopt;
  const std::vector<std::size_t> candidates = cut_candidates(p.raw.code);
  if (candidates.empty()) return std::nullopt;
  std::mt19937_64 rng(point_seed(p, seed));
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  Cut cut;
  cut.offset = candidates[pick(rng)];
  cut.prefix = p.raw.code.substr(0, cut.offset);
  cut.suffix = p.raw.code.substr(cut.offset);
  return cut;
}

namespace {

Testbed dedup_testbed(Testbed tb, const tokenization::BpeModel& model, double threshold, DedupReport& report) {
  std::vector<TokenSet> sets(tb.points.size());
  const auto n = static_cast<std::ptrdiff_t>(tb.points.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) sets[i] = token_set(model, tb.points[i].point.raw.code);
  const DedupResult r = dedup(sets, threshold);
  std::vector<TestbedPoint> kept;
  kept.reserve(r.kept.size());
  for (std::size_t i : r.kept) kept.push_back(std::move(tb.points[i]));
  tb.points = std::move(kept);
  report = r.report;
  report.testbed = std::string(name_str(tb.name));
  return tb;
}

std::vector<const features::DataPoint*> filter(const Testbed& source, auto pred) {
  std::vector<const features::DataPoint*> out;
  for (const TestbedPoint& tp : source.points) {
    if (pred(tp.point)) out.push_back(&tp.point);
  }
  return out;
}

Testbed draw(TestbedName name, const std::vector<const features::DataPoint*>& pool, std::size_t n,
             std::uint64_t seed) {
  if (pool.size() < n) {
    throw DataError("testbed " + std::string(name_str(name)) + ": only " + std::to_string(pool.size()) +
                    " eligible points, " + std::to_string(n) + " required");
  }
  Testbed tb;
  tb.name = name;
  tb.seed = seed;
  for (std::size_t i : sample_indices(pool.size(), n, seed)) tb.points.push_back(TestbedPoint{*pool[i], {}, {}});
  return tb;
}

void apply_cuts(Testbed& tb) {
  for (TestbedPoint& tp : tb.points) {
    const auto cut = build_random_cut(tp.point, tb.seed);
    // Eligibility was checked when the pool was drawn.
    tp.cut_prefix = cut->prefix;
    tp.expected_suffix = cut->suffix;
  }
}

bool cuttable(const features::DataPoint& p) { return build_random_cut(p, 0).has_value(); }

}  // namespace

DerivedTestbeds derive_task_testbeds(const Testbed& raw, const Testbed& raw_doc, std::size_t n, std::uint64_t seed,
                                     const tokenization::BpeModel& model, double threshold) {
  for (const TestbedPoint& tp : raw_doc.points) {
    if (!features::is_valid_docstring(tp.point.raw.docstring)) {
      throw DataError("RawDataDocstring contains a point without a valid docstring (" + tp.point.raw.fun_name + ")");
    }
  }
  DerivedTestbeds out;
  auto finish = [&](Testbed tb, bool cut) {
    DedupReport report;
    tb = dedup_testbed(std::move(tb), model, threshold, report);
    if (cut) apply_cuts(tb);
    out.testbeds.push_back(std::move(tb));
    out.reports.push_back(report);
  };
  finish(draw(TestbedName::RandomCut, filter(raw, cuttable), n, seed), true);
  finish(draw(TestbedName::WithDocstring, filter(raw_doc, cuttable), n, seed), true);
  finish(draw(TestbedName::FromDocstring, filter(raw_doc, [](const auto&) { return true; }), n, seed), false);
  finish(draw(TestbedName::CommitGen,
              filter(raw_doc, [](const features::DataPoint& p) { return is_descriptive_text(p.raw.commit_message); }),
              n, seed),
         false);
  finish(draw(TestbedName::SummarizationGen,
              filter(raw_doc,
                     [](const features::DataPoint& p) { return p.raw.docstring && is_descriptive_text(*p.raw.docstring); }),
              n, seed),
         false);
  return out;
}

Testbed make_raw_testbed(std::vector<features::DataPoint> points) {
  Testbed tb;
  tb.name = TestbedName::RawData;
  for (auto& p : points) tb.points.push_back(TestbedPoint{std::move(p), {}, {}});
  return tb;
}

Testbed make_raw_docstring_testbed(const std::vector<features::DataPoint>& points) {
  Testbed tb;
  tb.name = TestbedName::RawDataDocstring;
  for (const auto& p : points) {
    if (features::is_valid_docstring(p.raw.docstring)) tb.points.push_back(TestbedPoint{p, {}, {}});
  }
  return tb;
}

std::string export_jsonl(const Testbed& tb) {
  std::string out;
  for (const TestbedPoint& tp : tb.points) {
    nlohmann::ordered_json j = features::to_json(tp.point);
    j["testbed"] = name_str(tb.name);
    j["task"] = task_str(tb.task());
    if (tp.cut_prefix) j["cut_prefix"] = *tp.cut_prefix;
    if (tp.expected_suffix) j["expected_suffix"] = *tp.expected_suffix;
    out += j.dump();
    out += '\n';
  }
  return out;
}

Testbed import_jsonl(std::string_view text) {
  Testbed tb;
  bool named = false;
  std::size_t line_no = 0;
  for (const std::string& line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) + ": malformed JSON (" + e.what() + ")");
    }
    if (!j.contains("testbed") || !j["testbed"].is_string()) {
      throw DataError("line " + std::to_string(line_no) + ": missing required field 'testbed'");
    }
    const TestbedName name = name_from_str(j["testbed"].get<std::string>());
    if (named && name != tb.name) throw DataError("line " + std::to_string(line_no) + ": mixed testbeds in one file");
    tb.name = name;
    named = true;
    TestbedPoint tp{features::datapoint_from_json(j, line_no), {}, {}};
    for (const char* key : {"testbed", "task", "cut_prefix", "expected_suffix"}) tp.point.raw.extras.erase(key);
    if (j.contains("cut_prefix")) tp.cut_prefix = j["cut_prefix"].get<std::string>();
    if (j.contains("expected_suffix")) tp.expected_suffix = j["expected_suffix"].get<std::string>();
    tb.points.push_back(std::move(tp));
  }
  return tb;
}

std::string dedup_csv_header() { return csv_line({"testbed", "task", "io", "before", "dupes", "rate", "after"}); }

std::string dedup_csv_row(const DedupReport& r) {
  const TestbedName name = name_from_str(r.testbed);
  return csv_line({r.testbed, std::string(task_str(task_of(name))), std::string(io_str(io_of(name))),
                   std::to_string(r.before), std::to_string(r.dupes), format_fixed(r.rate(), 2) + "%",
                   std::to_string(r.after)});
}

std::vector<DedupReport> parse_dedup_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  std::vector<DedupReport> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const CsvRow& row = rows[i];
    if (row.size() != 7) throw DataError("dedup.csv row " + std::to_string(i + 1) + ": expected 7 columns");
    DedupReport r;
    r.testbed = row[0];
    r.before = std::stoull(row[3]);
    r.dupes = std::stoull(row[4]);
    r.after = std::stoull(row[6]);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace codecause::testbeds
