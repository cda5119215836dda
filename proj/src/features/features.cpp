#include "codecause/features.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <exception>
#include <set>
#include <sstream>
#include <unordered_set>

#include "codecause/error.hpp"
#include "codecause/util.hpp"

namespace codecause::features {

using python::Node;
using python::ParseResult;
using python::TokenKind;

const std::vector<std::string>& numeric_feature_names() {
  static const std::vector<std::string> names = {
      "n_whitespaces", "nloc",        "token_count", "n_ast_errors", "n_ast_levels",
      "n_ast_nodes",   "complexity",  "n_identifiers", "n_words",    "vocab_size"};
  return names;
}

std::optional<double> feature_value(const FeatureVector& f, std::string_view name) {
  if (name == "n_whitespaces") return static_cast<double>(f.n_whitespaces);
  if (name == "nloc") return static_cast<double>(f.nloc);
  if (name == "token_count") return static_cast<double>(f.token_count);
  if (name == "n_identifiers") return static_cast<double>(f.n_identifiers);
  if (name == "complexity") return static_cast<double>(f.complexity);
  if (name == "n_ast_errors") return static_cast<double>(f.n_ast_errors);
  if (name == "n_ast_levels") return static_cast<double>(f.n_ast_levels);
  if (name == "n_ast_nodes") return static_cast<double>(f.n_ast_nodes);
  if (name == "n_words") return static_cast<double>(f.n_words);
  if (name == "vocab_size") return static_cast<double>(f.vocab_size);
  return std::nullopt;
}

ParseResult parse_method(std::string code) { return python::parse(std::move(code)); }

SyntacticFeatures compute_syntactic_features(const ParseResult& parsed) {
  SyntacticFeatures out;
  out.n_ast_nodes = static_cast<std::int64_t>(python::count_nodes(parsed.root));
  out.n_ast_levels = static_cast<std::int64_t>(python::tree_depth(parsed.root));
  out.n_ast_errors = parsed.n_errors;
  out.token_count = std::count_if(parsed.tokens.begin(), parsed.tokens.end(),
                                  [](const python::Token& t) { return python::is_significant(t.kind); });
  out.n_whitespaces = std::count_if(parsed.source.begin(), parsed.source.end(),
                                    [](char c) { return c == ' ' || c == '\t' || c == '\n'; });
  return out;
}

bool is_decision_point(std::string_view type) {
  static constexpr std::array<std::string_view, 9> kDecisions = {
      "if_statement",     "elif_clause",     "while_statement",
      "for_statement",    "except_clause",   "assert_statement",
      "boolean_operator", "conditional_expression", "if_clause"};
  return std::find(kDecisions.begin(), kDecisions.end(), type) != kDecisions.end();
}

SoftwareMetrics compute_software_metrics(const ParseResult& parsed) {
  SoftwareMetrics out;
  std::set<std::uint32_t> lines;
  std::unordered_set<std::string_view> names;
  for (const python::Token& t : parsed.tokens) {
    if (!python::is_significant(t.kind)) continue;
    for (std::uint32_t l = t.line; l <= t.end_line; ++l) lines.insert(l);
    if (t.kind == TokenKind::Name) {
      const std::string_view word = t.text(parsed.source);
      if (!python::is_keyword(word)) names.insert(word);
    }
  }
  out.nloc = static_cast<std::int64_t>(lines.size());
  out.n_identifiers = static_cast<std::int64_t>(names.size());
  std::int64_t decisions = 0;
  python::walk(parsed.root, [&](const Node& n) {
    if (is_decision_point(n.type)) ++decisions;
  });
  out.complexity = 1 + decisions;
  return out;
}

std::int64_t count_words(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::int64_t n = 0;
  std::string w;
  while (in >> w) ++n;
  return n;
}

bool is_valid_docstring(const std::optional<std::string>& docstring) {
  return docstring && count_words(*docstring) > 3;
}

namespace {

std::string strip_punct(std::string word) {
  auto is_p = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
  while (!word.empty() && is_p(word.back())) word.pop_back();
  std::size_t i = 0;
  while (i < word.size() && is_p(word[i])) ++i;
  return word.substr(i);
}

struct LanguageProfile {
  std::string_view tag;
  std::array<std::string_view, 24> trigrams;
};

// Frequent character trigrams (space-padded words) per language.
constexpr std::array<LanguageProfile, 6> kProfiles = {{
    {"en", {" th", "the", "he ", "and", " an", "nd ", "ing", "ng ", " to", "to ", " of", "of ",
            "ion", "tio", " in", "ed ", "er ", " re", "es ", " is", "is ", "for", "urn", "rns"}},
    {"es", {" de", "de ", "os ", " la", "la ", " el", "el ", " en", "que", " qu", "ue ", "ión",
            "aci", " co", "as ", " pa", "ara", "par", "los", " lo", "ar ", "con", "una", " un"}},
    {"fr", {" le", "le ", "les", " et", "et ", " un", "une", " pa", "re ", "eur", " du", "du ",
            "des", " po", "our", "ur ", "ne ", "est", "ées", "ait", "ons", " qu", "que", "ue "}},
    {"de", {"der", "ich", "ein", " di", "die", "ie ", "sch", "che", "den", "und", " un", " ei",
            "ine", "cht", "ch ", "gen", " zu", "ung", " da", "ist", " ge", "ter", "ber", " ni"}},
    {"pt", {"ão ", "ção", "os ", " do", "do ", "da ", " da", " pa", "ara", "com", "em ", " em",
            "um ", "uma", " um", " se", "ra ", " co", "ada", "ado", "nte", " qu", "que", "ue "}},
    {"it", {" di", "di ", "che", " ch", "ell", "del", "ato", "are", "one", "ne ", "per", " pe",
            "zio", " il", "il ", "lla", "gli", "ere", "no ", " co", "to ", "ent", " la", "la "}},
}};

}  // namespace

std::string detect_language(std::string_view text) {
  std::size_t letters = 0, cyrillic = 0, cjk = 0;
  for (std::size_t i = 0; i < text.size();) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c < 0x80) {
      if (std::isalpha(c)) ++letters;
      ++i;
      continue;
    }
    if ((c & 0xe0) == 0xc0 && (c == 0xd0 || c == 0xd1)) ++cyrillic;
    if ((c & 0xf0) == 0xe0 && c >= 0xe3 && c <= 0xe9) ++cjk;
    ++letters;
    i += (c & 0xe0) == 0xc0 ? 2 : (c & 0xf0) == 0xe0 ? 3 : (c & 0xf8) == 0xf0 ? 4 : 1;
  }
  if (letters == 0) return "en";
  if (cyrillic * 2 > letters) return "ru";
  if (cjk * 2 > letters) return "zh";
  std::string padded = " ";
  for (char c : to_lower(text)) {
    padded.push_back(std::isspace(static_cast<unsigned char>(c)) ? ' ' : c);
  }
  padded.push_back(' ');
  std::string_view best = "en";
  std::size_t best_score = 0;
  for (const LanguageProfile& profile : kProfiles) {
    std::size_t score = 0;
    for (std::string_view tri : profile.trigrams) {
      for (std::size_t pos = padded.find(tri); pos != std::string::npos; pos = padded.find(tri, pos + 1)) {
        ++score;
      }
    }
    if (score > best_score) {
      best_score = score;
      best = profile.tag;
    }
  }
  return std::string(best);
}

DocstringFeatures extract_docstring_features(const std::optional<std::string>& docstring) {
  DocstringFeatures out;
  if (!docstring) return out;
  std::istringstream in(*docstring);
  std::set<std::string> vocab;
  std::string w;
  while (in >> w) {
    ++out.n_words;
    std::string norm = strip_punct(to_lower(w));
    vocab.insert(norm.empty() ? to_lower(w) : norm);
  }
  out.vocab_size = static_cast<std::int64_t>(vocab.size());
  out.language = detect_language(*docstring);
  return out;
}

FeatureVector compute_features(const ingest::RawSample& raw) {
  const ParseResult parsed = parse_method(raw.code);
  const SyntacticFeatures syn = compute_syntactic_features(parsed);
  const SoftwareMetrics sw = compute_software_metrics(parsed);
  const DocstringFeatures doc = extract_docstring_features(raw.docstring);
  FeatureVector f;
  f.n_whitespaces = syn.n_whitespaces;
  f.nloc = sw.nloc;
  f.token_count = syn.token_count;
  f.n_identifiers = sw.n_identifiers;
  f.complexity = sw.complexity;
  f.n_ast_errors = syn.n_ast_errors;
  f.n_ast_levels = syn.n_ast_levels;
  f.n_ast_nodes = syn.n_ast_nodes;
  f.n_words = doc.n_words;
  f.vocab_size = doc.vocab_size;
  f.language = doc.language;
  return f;
}

DataPoint make_datapoint(ingest::RawSample raw) {
  FeatureVector f = compute_features(raw);
  return DataPoint{std::move(raw), std::move(f)};
}

std::vector<DataPoint> extract_all_serial(std::vector<ingest::RawSample> samples) {
  std::vector<DataPoint> out;
  out.reserve(samples.size());
  for (auto& s : samples) out.push_back(make_datapoint(std::move(s)));
  return out;
}

std::vector<DataPoint> extract_all(std::vector<ingest::RawSample> samples) {
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
  std::vector<FeatureVector> computed(samples.size());
  std::vector<std::exception_ptr> errors(samples.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      computed[i] = compute_features(samples[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<DataPoint> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out.push_back(DataPoint{std::move(samples[i]), std::move(computed[i])});
  }
  return out;
}

nlohmann::ordered_json to_json(const DataPoint& p) {
  nlohmann::ordered_json j = ingest::to_json(p.raw);
  // Feature keys go between the sample schema and any extras.
  nlohmann::ordered_json out;
  for (const std::string& key : ingest::sample_keys()) out[key] = j[key];
  const FeatureVector& f = p.features;
  out["n_whitespaces"] = f.n_whitespaces;
  out["nloc"] = f.nloc;
  out["token_count"] = f.token_count;
  out["n_identifiers"] = f.n_identifiers;
  out["complexity"] = f.complexity;
  out["n_ast_errors"] = f.n_ast_errors;
  out["n_ast_levels"] = f.n_ast_levels;
  out["n_ast_nodes"] = f.n_ast_nodes;
  out["n_words"] = f.n_words;
  out["vocab_size"] = f.vocab_size;
  out["language"] = f.language;
  for (const auto& [key, value] : p.raw.extras) {
    if (!out.contains(key)) out[key] = nlohmann::ordered_json::parse(value);
  }
  return out;
}

DataPoint datapoint_from_json(const nlohmann::ordered_json& j, std::size_t line) {
  ingest::RawSample raw = ingest::sample_from_json(j, line);
  const bool has_features = j.contains("nloc") && j.contains("n_ast_nodes");
  if (!has_features) return make_datapoint(std::move(raw));
  auto take = [&](const char* key) -> std::int64_t {
    raw.extras.erase(key);
    if (!j.contains(key) || !j[key].is_number_integer()) {
      throw DataError("line " + std::to_string(line) + ": missing or non-integer field '" + key + "'");
    }
    return j[key].get<std::int64_t>();
  };
  FeatureVector f;
  f.n_whitespaces = take("n_whitespaces");
  f.nloc = take("nloc");
  f.token_count = take("token_count");
  f.n_identifiers = take("n_identifiers");
  f.complexity = take("complexity");
  f.n_ast_errors = take("n_ast_errors");
  f.n_ast_levels = take("n_ast_levels");
  f.n_ast_nodes = take("n_ast_nodes");
  f.n_words = take("n_words");
  f.vocab_size = take("vocab_size");
  raw.extras.erase("language");
  f.language = j.value("language", std::string("en"));
  return DataPoint{std::move(raw), std::move(f)};
}

std::string export_jsonl(const std::vector<DataPoint>& points) {
  std::string out;
  for (const DataPoint& p : points) {
    out += to_json(p).dump();
    out += '\n';
  }
  return out;
}

std::vector<DataPoint> import_jsonl(std::string_view text) {
  std::vector<DataPoint> out;
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
    out.push_back(datapoint_from_json(j, line_no));
  }
  return out;
}

}  // namespace codecause::features
