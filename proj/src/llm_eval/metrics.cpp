#include <algorithm>
#include <cmath>
#include <map>

#include "codecause/error.hpp"
#include "codecause/llm_eval.hpp"
#include "codecause/python/lexer.hpp"
#include "codecause/util.hpp"

namespace codecause::llm_eval {

std::vector<std::string> code_tokens(std::string_view code) {
  std::vector<std::string> out;
  for (const python::Token& t : python::tokenize(code)) {
    if (python::is_significant(t.kind)) out.emplace_back(t.text(code));
  }
  return out;
}

namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, std::int64_t> ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
  std::map<Ngram, std::int64_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i), tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

}  // namespace

double bleu_tokens(const std::vector<std::string>& candidate, const std::vector<std::string>& reference, int max_n,
                   const TokenWeight& unigram_weight) {
  if (reference.empty()) throw DataError("BLEU needs a non-empty reference");
  if (max_n < 1) throw UsageError("BLEU order must be at least 1");
  if (candidate.empty()) return 0.0;
  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const auto cand = ngram_counts(candidate, static_cast<std::size_t>(n));
    const auto ref = ngram_counts(reference, static_cast<std::size_t>(n));
    double matched = 0.0;
    double total = 0.0;
    for (const auto& [gram, count] : cand) {
      const double w = (n == 1 && unigram_weight) ? unigram_weight(gram.front()) : 1.0;
      const auto it = ref.find(gram);
      const std::int64_t clipped = it == ref.end() ? 0 : std::min(count, it->second);
      matched += w * static_cast<double>(clipped);
      total += w * static_cast<double>(count);
    }
    double p;
    if (n >= 2 && matched == 0.0) {
      p = 1.0 / (total + 1.0);
    } else {
      if (total == 0.0 || matched == 0.0) return 0.0;
      p = matched / total;
    }
    log_sum += std::log(p);
  }
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum / max_n);
}

double bleu(std::string_view candidate, std::string_view reference, int max_n) {
  return bleu_tokens(code_tokens(candidate), code_tokens(reference), max_n);
}

namespace {

std::vector<std::uint32_t> code_points(std::string_view s) {
  std::vector<std::uint32_t> out;
  out.reserve(s.size());
  if (!is_valid_utf8(s)) {
    for (unsigned char c : s) out.push_back(c);
    return out;
  }
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    int len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : 4;
    std::uint32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
    for (int k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

}  // namespace

EditResult levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::uint32_t> x = code_points(a);
  std::vector<std::uint32_t> y = code_points(b);
  const std::size_t longest = std::max(x.size(), y.size());
  if (longest == 0) return {0, 1.0};
  if (x.size() < y.size()) std::swap(x, y);
  // Two-row DP over the shorter string.
  std::vector<std::int64_t> prev(y.size() + 1);
  std::vector<std::int64_t> curr(y.size() + 1);
  for (std::size_t j = 0; j <= y.size(); ++j) prev[j] = static_cast<std::int64_t>(j);
  for (std::size_t i = 1; i <= x.size(); ++i) {
    curr[0] = static_cast<std::int64_t>(i);
    for (std::size_t j = 1; j <= y.size(); ++j) {
      const std::int64_t sub = prev[j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1);
      curr[j] = std::min({prev[j] + 1, curr[j - 1] + 1, sub});
    }
    std::swap(prev, curr);
  }
  const std::int64_t d = prev[y.size()];
  return {d, 1.0 - static_cast<double>(d) / static_cast<double>(longest)};
}

}  // namespace codecause::llm_eval
