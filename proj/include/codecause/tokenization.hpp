#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace codecause::tokenization {

/// Byte-level BPE. Tokens are raw byte strings; the first 256 ids are the single bytes.
class BpeModel {
 public:
  BpeModel();  // byte alphabet only, no merges

  /// Deterministic for a fixed corpus order. Ties between equally frequent pairs go to the
  /// lexicographically smallest (left, right) byte pair. Throws DataError on an empty corpus
  /// or a vocab_size not above the base alphabet.
  static BpeModel train(const std::vector<std::string>& corpus, std::size_t vocab_size,
                        std::vector<std::string> special_tokens = {});

  std::vector<std::string> encode(std::string_view text) const;
  std::vector<std::int32_t> encode_ids(std::string_view text) const;
  static std::string decode(const std::vector<std::string>& tokens);
  std::string decode_ids(const std::vector<std::int32_t>& ids) const;

  std::size_t vocab_size() const { return id_to_token_.size(); }
  const std::vector<std::pair<std::string, std::string>>& merges() const { return merges_; }
  const std::vector<std::string>& special_tokens() const { return specials_; }
  std::int32_t id_of(const std::string& token) const;
  const std::string& token_of(std::int32_t id) const { return id_to_token_.at(static_cast<std::size_t>(id)); }

  /// {"vocab": {token: id}, "merges": ["a b", ...], "special_tokens": [...]}; tokens are
  /// rendered through the printable byte-to-unicode table.
  std::string to_json() const;
  static BpeModel from_json(std::string_view text);

 private:
  void add_token(std::string token);
  std::vector<std::string> encode_chunk(std::string_view chunk) const;

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, std::int32_t> token_to_id_;
  std::vector<std::pair<std::string, std::string>> merges_;
  std::map<std::pair<std::string, std::string>, std::size_t> merge_rank_;
  std::vector<std::string> specials_;
};

/// Splits text into merge-isolated chunks: a word, digit run or punctuation run may carry one
/// leading space; other whitespace stays in its own chunk. Concatenation restores the text.
std::vector<std::string_view> pretokenize(std::string_view text);

enum class TokenClass {
  blocks,
  tests,
  oop,
  declarations,
  exceptions,
  datatype,
  loops,
  operators,
  conditionals,
  extraTokens,
};

const std::vector<TokenClass>& all_token_classes();
std::string_view class_name(TokenClass c);
TokenClass class_from_name(std::string_view name);

class TaxonomyTable {
 public:
  /// Built-in keyword table.
  TaxonomyTable();
  /// {"class name": ["keyword", ...], ...}; classes not listed keep their defaults.
  static TaxonomyTable from_json(std::string_view text);

  /// Surrounding whitespace is ignored; anything unmapped is extraTokens.
  TokenClass classify(std::string_view token) const;

 private:
  std::unordered_map<std::string, TokenClass> class_of_;
};

using ClassHistogram = std::map<TokenClass, std::int64_t>;

/// Every token is counted once, so the histogram total equals tokens.size().
ClassHistogram classify_tokens(const std::vector<std::string>& tokens, const TaxonomyTable& table);

}  // namespace codecause::tokenization
