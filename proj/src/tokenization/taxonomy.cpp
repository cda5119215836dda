#include "codecause/error.hpp"
#include "codecause/tokenization.hpp"
#include "codecause/util.hpp"
#include "json.hpp"

namespace codecause::tokenization {

const std::vector<TokenClass>& all_token_classes() {
  static const std::vector<TokenClass> classes = {
      TokenClass::blocks,     TokenClass::tests,    TokenClass::oop,   TokenClass::declarations,
      TokenClass::exceptions, TokenClass::datatype, TokenClass::loops, TokenClass::operators,
      TokenClass::conditionals, TokenClass::extraTokens};
  return classes;
}

std::string_view class_name(TokenClass c) {
  switch (c) {
    case TokenClass::blocks: return "blocks";
    case TokenClass::tests: return "tests";
    case TokenClass::oop: return "oop";
    case TokenClass::declarations: return "declarations";
    case TokenClass::exceptions: return "exceptions";
    case TokenClass::datatype: return "datatype";
    case TokenClass::loops: return "loops";
    case TokenClass::operators: return "operators";
    case TokenClass::conditionals: return "conditionals";
    case TokenClass::extraTokens: return "extraTokens";
  }
  return "extraTokens";
}

TokenClass class_from_name(std::string_view name) {
  for (TokenClass c : all_token_classes()) {
    if (class_name(c) == name) return c;
  }
  throw DataError("unknown taxonomy class '" + std::string(name) + "'");
}

TaxonomyTable::TaxonomyTable() {
  const std::vector<std::pair<TokenClass, std::vector<std::string>>> defaults = {
      {TokenClass::exceptions, {"try", "except", "finally", "raise"}},
      {TokenClass::conditionals, {"if", "elif", "else"}},
      {TokenClass::loops, {"for", "while", "break", "continue"}},
      {TokenClass::oop, {"class", "self", "super"}},
      {TokenClass::declarations, {"def", "lambda", "import", "from", "as", "global", "nonlocal", "return"}},
      {TokenClass::datatype, {"int", "float", "str", "bool", "list", "dict", "set", "tuple"}},
      {TokenClass::tests, {"assert"}},
      {TokenClass::blocks, {"with", "pass", "yield"}},
      {TokenClass::operators, {"and", "or", "not", "in", "is"}},
  };
  for (const auto& [cls, words] : defaults) {
    for (const auto& w : words) class_of_[w] = cls;
  }
}

TaxonomyTable TaxonomyTable::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("malformed taxonomy config: ") + e.what());
  }
  if (!j.is_object()) throw DataError("taxonomy config must be a JSON object");
  TaxonomyTable table;
  for (const auto& [name, words] : j.items()) {
    const TokenClass cls = class_from_name(name);
    // A class listed in the override replaces its default keyword set.
    std::erase_if(table.class_of_, [&](const auto& kv) { return kv.second == cls; });
    for (const auto& w : words) table.class_of_[w.get<std::string>()] = cls;
  }
  return table;
}

TokenClass TaxonomyTable::classify(std::string_view token) const {
  const auto it = class_of_.find(std::string(trim(token)));
  return it == class_of_.end() ? TokenClass::extraTokens : it->second;
}

ClassHistogram classify_tokens(const std::vector<std::string>& tokens, const TaxonomyTable& table) {
  ClassHistogram hist;
  for (const std::string& t : tokens) ++hist[table.classify(t)];
  return hist;
}

}  // namespace codecause::tokenization
