#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace codecause::python {

enum class TokenKind : std::uint8_t {
  Name,
  Number,
  String,
  Op,
  Newline,  // logical line end
  Nl,       // non-logical line end (blank, comment-only, inside brackets)
  Indent,
  Dedent,
  Comment,
  EndMarker,
  Error,  // unterminated string, stray character, inconsistent dedent
};

/// Byte range [begin, end) in the source; lines are 1-based.
struct Token {
  TokenKind kind;
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  std::uint32_t line = 1;
  std::uint32_t end_line = 1;

  std::string_view text(std::string_view source) const { return source.substr(begin, end - begin); }
};

/// Never fails: malformed input yields Error tokens. The stream always ends in EndMarker.
std::vector<Token> tokenize(std::string_view source);

bool is_keyword(std::string_view word);

/// Tokens with source text that are not comments or layout (Name, Number, String, Op, Error).
inline bool is_significant(TokenKind kind) {
  return kind == TokenKind::Name || kind == TokenKind::Number || kind == TokenKind::String ||
         kind == TokenKind::Op || kind == TokenKind::Error;
}

}  // namespace codecause::python
