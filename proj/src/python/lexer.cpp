#include "codecause/python/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <string_view>

namespace codecause::python {
namespace {

constexpr std::array<std::string_view, 35> kKeywords = {
    "False", "None",   "True",    "and",      "as",       "assert", "async",  "await", "break",
    "class", "continue", "def",   "del",      "elif",     "else",   "except", "finally", "for",
    "from",  "global", "if",      "import",   "in",       "is",     "lambda", "nonlocal", "not",
    "or",    "pass",   "raise",   "return",   "try",      "while",  "with",   "yield"};

// Longest first so that a linear scan finds the maximal munch.
constexpr std::array<std::string_view, 47> kOperators = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", ">>", "<<", "<=", ">=", "==", "!=", "+=",
    "-=",  "*=",  "/=",  "%=",  "&=",  "|=", "^=", "@=", "+",  "-",  "*",  "/",  "%",  "@",  "&",  "|",
    "^",   "~",   "<",   ">",   "(",   ")",  "[",  "]",  "{",  "}",  ",",  ":",  ".",  ";",  "="};

bool is_name_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_name_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    indents_.push_back(0);
    bool at_line_start = true;
    while (pos_ < src_.size()) {
      if (at_line_start && depth_ == 0) {
        if (!handle_indentation()) continue;  // blank or comment-only line consumed
        at_line_start = false;
      }
      const char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\f') {
        ++pos_;
      } else if (c == '\r' || c == '\n') {
        const std::size_t start = pos_;
        consume_newline();
        if (depth_ == 0) {
          push(TokenKind::Newline, start, pos_, line_ - 1, line_ - 1);
          at_line_start = true;
        } else {
          push(TokenKind::Nl, start, pos_, line_ - 1, line_ - 1);
        }
      } else if (c == '#') {
        lex_comment();
      } else if (c == '\\' && next_is_newline(pos_ + 1)) {
        ++pos_;
        consume_newline();
      } else {
        lex_token();
      }
    }
    finish();
    return std::move(tokens_);
  }

 private:
  void push(TokenKind kind, std::size_t begin, std::size_t end, std::uint32_t line,
            std::uint32_t end_line) {
    tokens_.push_back(Token{kind, static_cast<std::uint32_t>(begin), static_cast<std::uint32_t>(end),
                            line, end_line});
  }

  bool next_is_newline(std::size_t p) const {
    return p < src_.size() && (src_[p] == '\n' || src_[p] == '\r');
  }

  void consume_newline() {
    if (src_[pos_] == '\r' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') ++pos_;
    ++pos_;
    ++line_;
  }

  void lex_comment() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') ++pos_;
    push(TokenKind::Comment, start, pos_, line_, line_);
  }

  // Returns false when the line was blank or comment-only and has been consumed.
  bool handle_indentation() {
    std::size_t col = 0;
    std::size_t p = pos_;
    while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t' || src_[p] == '\f')) {
      col = src_[p] == '\t' ? (col / 8 + 1) * 8 : (src_[p] == '\f' ? 0 : col + 1);
      ++p;
    }
    if (p >= src_.size()) {
      pos_ = p;
      return false;
    }
    if (src_[p] == '#' || src_[p] == '\n' || src_[p] == '\r') {
      pos_ = p;
      if (src_[p] == '#') lex_comment();
      if (pos_ < src_.size()) {
        const std::size_t start = pos_;
        consume_newline();
        push(TokenKind::Nl, start, pos_, line_ - 1, line_ - 1);
      }
      return false;
    }
    if (col > indents_.back()) {
      indents_.push_back(col);
      push(TokenKind::Indent, pos_, p, line_, line_);
    } else if (col < indents_.back()) {
      while (indents_.size() > 1 && col < indents_.back()) {
        indents_.pop_back();
        push(TokenKind::Dedent, p, p, line_, line_);
      }
      if (col != indents_.back()) {
        // Dedent to a column that matches no enclosing block.
        push(TokenKind::Error, pos_, p, line_, line_);
        indents_.push_back(col);
      }
    }
    pos_ = p;
    return true;
  }

  void lex_token() {
    const auto c = static_cast<unsigned char>(src_[pos_]);
    const std::size_t start = pos_;
    if (is_name_start(c)) {
      std::size_t p = pos_;
      while (p < src_.size() && is_name_char(static_cast<unsigned char>(src_[p]))) ++p;
      const std::string_view word = src_.substr(pos_, p - pos_);
      if (p < src_.size() && (src_[p] == '\'' || src_[p] == '"') && is_string_prefix(word)) {
        lex_string(start, p);
        return;
      }
      pos_ = p;
      push(TokenKind::Name, start, pos_, line_, line_);
      return;
    }
    if (c == '\'' || c == '"') {
      lex_string(start, pos_);
      return;
    }
    if (std::isdigit(c) || (c == '.' && pos_ + 1 < src_.size() &&
                            std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      lex_number();
      push(TokenKind::Number, start, pos_, line_, line_);
      return;
    }
    for (std::string_view op : kOperators) {
      if (src_.substr(pos_, op.size()) == op) {
        pos_ += op.size();
        if (op == "(" || op == "[" || op == "{") {
          ++depth_;
        } else if ((op == ")" || op == "]" || op == "}") && depth_ > 0) {
          --depth_;
        }
        push(TokenKind::Op, start, pos_, line_, line_);
        return;
      }
    }
    // Stray character (e.g. '$', '?', '!' or a lone backslash). Consume one UTF-8 sequence.
    ++pos_;
    while (pos_ < src_.size() && (static_cast<unsigned char>(src_[pos_]) & 0xc0) == 0x80) ++pos_;
    push(TokenKind::Error, start, pos_, line_, line_);
  }

  static bool is_string_prefix(std::string_view word) {
    if (word.size() > 2) return false;
    const std::string_view allowed = "rRbBuUfF";
    return std::all_of(word.begin(), word.end(),
                       [&](char ch) { return allowed.find(ch) != std::string_view::npos; });
  }

  void lex_string(std::size_t start, std::size_t quote_pos) {
    const std::uint32_t first_line = line_;
    const char q = src_[quote_pos];
    const bool triple = src_.substr(quote_pos, 3) == std::string_view(std::string(3, q));
    std::size_t p = quote_pos + (triple ? 3 : 1);
    while (p < src_.size()) {
      const char ch = src_[p];
      if (ch == '\\' && p + 1 < src_.size()) {
        if (src_[p + 1] == '\n') ++line_;
        p += 2;
        continue;
      }
      if (ch == q) {
        if (!triple) {
          pos_ = p + 1;
          push(TokenKind::String, start, pos_, first_line, line_);
          return;
        }
        if (src_.substr(p, 3) == std::string_view(std::string(3, q))) {
          pos_ = p + 3;
          push(TokenKind::String, start, pos_, first_line, line_);
          return;
        }
      }
      if (ch == '\n' || ch == '\r') {
        if (!triple) break;
        if (ch == '\r' && p + 1 < src_.size() && src_[p + 1] == '\n') ++p;
        ++line_;
      }
      ++p;
    }
    pos_ = p;
    push(TokenKind::Error, start, pos_, first_line, line_);
  }

  void lex_number() {
    auto digit_run = [&](auto pred) {
      while (pos_ < src_.size() && (pred(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
    };
    const auto is_dec = [](unsigned char ch) { return std::isdigit(ch) != 0; };
    if (src_[pos_] == '0' && pos_ + 1 < src_.size()) {
      const char k = static_cast<char>(std::tolower(static_cast<unsigned char>(src_[pos_ + 1])));
      if (k == 'x' || k == 'o' || k == 'b') {
        pos_ += 2;
        digit_run([](unsigned char ch) { return std::isxdigit(ch) != 0; });
        return;
      }
    }
    digit_run(is_dec);
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      digit_run(is_dec);
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
        pos_ = p;
        digit_run(is_dec);
      }
    }
    if (pos_ < src_.size() && (src_[pos_] == 'j' || src_[pos_] == 'J')) ++pos_;
  }

  void finish() {
    const bool need_newline =
        !tokens_.empty() && std::any_of(tokens_.begin(), tokens_.end(), [](const Token& t) {
          return is_significant(t.kind);
        }) && last_layout_kind() != TokenKind::Newline;
    if (need_newline) push(TokenKind::Newline, pos_, pos_, line_, line_);
    while (indents_.size() > 1) {
      indents_.pop_back();
      push(TokenKind::Dedent, pos_, pos_, line_, line_);
    }
    push(TokenKind::EndMarker, pos_, pos_, line_, line_);
  }

  TokenKind last_layout_kind() const {
    for (auto it = tokens_.rbegin(); it != tokens_.rend(); ++it) {
      if (it->kind != TokenKind::Comment && it->kind != TokenKind::Nl) return it->kind;
    }
    return TokenKind::EndMarker;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::uint32_t line_ = 1;
  int depth_ = 0;
  std::vector<std::size_t> indents_;
  std::vector<Token> tokens_;
};

}  // namespace

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

bool is_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

}  // namespace codecause::python
