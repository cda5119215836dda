#include <algorithm>
#include <string>
#include <utility>

#include "codecause/error.hpp"
#include "codecause/python/tree.hpp"
#include "codecause/util.hpp"

namespace codecause::python {
namespace {

struct SyntaxFailure {};

constexpr int kMaxNesting = 200;

class Parser {
 public:
  Parser(std::string_view src, const std::vector<Token>& all) : src_(src) {
    for (const Token& t : all) {
      if (t.kind != TokenKind::Comment && t.kind != TokenKind::Nl) toks_.push_back(t);
    }
  }

  Node parse_module() {
    Node module{"module", 0, static_cast<std::uint32_t>(src_.size()), {}};
    while (!at(TokenKind::EndMarker)) {
      if (at(TokenKind::Dedent)) {
        ++pos_;
        continue;
      }
      statement_into(module.children);
    }
    return module;
  }

 private:
  // ---- token helpers -------------------------------------------------------

  const Token& cur() const { return toks_[pos_]; }
  const Token& peek(std::size_t k) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  std::string_view text(const Token& t) const { return t.text(src_); }
  bool at(TokenKind k) const { return cur().kind == k; }
  bool at_op(std::string_view op) const { return at(TokenKind::Op) && text(cur()) == op; }
  bool at_kw(std::string_view kw) const { return at(TokenKind::Name) && text(cur()) == kw; }
  bool at_name() const { return at(TokenKind::Name) && !is_keyword(text(cur())); }
  bool peek_op(std::size_t k, std::string_view op) const {
    return peek(k).kind == TokenKind::Op && text(peek(k)) == op;
  }

  [[noreturn]] void fail() const { throw SyntaxFailure{}; }

  void expect_op(std::string_view op) {
    if (!at_op(op)) fail();
    ++pos_;
  }
  void expect_kw(std::string_view kw) {
    if (!at_kw(kw)) fail();
    ++pos_;
  }
  bool accept_op(std::string_view op) {
    if (!at_op(op)) return false;
    ++pos_;
    return true;
  }
  bool accept_kw(std::string_view kw) {
    if (!at_kw(kw)) return false;
    ++pos_;
    return true;
  }

  std::uint32_t prev_end() const { return pos_ > 0 ? toks_[pos_ - 1].end : 0; }

  static Node make(std::string_view type, std::uint32_t begin, std::uint32_t end,
                   std::vector<Node> children = {}) {
    return Node{type, begin, end, std::move(children)};
  }

  Node wrap(std::string_view type, std::uint32_t begin, std::vector<Node> children) const {
    return make(type, begin, prev_end(), std::move(children));
  }

  Node identifier() {
    if (!at_name()) fail();
    const Token& t = cur();
    ++pos_;
    return make("identifier", t.begin, t.end);
  }

  struct NestGuard {
    explicit NestGuard(Parser& p) : parser(p) {
      if (++parser.nesting_ > kMaxNesting) {
        --parser.nesting_;
        parser.fail();
      }
    }
    ~NestGuard() { --parser.nesting_; }
    Parser& parser;
  };

  // ---- statements ----------------------------------------------------------

  void statement_into(std::vector<Node>& out) {
    if (at(TokenKind::Newline)) {
      ++pos_;
      return;
    }
    if (at(TokenKind::Indent)) {
      // Over-indented line: keep the statements, flag the indentation.
      const std::uint32_t begin = cur().begin;
      ++pos_;
      std::vector<Node> body;
      statements_until_dedent(body);
      out.push_back(make("ERROR", begin, std::max(begin, prev_end()), std::move(body)));
      return;
    }
    const std::size_t start = pos_;
    try {
      if (!compound_statement(out)) simple_statements(out);
    } catch (const SyntaxFailure&) {
      recover(start, out);
    }
  }

  void recover(std::size_t start, std::vector<Node>& out) {
    pos_ = start;
    const std::uint32_t begin = cur().begin;
    while (!at(TokenKind::Newline) && !at(TokenKind::EndMarker)) ++pos_;
    std::uint32_t end = pos_ > start ? toks_[pos_ - 1].end : begin;
    if (at(TokenKind::Newline)) ++pos_;
    std::vector<Node> children;
    if (at(TokenKind::Indent)) {
      // The header of a compound statement was malformed; keep its body.
      ++pos_;
      const std::uint32_t block_begin = cur().begin;
      std::vector<Node> body;
      statements_until_dedent(body);
      if (!body.empty()) {
        end = std::max(end, prev_end());
        children.push_back(close("block", block_begin, std::move(body)));
      }
    }
    out.push_back(make("ERROR", begin, end, std::move(children)));
  }

  void statements_until_dedent(std::vector<Node>& body) {
    while (!at(TokenKind::Dedent) && !at(TokenKind::EndMarker)) statement_into(body);
    if (at(TokenKind::Dedent)) ++pos_;
  }

  void simple_statements(std::vector<Node>& out) {
    out.push_back(simple_statement());
    while (accept_op(";")) {
      if (at(TokenKind::Newline) || at(TokenKind::EndMarker)) break;
      out.push_back(simple_statement());
    }
    if (at(TokenKind::Newline)) {
      ++pos_;
    } else if (!at(TokenKind::EndMarker)) {
      fail();
    }
  }

  Node simple_statement() {
    const std::uint32_t begin = cur().begin;
    if (accept_kw("pass")) return wrap("pass_statement", begin, {});
    if (accept_kw("break")) return wrap("break_statement", begin, {});
    if (accept_kw("continue")) return wrap("continue_statement", begin, {});
    if (accept_kw("return")) {
      std::vector<Node> kids;
      if (!at_statement_end()) kids.push_back(star_expressions());
      return wrap("return_statement", begin, std::move(kids));
    }
    if (accept_kw("raise")) {
      std::vector<Node> kids;
      if (!at_statement_end()) {
        kids.push_back(expression());
        if (accept_kw("from")) kids.push_back(expression());
      }
      return wrap("raise_statement", begin, std::move(kids));
    }
    if (accept_kw("assert")) {
      std::vector<Node> kids;
      kids.push_back(expression());
      if (accept_op(",")) kids.push_back(expression());
      return wrap("assert_statement", begin, std::move(kids));
    }
    if (accept_kw("del")) {
      std::vector<Node> kids;
      kids.push_back(target_list());
      return wrap("delete_statement", begin, std::move(kids));
    }
    if (at_kw("global") || at_kw("nonlocal")) {
      const bool global = at_kw("global");
      ++pos_;
      std::vector<Node> kids;
      kids.push_back(identifier());
      while (accept_op(",")) kids.push_back(identifier());
      return wrap(global ? "global_statement" : "nonlocal_statement", begin, std::move(kids));
    }
    if (at_kw("import")) return import_statement();
    if (at_kw("from")) return import_from_statement();
    return expression_statement();
  }

  bool at_statement_end() const {
    return at(TokenKind::Newline) || at(TokenKind::EndMarker) || at_op(";");
  }

  Node expression_statement() {
    const std::uint32_t begin = cur().begin;
    Node first = at_kw("yield") ? yield_expression() : star_expressions();
    if (at_op("=")) {
      return wrap("expression_statement", begin, {assignment_tail(std::move(first), begin)});
    }
    if (at_op(":")) {
      ++pos_;
      std::vector<Node> kids;
      kids.push_back(std::move(first));
      const std::uint32_t type_begin = cur().begin;
      kids.push_back(wrap("type", type_begin, {expression()}));
      if (accept_op("=")) kids.push_back(assignment_value());
      return wrap("expression_statement", begin, {wrap("assignment", begin, std::move(kids))});
    }
    static constexpr std::string_view kAugmented[] = {"+=", "-=", "*=", "/=", "//=", "%=", "**=",
                                                      ">>=", "<<=", "&=", "|=", "^=", "@="};
    for (std::string_view op : kAugmented) {
      if (at_op(op)) {
        ++pos_;
        std::vector<Node> kids;
        kids.push_back(std::move(first));
        kids.push_back(assignment_value());
        return wrap("expression_statement", begin,
                    {wrap("augmented_assignment", begin, std::move(kids))});
      }
    }
    return wrap("expression_statement", begin, {std::move(first)});
  }

  // `left = right [= right ...]`, right-nested.
  Node assignment_tail(Node left, std::uint32_t begin) {
    expect_op("=");
    Node right = assignment_value();
    if (at_op("=")) {
      const std::uint32_t rbegin = right.begin;
      right = assignment_tail(std::move(right), rbegin);
    }
    std::vector<Node> kids;
    kids.push_back(std::move(left));
    kids.push_back(std::move(right));
    return wrap("assignment", begin, std::move(kids));
  }

  Node assignment_value() { return at_kw("yield") ? yield_expression() : star_expressions(); }

  Node yield_expression() {
    const std::uint32_t begin = cur().begin;
    expect_kw("yield");
    std::vector<Node> kids;
    if (accept_kw("from")) {
      kids.push_back(expression());
    } else if (!at_statement_end() && !at_op(")") && !at_op("=")) {
      kids.push_back(star_expressions());
    }
    return wrap("yield", begin, std::move(kids));
  }

  Node dotted_name() {
    const std::uint32_t begin = cur().begin;
    std::vector<Node> kids;
    kids.push_back(identifier());
    while (at_op(".")) {
      ++pos_;
      kids.push_back(identifier());
    }
    return wrap("dotted_name", begin, std::move(kids));
  }

  Node maybe_aliased(Node name) {
    if (!accept_kw("as")) return name;
    const std::uint32_t begin = name.begin;
    std::vector<Node> kids;
    kids.push_back(std::move(name));
    kids.push_back(identifier());
    return wrap("aliased_import", begin, std::move(kids));
  }

  Node import_statement() {
    const std::uint32_t begin = cur().begin;
    expect_kw("import");
    std::vector<Node> kids;
    kids.push_back(maybe_aliased(dotted_name()));
    while (accept_op(",")) kids.push_back(maybe_aliased(dotted_name()));
    return wrap("import_statement", begin, std::move(kids));
  }

  Node import_from_statement() {
    const std::uint32_t begin = cur().begin;
    expect_kw("from");
    std::vector<Node> kids;
    if (at_op(".") || at_op("...")) {
      const std::uint32_t rbegin = cur().begin;
      while (at_op(".") || at_op("...")) ++pos_;
      std::vector<Node> rel;
      rel.push_back(wrap("import_prefix", rbegin, {}));
      if (at_name()) rel.push_back(dotted_name());
      kids.push_back(wrap("relative_import", rbegin, std::move(rel)));
    } else {
      kids.push_back(dotted_name());
    }
    expect_kw("import");
    if (at_op("*")) {
      const std::uint32_t wbegin = cur().begin;
      ++pos_;
      kids.push_back(wrap("wildcard_import", wbegin, {}));
    } else {
      const bool paren = accept_op("(");
      kids.push_back(maybe_aliased(dotted_name()));
      while (accept_op(",")) {
        if (paren && at_op(")")) break;
        kids.push_back(maybe_aliased(dotted_name()));
      }
      if (paren) expect_op(")");
    }
    return wrap("import_from_statement", begin, std::move(kids));
  }

  bool compound_statement(std::vector<Node>& out) {
    if (at_kw("if")) {
      out.push_back(if_statement());
    } else if (at_kw("while")) {
      out.push_back(while_statement());
    } else if (at_kw("for")) {
      out.push_back(for_statement(cur().begin));
    } else if (at_kw("try")) {
      out.push_back(try_statement());
    } else if (at_kw("with")) {
      out.push_back(with_statement(cur().begin));
    } else if (at_kw("def")) {
      out.push_back(function_definition(cur().begin));
    } else if (at_kw("class")) {
      out.push_back(class_definition());
    } else if (at_op("@")) {
      out.push_back(decorated_definition());
    } else if (at_kw("async") && peek(1).kind == TokenKind::Name) {
      const std::uint32_t begin = cur().begin;
      const std::string_view next = text(peek(1));
      if (next == "def") {
        ++pos_;
        out.push_back(function_definition(begin));
      } else if (next == "for") {
        ++pos_;
        out.push_back(for_statement(begin));
      } else if (next == "with") {
        ++pos_;
        out.push_back(with_statement(begin));
      } else {
        return false;
      }
    } else {
      return false;
    }
    return true;
  }

  Node block() {
    expect_op(":");
    const std::uint32_t begin = cur().begin;
    std::vector<Node> body;
    if (at(TokenKind::Newline)) {
      ++pos_;
      if (!at(TokenKind::Indent)) fail();
      ++pos_;
      const std::uint32_t body_begin = cur().begin;
      statements_until_dedent(body);
      const std::uint32_t end = body.empty() ? body_begin : body.back().end;
      return make("block", body_begin, end, std::move(body));
    }
    simple_statements(body);
    return close("block", begin, std::move(body));
  }

  static Node close(std::string_view type, std::uint32_t begin, std::vector<Node> kids) {
    const std::uint32_t end = kids.back().end;
    return Node{type, begin, end, std::move(kids)};
  }

  Node else_clause() {
    const std::uint32_t begin = cur().begin;
    expect_kw("else");
    std::vector<Node> kids;
    kids.push_back(block());
    return close("else_clause", begin, std::move(kids));
  }

  Node if_statement() {
    const std::uint32_t begin = cur().begin;
    expect_kw("if");
    std::vector<Node> kids;
    kids.push_back(named_expression());
    kids.push_back(block());
    while (at_kw("elif")) {
      const std::uint32_t eb = cur().begin;
      ++pos_;
      std::vector<Node> ek;
      ek.push_back(named_expression());
      ek.push_back(block());
      kids.push_back(close("elif_clause", eb, std::move(ek)));
    }
    if (at_kw("else")) kids.push_back(else_clause());
    return close("if_statement", begin, std::move(kids));
  }

  Node while_statement() {
    const std::uint32_t begin = cur().begin;
    expect_kw("while");
    std::vector<Node> kids;
    kids.push_back(named_expression());
    kids.push_back(block());
    if (at_kw("else")) kids.push_back(else_clause());
    return close("while_statement", begin, std::move(kids));
  }

  Node for_statement(std::uint32_t begin) {
    expect_kw("for");
    std::vector<Node> kids;
    kids.push_back(target_list());
    expect_kw("in");
    kids.push_back(star_expressions());
    kids.push_back(block());
    if (at_kw("else")) kids.push_back(else_clause());
    return close("for_statement", begin, std::move(kids));
  }

  Node try_statement() {
    const std::uint32_t begin = cur().begin;
    expect_kw("try");
    std::vector<Node> kids;
    kids.push_back(block());
    bool handlers = false;
    while (at_kw("except")) {
      handlers = true;
      const std::uint32_t eb = cur().begin;
      ++pos_;
      accept_op("*");
      std::vector<Node> ek;
      if (!at_op(":")) {
        ek.push_back(expression());
        if (accept_kw("as")) {
          ek.push_back(identifier());
        } else if (accept_op(",")) {
          ek.push_back(expression());
        }
      }
      ek.push_back(block());
      kids.push_back(close("except_clause", eb, std::move(ek)));
    }
    if (handlers && at_kw("else")) kids.push_back(else_clause());
    if (at_kw("finally")) {
      handlers = true;
      const std::uint32_t fb = cur().begin;
      ++pos_;
      std::vector<Node> fk;
      fk.push_back(block());
      kids.push_back(close("finally_clause", fb, std::move(fk)));
    }
    if (!handlers) fail();
    return close("try_statement", begin, std::move(kids));
  }

  Node with_item() {
    const std::uint32_t begin = cur().begin;
    std::vector<Node> kids;
    kids.push_back(expression());
    if (accept_kw("as")) kids.push_back(target());
    return wrap("with_item", begin, std::move(kids));
  }

  Node with_statement(std::uint32_t begin) {
    expect_kw("with");
    const std::uint32_t cb = cur().begin;
    std::vector<Node> items;
    // Parenthesised item lists; a lone parenthesised expression also parses this way.
    if (at_op("(") && paren_holds_with_items()) {
      ++pos_;
      items.push_back(with_item());
      while (accept_op(",")) {
        if (at_op(")")) break;
        items.push_back(with_item());
      }
      expect_op(")");
    } else {
      items.push_back(with_item());
      while (accept_op(",")) items.push_back(with_item());
    }
    std::vector<Node> kids;
    kids.push_back(wrap("with_clause", cb, std::move(items)));
    kids.push_back(block());
    return close("with_statement", begin, std::move(kids));
  }

  // True when the parenthesis opened at pos_ closes right before the header colon.
  bool paren_holds_with_items() const {
    int depth = 0;
    for (std::size_t i = pos_; i < toks_.size(); ++i) {
      const Token& t = toks_[i];
      if (t.kind == TokenKind::Newline || t.kind == TokenKind::EndMarker) return false;
      if (t.kind != TokenKind::Op) continue;
      const std::string_view s = text(t);
      if (s == "(" || s == "[" || s == "{") ++depth;
      if (s == ")" || s == "]" || s == "}") {
        if (--depth == 0) {
          return i + 1 < toks_.size() && toks_[i + 1].kind == TokenKind::Op &&
                 text(toks_[i + 1]) == ":";
        }
      }
    }
    return false;
  }

  Node function_definition(std::uint32_t begin) {
    expect_kw("def");
    std::vector<Node> kids;
    kids.push_back(identifier());
    kids.push_back(parameters());
    if (accept_op("->")) {
      const std::uint32_t tb = cur().begin;
      kids.push_back(wrap("type", tb, {expression()}));
    }
    kids.push_back(block());
    return close("function_definition", begin, std::move(kids));
  }

  Node parameters() {
    const std::uint32_t begin = cur().begin;
    expect_op("(");
    std::vector<Node> kids;
    while (!at_op(")")) {
      kids.push_back(parameter(/*allow_annotation=*/true));
      if (!accept_op(",")) break;
    }
    expect_op(")");
    return wrap("parameters", begin, std::move(kids));
  }

  Node parameter(bool allow_annotation) {
    const std::uint32_t begin = cur().begin;
    auto annotated = [&](Node inner) {
      if (allow_annotation && accept_op(":")) {
        const std::uint32_t tb = cur().begin;
        Node type = wrap("type", tb, {expression()});
        std::vector<Node> kids;
        kids.push_back(std::move(inner));
        kids.push_back(std::move(type));
        return kids;
      }
      std::vector<Node> kids;
      kids.push_back(std::move(inner));
      return kids;
    };
    if (accept_op("/")) return wrap("positional_separator", begin, {});
    if (at_op("*") || at_op("**")) {
      const bool dict = at_op("**");
      ++pos_;
      if (!dict && (at_op(",") || at_op(")") || at_op(":"))) {
        return wrap("keyword_separator", begin, {});
      }
      Node splat = wrap(dict ? "dictionary_splat_pattern" : "list_splat_pattern", begin, {identifier()});
      auto kids = annotated(std::move(splat));
      if (kids.size() == 1) return std::move(kids.front());
      return wrap("typed_parameter", begin, std::move(kids));
    }
    auto kids = annotated(identifier());
    const bool typed = kids.size() == 2;
    if (accept_op("=")) {
      kids.push_back(expression());
      return wrap(typed ? "typed_default_parameter" : "default_parameter", begin, std::move(kids));
    }
    if (typed) return wrap("typed_parameter", begin, std::move(kids));
    return std::move(kids.front());
  }

  Node class_definition() {
    const std::uint32_t begin = cur().begin;
    expect_kw("class");
    std::vector<Node> kids;
    kids.push_back(identifier());
    if (at_op("(")) kids.push_back(argument_list());
    kids.push_back(block());
    return close("class_definition", begin, std::move(kids));
  }

  Node decorated_definition() {
    const std::uint32_t begin = cur().begin;
    std::vector<Node> kids;
    while (at_op("@")) {
      const std::uint32_t db = cur().begin;
      ++pos_;
      kids.push_back(wrap("decorator", db, {named_expression()}));
      if (!at(TokenKind::Newline)) fail();
      ++pos_;
    }
    if (at_kw("def")) {
      kids.push_back(function_definition(cur().begin));
    } else if (at_kw("class")) {
      kids.push_back(class_definition());
    } else if (at_kw("async") && peek(1).kind == TokenKind::Name && text(peek(1)) == "def") {
      const std::uint32_t fb = cur().begin;
      ++pos_;
      kids.push_back(function_definition(fb));
    } else {
      fail();
    }
    return close("decorated_definition", begin, std::move(kids));
  }

  // ---- expressions ---------------------------------------------------------

  // Comma-separated targets for `for`, `del` and `with ... as`.
  Node target_list() {
    const std::uint32_t begin = cur().begin;
    std::vector<Node> items;
    items.push_back(target());
    bool comma = false;
    while (at_op(",")) {
      ++pos_;
      comma = true;
      if (at_kw("in") || at_op("=") || at_statement_end() || at_op(")")) break;
      items.push_back(target());
    }
    if (!comma) return std::move(items.front());
    return wrap("expression_list", begin, std::move(items));
  }

  Node target() {
    const std::uint32_t begin = cur().begin;
    if (accept_op("*")) return wrap("list_splat", begin, {bitwise_or()});
    return bitwise_or();
  }

  Node star_expressions() {
    const std::uint32_t begin = cur().begin;
    std::vector<Node> items;
    items.push_back(star_expression());
    bool comma = false;
    while (at_op(",")) {
      ++pos_;
      comma = true;
      if (!starts_expression()) break;
      items.push_back(star_expression());
    }
    if (!comma) return std::move(items.front());
    return wrap("expression_list", begin, std::move(items));
  }

  bool starts_expression() const {
    const Token& t = cur();
    switch (t.kind) {
      case TokenKind::Name: {
        const std::string_view s = text(t);
        if (!is_keyword(s)) return true;
        return s == "None" || s == "True" || s == "False" || s == "not" || s == "lambda" ||
               s == "await" || s == "yield";
      }
      case TokenKind::Number:
      case TokenKind::String:
        return true;
      case TokenKind::Op: {
        const std::string_view s = text(t);
        return s == "(" || s == "[" || s == "{" || s == "-" || s == "+" || s == "~" ||
               s == "*" || s == "..." || s == "**";
      }
      default:
        return false;
    }
  }

  Node star_expression() {
    const std::uint32_t begin = cur().begin;
    if (accept_op("*")) return wrap("list_splat", begin, {bitwise_or()});
    return named_expression();
  }

  Node named_expression() {
    if (at_name() && peek_op(1, ":=")) {
      const std::uint32_t begin = cur().begin;
      std::vector<Node> kids;
      kids.push_back(identifier());
      ++pos_;
      kids.push_back(expression());
      return wrap("named_expression", begin, std::move(kids));
    }
    return expression();
  }

  Node expression() {
    NestGuard guard(*this);
    if (at_kw("lambda")) return lambda();
    const std::uint32_t begin = cur().begin;
    Node body = disjunction();
    if (at_kw("if")) {
      ++pos_;
      std::vector<Node> kids;
      kids.push_back(std::move(body));
      kids.push_back(disjunction());
      expect_kw("else");
      kids.push_back(expression());
      return wrap("conditional_expression", begin, std::move(kids));
    }
    return body;
  }

  Node expression_no_conditional() {
    if (at_kw("lambda")) return lambda();
    return disjunction();
  }

  Node lambda() {
    const std::uint32_t begin = cur().begin;
    expect_kw("lambda");
    std::vector<Node> kids;
    if (!at_op(":")) {
      const std::uint32_t pb = cur().begin;
      std::vector<Node> params;
      while (!at_op(":")) {
        params.push_back(parameter(/*allow_annotation=*/false));
        if (!accept_op(",")) break;
      }
      kids.push_back(wrap("lambda_parameters", pb, std::move(params)));
    }
    expect_op(":");
    kids.push_back(expression());
    return wrap("lambda", begin, std::move(kids));
  }

  Node disjunction() {
    const std::uint32_t begin = cur().begin;
    Node left = conjunction();
    while (accept_kw("or")) {
      std::vector<Node> kids;
      kids.push_back(std::move(left));
      kids.push_back(conjunction());
      left = wrap("boolean_operator", begin, std::move(kids));
    }
    return left;
  }

  Node conjunction() {
    const std::uint32_t begin = cur().begin;
    Node left = inversion();
    while (accept_kw("and")) {
      std::vector<Node> kids;
      kids.push_back(std::move(left));
      kids.push_back(inversion());
      left = wrap("boolean_operator", begin, std::move(kids));
    }
    return left;
  }

  Node inversion() {
    NestGuard guard(*this);
    const std::uint32_t begin = cur().begin;
    if (accept_kw("not")) return wrap("not_operator", begin, {inversion()});
    return comparison();
  }

  bool at_comparison_operator() const {
    if (at(TokenKind::Op)) {
      const std::string_view s = text(cur());
      return s == "<" || s == ">" || s == "==" || s == ">=" || s == "<=" || s == "!=";
    }
    if (at_kw("in") || at_kw("is")) return true;
    return at_kw("not") && peek(1).kind == TokenKind::Name && text(peek(1)) == "in";
  }

  Node comparison() {
    const std::uint32_t begin = cur().begin;
    Node first = bitwise_or();
    if (!at_comparison_operator()) return first;
    std::vector<Node> kids;
    kids.push_back(std::move(first));
    while (at_comparison_operator()) {
      if (accept_kw("not")) {
        expect_kw("in");
      } else if (accept_kw("is")) {
        accept_kw("not");
      } else {
        ++pos_;
      }
      kids.push_back(bitwise_or());
    }
    return wrap("comparison_operator", begin, std::move(kids));
  }

  template <typename Next>
  Node binary_level(std::initializer_list<std::string_view> ops, Next next) {
    const std::uint32_t begin = cur().begin;
    Node left = (this->*next)();
    for (;;) {
      bool matched = false;
      for (std::string_view op : ops) {
        if (at_op(op)) {
          matched = true;
          break;
        }
      }
      if (!matched) return left;
      ++pos_;
      std::vector<Node> kids;
      kids.push_back(std::move(left));
      kids.push_back((this->*next)());
      left = wrap("binary_operator", begin, std::move(kids));
    }
  }

  Node bitwise_or() { return binary_level({"|"}, &Parser::bitwise_xor); }
  Node bitwise_xor() { return binary_level({"^"}, &Parser::bitwise_and); }
  Node bitwise_and() { return binary_level({"&"}, &Parser::shift_expr); }
  Node shift_expr() { return binary_level({"<<", ">>"}, &Parser::sum); }
  Node sum() { return binary_level({"+", "-"}, &Parser::term); }
  Node term() { return binary_level({"*", "/", "//", "%", "@"}, &Parser::factor); }

  Node factor() {
    NestGuard guard(*this);
    const std::uint32_t begin = cur().begin;
    if (at_op("-") || at_op("+") || at_op("~")) {
      ++pos_;
      return wrap("unary_operator", begin, {factor()});
    }
    return power();
  }

  Node power() {
    const std::uint32_t begin = cur().begin;
    Node base = await_primary();
    if (accept_op("**")) {
      std::vector<Node> kids;
      kids.push_back(std::move(base));
      kids.push_back(factor());
      return wrap("binary_operator", begin, std::move(kids));
    }
    return base;
  }

  Node await_primary() {
    const std::uint32_t begin = cur().begin;
    if (accept_kw("await")) return wrap("await", begin, {primary()});
    return primary();
  }

  Node primary() {
    const std::uint32_t begin = cur().begin;
    Node node = atom();
    for (;;) {
      if (at_op(".")) {
        ++pos_;
        std::vector<Node> kids;
        kids.push_back(std::move(node));
        kids.push_back(identifier());
        node = wrap("attribute", begin, std::move(kids));
      } else if (at_op("(")) {
        std::vector<Node> kids;
        kids.push_back(std::move(node));
        kids.push_back(call_arguments());
        node = wrap("call", begin, std::move(kids));
      } else if (at_op("[")) {
        ++pos_;
        std::vector<Node> kids;
        kids.push_back(std::move(node));
        kids.push_back(subscript_item());
        while (accept_op(",")) {
          if (at_op("]")) break;
          kids.push_back(subscript_item());
        }
        expect_op("]");
        node = wrap("subscript", begin, std::move(kids));
      } else {
        return node;
      }
    }
  }

  Node subscript_item() {
    const std::uint32_t begin = cur().begin;
    std::vector<Node> parts;
    if (!at_op(":")) {
      Node first = star_expression();
      if (!at_op(":")) return first;
      parts.push_back(std::move(first));
    }
    expect_op(":");
    if (!at_op(":") && !at_op("]") && !at_op(",")) parts.push_back(expression());
    if (accept_op(":")) {
      if (!at_op("]") && !at_op(",")) parts.push_back(expression());
    }
    return wrap("slice", begin, std::move(parts));
  }

  // Argument list or a bare generator expression: f(x for x in y).
  Node call_arguments() {
    const std::uint32_t begin = cur().begin;
    expect_op("(");
    std::vector<Node> args;
    while (!at_op(")")) {
      args.push_back(argument());
      if (args.size() == 1 && at_kw("for")) {
        std::vector<Node> kids;
        kids.push_back(std::move(args.front()));
        comprehension_clauses(kids);
        expect_op(")");
        return wrap("generator_expression", begin, std::move(kids));
      }
      if (!accept_op(",")) break;
    }
    expect_op(")");
    return wrap("argument_list", begin, std::move(args));
  }

  Node argument_list() {
    const std::uint32_t begin = cur().begin;
    expect_op("(");
    std::vector<Node> args;
    while (!at_op(")")) {
      args.push_back(argument());
      if (!accept_op(",")) break;
    }
    expect_op(")");
    return wrap("argument_list", begin, std::move(args));
  }

  Node argument() {
    const std::uint32_t begin = cur().begin;
    if (accept_op("*")) return wrap("list_splat", begin, {expression()});
    if (accept_op("**")) return wrap("dictionary_splat", begin, {expression()});
    if (at_name() && peek_op(1, "=")) {
      std::vector<Node> kids;
      kids.push_back(identifier());
      ++pos_;
      kids.push_back(expression());
      return wrap("keyword_argument", begin, std::move(kids));
    }
    return named_expression();
  }

  void comprehension_clauses(std::vector<Node>& kids) {
    while (at_kw("for") || (at_kw("async") && peek(1).kind == TokenKind::Name && text(peek(1)) == "for")) {
      const std::uint32_t fb = cur().begin;
      accept_kw("async");
      expect_kw("for");
      std::vector<Node> fk;
      fk.push_back(target_list());
      expect_kw("in");
      fk.push_back(disjunction());
      kids.push_back(wrap("for_in_clause", fb, std::move(fk)));
      while (at_kw("if")) {
        const std::uint32_t ib = cur().begin;
        ++pos_;
        kids.push_back(wrap("if_clause", ib, {disjunction()}));
      }
    }
  }

  Node atom() {
    NestGuard guard(*this);
    const Token& t = cur();
    const std::string_view s = text(t);
    switch (t.kind) {
      case TokenKind::Name:
        if (s == "True" || s == "False" || s == "None") {
          ++pos_;
          return make(s == "True" ? "true" : (s == "False" ? "false" : "none"), t.begin, t.end);
        }
        if (s == "yield") fail();
        return identifier();
      case TokenKind::Number: {
        ++pos_;
        const bool hex = s.size() > 1 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X');
        const bool is_float = s.find('.') != std::string_view::npos ||
                              (!hex && s.find_first_of("eE") != std::string_view::npos) ||
                              s.find_first_of("jJ") != std::string_view::npos;
        return make(is_float ? "float" : "integer", t.begin, t.end);
      }
      case TokenKind::String: {
        std::vector<Node> parts;
        while (at(TokenKind::String)) {
          parts.push_back(make("string", cur().begin, cur().end));
          ++pos_;
        }
        if (parts.size() == 1) return std::move(parts.front());
        const std::uint32_t begin = parts.front().begin;
        return wrap("concatenated_string", begin, std::move(parts));
      }
      case TokenKind::Op:
        if (s == "(") return parenthesized();
        if (s == "[") return list_display();
        if (s == "{") return brace_display();
        if (s == "...") {
          ++pos_;
          return make("ellipsis", t.begin, t.end);
        }
        fail();
      default:
        fail();
    }
  }

  Node parenthesized() {
    const std::uint32_t begin = cur().begin;
    expect_op("(");
    if (accept_op(")")) return wrap("tuple", begin, {});
    if (at_kw("yield")) {
      Node y = yield_expression();
      expect_op(")");
      return wrap("parenthesized_expression", begin, {std::move(y)});
    }
    std::vector<Node> items;
    items.push_back(star_expression());
    if (at_kw("for") || at_kw("async")) {
      comprehension_clauses(items);
      expect_op(")");
      return wrap("generator_expression", begin, std::move(items));
    }
    bool comma = false;
    while (accept_op(",")) {
      comma = true;
      if (at_op(")")) break;
      items.push_back(star_expression());
    }
    expect_op(")");
    if (comma) return wrap("tuple", begin, std::move(items));
    return wrap("parenthesized_expression", begin, std::move(items));
  }

  Node list_display() {
    const std::uint32_t begin = cur().begin;
    expect_op("[");
    std::vector<Node> items;
    if (accept_op("]")) return wrap("list", begin, {});
    items.push_back(star_expression());
    if (at_kw("for") || at_kw("async")) {
      comprehension_clauses(items);
      expect_op("]");
      return wrap("list_comprehension", begin, std::move(items));
    }
    while (accept_op(",")) {
      if (at_op("]")) break;
      items.push_back(star_expression());
    }
    expect_op("]");
    return wrap("list", begin, std::move(items));
  }

  Node dict_item() {
    const std::uint32_t begin = cur().begin;
    if (accept_op("**")) return wrap("dictionary_splat", begin, {bitwise_or()});
    std::vector<Node> kids;
    kids.push_back(expression());
    expect_op(":");
    kids.push_back(expression());
    return wrap("pair", begin, std::move(kids));
  }

  Node brace_display() {
    const std::uint32_t begin = cur().begin;
    expect_op("{");
    if (accept_op("}")) return wrap("dictionary", begin, {});
    // Decide dict vs set from the first item.
    const bool is_dict = at_op("**") || [&] {
      const std::size_t save = pos_;
      try {
        expression();
      } catch (const SyntaxFailure&) {
        pos_ = save;
        return false;
      }
      const bool colon = at_op(":");
      pos_ = save;
      return colon;
    }();
    std::vector<Node> items;
    if (is_dict) {
      items.push_back(dict_item());
      if (at_kw("for") || at_kw("async")) {
        comprehension_clauses(items);
        expect_op("}");
        return wrap("dictionary_comprehension", begin, std::move(items));
      }
      while (accept_op(",")) {
        if (at_op("}")) break;
        items.push_back(dict_item());
      }
      expect_op("}");
      return wrap("dictionary", begin, std::move(items));
    }
    items.push_back(star_expression());
    if (at_kw("for") || at_kw("async")) {
      comprehension_clauses(items);
      expect_op("}");
      return wrap("set_comprehension", begin, std::move(items));
    }
    while (accept_op(",")) {
      if (at_op("}")) break;
      items.push_back(star_expression());
    }
    expect_op("}");
    return wrap("set", begin, std::move(items));
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int nesting_ = 0;
};

void sexp_into(const Node& node, std::string_view source, int indent, std::string& out) {
  out.append(static_cast<std::size_t>(indent) * 2, ' ');
  out += '(';
  out += node.type;
  if (node.children.empty() && (node.type == "identifier" || node.type == "integer" ||
                                node.type == "float")) {
    out += ' ';
    out += node.text(source);
  }
  if (node.children.empty()) {
    out += ")\n";
    return;
  }
  out += '\n';
  for (const Node& child : node.children) sexp_into(child, source, indent + 1, out);
  out.append(static_cast<std::size_t>(indent) * 2, ' ');
  out += ")\n";
}

}  // namespace

ParseResult parse(std::string source) {
  if (!is_valid_utf8(source)) throw DataError("source is not valid UTF-8");
  ParseResult result;
  result.source = std::move(source);
  result.tokens = tokenize(result.source);
  result.root = Parser(result.source, result.tokens).parse_module();
  result.n_errors = static_cast<int>(count_errors(result.root));
  return result;
}

std::string to_sexp(const Node& node, std::string_view source) {
  std::string out;
  sexp_into(node, source, 0, out);
  return out;
}

std::size_t count_nodes(const Node& node) {
  std::size_t n = 1;
  for (const Node& c : node.children) n += count_nodes(c);
  return n;
}

std::size_t tree_depth(const Node& node) {
  std::size_t deepest = 0;
  for (const Node& c : node.children) deepest = std::max(deepest, tree_depth(c));
  return deepest + 1;
}

std::size_t count_errors(const Node& node) {
  std::size_t n = node.is_error() ? 1 : 0;
  for (const Node& c : node.children) n += count_errors(c);
  return n;
}

}  // namespace codecause::python
