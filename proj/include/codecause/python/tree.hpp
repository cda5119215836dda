#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "codecause/python/lexer.hpp"

namespace codecause::python {

/// Concrete syntax tree node. Every node is named; punctuation and keywords are not
/// materialised. `type` always points at a string literal with static storage.
struct Node {
  std::string_view type;
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  std::vector<Node> children;

  bool is_error() const { return type == "ERROR"; }
  std::string_view text(std::string_view source) const {
    return source.substr(begin, end - begin);
  }
};

/// Owns the source so that token and node offsets stay meaningful.
struct ParseResult {
  std::string source;
  std::vector<Token> tokens;
  Node root;
  int n_errors = 0;
};

/// Error-tolerant parse of a Python module. Syntax errors become ERROR nodes; only
/// non-UTF-8 input is rejected (DataError).
ParseResult parse(std::string source);

/// Indented S-expression rendering, one node per line, used by fixture oracles.
std::string to_sexp(const Node& node, std::string_view source);

std::size_t count_nodes(const Node& node);
std::size_t tree_depth(const Node& node);
std::size_t count_errors(const Node& node);

/// Pre-order visit.
template <typename F>
void walk(const Node& node, F&& visit) {
  visit(node);
  for (const Node& child : node.children) walk(child, visit);
}

}  // namespace codecause::python
