// Loader for the hand-walked method fixture shared by the unit and acceptance suites.
#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "codecause/python/tree.hpp"

namespace curated {

struct Case {
  std::string name;
  std::string code;
  std::map<std::string, std::int64_t> expect;
  std::string tree;
};

inline std::vector<Case> load(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file);
  std::vector<Case> cases;
  std::string line;
  enum { none, code, expect, tree } mode = none;
  while (std::getline(in, line)) {
    if (line.starts_with("### case ")) {
      cases.push_back({line.substr(9), "", {}, ""});
      mode = code;
    } else if (line == "### expect") {
      mode = expect;
    } else if (line == "### tree") {
      mode = tree;
    } else if (mode == code) {
      cases.back().code += line + "\n";
    } else if (mode == expect) {
      std::istringstream fields(line);
      std::string kv;
      while (fields >> kv) {
        const auto eq = kv.find('=');
        cases.back().expect[kv.substr(0, eq)] = std::stoll(kv.substr(eq + 1));
      }
    } else if (mode == tree) {
      cases.back().tree += line + " ";
    }
  }
  return cases;
}

// "(a (b) (c))" with whitespace collapsed.
inline std::string compact(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!out.empty() && out.back() != ' ' && out.back() != '(') out += ' ';
    } else {
      if (c == ')' && !out.empty() && out.back() == ' ') out.pop_back();
      out += c;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

inline std::string types_only(const codecause::python::Node& n) {
  std::string out = "(" + std::string(n.type);
  for (const auto& c : n.children) out += " " + types_only(c);
  return out + ")";
}

struct TreeStats {
  std::int64_t nodes = 0, depth = 0, errors = 0;
};

// Counts read straight off a hand-written S-expression.
inline TreeStats stats_of(const std::string& sexp) {
  TreeStats s;
  std::int64_t level = 0;
  for (std::size_t i = 0; i < sexp.size(); ++i) {
    if (sexp[i] == '(') {
      ++s.nodes;
      s.depth = std::max(s.depth, ++level);
      if (sexp.compare(i, 6, "(ERROR") == 0) ++s.errors;
    } else if (sexp[i] == ')') {
      --level;
    }
  }
  return s;
}

}  // namespace curated
