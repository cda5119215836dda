#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "codecause/error.hpp"
#include "codecause/llm_eval.hpp"
#include "codecause/python/lexer.hpp"
#include "codecause/python/tree.hpp"

namespace codecause::llm_eval {

double keyword_weight(const std::string& token) { return python::is_keyword(token) ? 1.0 : 0.2; }

double weighted_ngram_match(std::string_view candidate, std::string_view reference) {
  return bleu_tokens(code_tokens(candidate), code_tokens(reference), 4, keyword_weight);
}

namespace {

using python::Node;

// Shape of every subtree, keyed by its node-type s-expression.
std::string collect_shapes(const Node& n, std::unordered_map<std::string, std::int64_t>& out) {
  std::string shape = "(";
  shape += n.type;
  for (const Node& c : n.children) {
    shape += ' ';
    shape += collect_shapes(c, out);
  }
  shape += ')';
  ++out[shape];
  return shape;
}

std::unordered_map<std::string, std::int64_t> subtree_shapes(std::string_view code) {
  const python::ParseResult parsed = python::parse(std::string(code));
  std::unordered_map<std::string, std::int64_t> out;
  collect_shapes(parsed.root, out);
  return out;
}

}  // namespace

double syntax_match(std::string_view candidate, std::string_view reference) {
  const auto ref = subtree_shapes(reference);
  const auto cand = subtree_shapes(candidate);
  std::int64_t total = 0;
  std::int64_t matched = 0;
  for (const auto& [shape, count] : ref) {
    total += count;
    const auto it = cand.find(shape);
    if (it != cand.end()) matched += std::min(count, it->second);
  }
  return total == 0 ? 1.0 : static_cast<double>(matched) / static_cast<double>(total);
}

namespace {

// Walks one parse tree in evaluation order, tracking which names have been assigned so far.
class Dataflow {
 public:
  explicit Dataflow(std::string_view source) : src_(source) {}

  void visit(const Node& n) {
    const std::string_view t = n.type;
    if (t == "identifier") {
      use(n);
    } else if (t == "assignment") {
      assignment(n);
    } else if (t == "augmented_assignment") {
      const Node& target = n.children.front();
      const Node& value = n.children.back();
      visit(value);
      std::vector<std::string> sources = names_in(value);
      for (const std::string& name : target_names(target)) {
        std::vector<std::string> s = sources;
        s.push_back(name);
        define(name, std::move(s));
      }
      visit_target_uses(target);
    } else if (t == "for_statement" || t == "for_in_clause") {
      visit(n.children[1]);
      bind(n.children[0], names_in(n.children[1]));
      for (std::size_t i = 2; i < n.children.size(); ++i) visit(n.children[i]);
    } else if (t == "list_comprehension" || t == "set_comprehension" || t == "generator_expression" ||
               t == "dictionary_comprehension") {
      for (std::size_t i = 1; i < n.children.size(); ++i) visit(n.children[i]);
      visit(n.children.front());
    } else if (t == "with_item") {
      visit(n.children.front());
      if (n.children.size() > 1) bind(n.children[1], names_in(n.children.front()));
    } else if (t == "except_clause") {
      for (const Node& c : n.children) {
        if (c.type == "identifier" && &c != &n.children.front()) {
          define(std::string(c.text(src_)), {});
        } else {
          visit(c);
        }
      }
    } else if (t == "named_expression") {
      visit(n.children.back());
      define(std::string(n.children.front().text(src_)), names_in(n.children.back()));
    } else if (t == "function_definition") {
      // Nested functions get their own pass; here only the name is bound.
      define(std::string(n.children.front().text(src_)), {});
    } else if (t == "class_definition") {
      define(std::string(n.children.front().text(src_)), {});
      for (std::size_t i = 1; i < n.children.size(); ++i) visit(n.children[i]);
    } else if (t == "parameters" || t == "lambda_parameters") {
      parameters(n);
    } else if (t == "attribute") {
      visit(n.children.front());
    } else if (t == "keyword_argument") {
      visit(n.children.back());
    } else if (t == "import_statement" || t == "import_from_statement") {
      imports(n);
    } else if (t == "global_statement" || t == "nonlocal_statement") {
      for (const Node& c : n.children) defined_.insert(std::string(c.text(src_)));
    } else {
      for (const Node& c : n.children) visit(c);
    }
  }

  std::vector<DataflowItem> items;

 private:
  void use(const Node& id) {
    const std::string name(id.text(src_));
    DataflowItem item{name, "comesFrom", {}};
    if (defined_.count(name)) item.sources.push_back(name);
    items.push_back(std::move(item));
  }

  void define(const std::string& name, std::vector<std::string> sources) {
    std::sort(sources.begin(), sources.end());
    sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
    items.push_back(DataflowItem{name, "computedFrom", std::move(sources)});
    defined_.insert(name);
  }

  void assignment(const Node& n) {
    if (n.children.size() < 2) {
      for (const Node& c : n.children) visit(c);
      return;
    }
    const Node& target = n.children.front();
    const Node& value = n.children.back();
    std::vector<std::string> sources;
    if (value.type == "assignment") {
      visit(value);
      sources = target_names(value.children.front());
    } else {
      visit(value);
      sources = names_in(value);
    }
    bind(target, sources);
  }

  void bind(const Node& target, const std::vector<std::string>& sources) {
    for (const std::string& name : target_names(target)) define(name, sources);
    visit_target_uses(target);
  }

  // Subscript and attribute targets read their object rather than defining a name.
  void visit_target_uses(const Node& target) {
    if (target.type == "subscript" || target.type == "attribute") {
      visit(target);
      return;
    }
    if (target.type == "identifier") return;
    for (const Node& c : target.children) visit_target_uses(c);
  }

  std::vector<std::string> target_names(const Node& target) const {
    std::vector<std::string> out;
    if (target.type == "identifier") {
      out.emplace_back(target.text(src_));
    } else if (target.type != "subscript" && target.type != "attribute") {
      for (const Node& c : target.children) {
        auto sub = target_names(c);
        out.insert(out.end(), sub.begin(), sub.end());
      }
    }
    return out;
  }

  std::vector<std::string> names_in(const Node& n) const {
    std::vector<std::string> out;
    python::walk(n, [&](const Node& c) {
      if (c.type == "identifier") out.emplace_back(c.text(src_));
    });
    return out;
  }

  void parameters(const Node& n) {
    for (const Node& p : n.children) {
      if (p.type == "identifier") {
        define(std::string(p.text(src_)), {});
      } else if (p.type == "default_parameter" || p.type == "typed_default_parameter") {
        visit(p.children.back());
        define(std::string(p.children.front().text(src_)), {});
      } else if (p.type == "typed_parameter" || p.type == "list_splat_pattern" ||
                 p.type == "dictionary_splat_pattern") {
        const Node* id = &p.children.front();
        while (id->type != "identifier" && !id->children.empty()) id = &id->children.front();
        if (id->type == "identifier") define(std::string(id->text(src_)), {});
      }
    }
  }

  void imports(const Node& n) {
    python::walk(n, [&](const Node& c) {
      if (c.type == "aliased_import") {
        defined_.insert(std::string(c.children.back().text(src_)));
      } else if (c.type == "dotted_name") {
        defined_.insert(std::string(c.children.front().text(src_)));
      }
    });
  }

  std::string_view src_;
  std::set<std::string> defined_;
};

std::map<DataflowItem, std::int64_t> item_counts(std::string_view code) {
  std::map<DataflowItem, std::int64_t> out;
  for (DataflowItem& item : dataflow_items(code)) ++out[std::move(item)];
  return out;
}

}  // namespace

std::vector<DataflowItem> dataflow_items(std::string_view code) {
  const python::ParseResult parsed = python::parse(std::string(code));
  std::vector<DataflowItem> out;
  python::walk(parsed.root, [&](const Node& n) {
    if (n.type != "function_definition") return;
    Dataflow flow(parsed.source);
    for (std::size_t i = 1; i < n.children.size(); ++i) flow.visit(n.children[i]);
    out.insert(out.end(), flow.items.begin(), flow.items.end());
  });
  if (out.empty()) {
    // Module-level code without any function: fall back to the whole module.
    Dataflow flow(parsed.source);
    flow.visit(parsed.root);
    out = std::move(flow.items);
  }
  return out;
}

double dataflow_match(std::string_view candidate, std::string_view reference) {
  const auto ref = item_counts(reference);
  const auto cand = item_counts(candidate);
  if (ref.empty()) return cand.empty() ? 1.0 : 0.0;
  std::int64_t total = 0;
  std::int64_t matched = 0;
  for (const auto& [item, count] : ref) {
    total += count;
    const auto it = cand.find(item);
    if (it != cand.end()) matched += std::min(count, it->second);
  }
  return static_cast<double>(matched) / static_cast<double>(total);
}

CodeBleuParts codebleu_parts(std::string_view candidate, std::string_view reference, const CodeBleuWeights& w) {
  const double sum = w.ngram + w.weighted_ngram + w.syntax + w.dataflow;
  if (w.ngram < 0 || w.weighted_ngram < 0 || w.syntax < 0 || w.dataflow < 0 || std::abs(sum - 1.0) > 1e-9) {
    throw UsageError("CodeBLEU weights must be non-negative and sum to 1");
  }
  CodeBleuParts p;
  p.ngram = bleu(candidate, reference);
  p.weighted_ngram = weighted_ngram_match(candidate, reference);
  p.syntax = syntax_match(candidate, reference);
  p.dataflow = dataflow_match(candidate, reference);
  p.score = w.ngram * p.ngram + w.weighted_ngram * p.weighted_ngram + w.syntax * p.syntax + w.dataflow * p.dataflow;
  return p;
}

double codebleu(std::string_view candidate, std::string_view reference, const CodeBleuWeights& w) {
  return codebleu_parts(candidate, reference, w).score;
}

}  // namespace codecause::llm_eval
