#include <algorithm>
#include <limits>

#include "codecause/ingest.hpp"
#include "codecause/python/tree.hpp"

namespace codecause::ingest {
namespace {

using python::Node;

std::string unquote(std::string_view literal) {
  std::size_t i = 0;
  while (i < literal.size() && literal[i] != '\'' && literal[i] != '"') ++i;
  literal.remove_prefix(i);
  if (literal.empty()) return {};
  const char q = literal.front();
  const std::string triple(3, q);
  std::size_t width = literal.substr(0, 3) == triple ? 3 : 1;
  if (literal.size() < 2 * width) return std::string(literal.substr(width));
  return std::string(literal.substr(width, literal.size() - 2 * width));
}

// Mirrors inspect.cleandoc: strip the first line, dedent the rest, drop blank edges.
std::string clean_doc(const std::string& text) {
  std::vector<std::string> lines = split_lines(text);
  if (lines.empty()) return {};
  std::size_t indent = std::numeric_limits<std::size_t>::max();
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto first = lines[i].find_first_not_of(" \t");
    if (first != std::string::npos) indent = std::min(indent, first);
  }
  std::vector<std::string> out;
  out.emplace_back(trim(lines[0]));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::string l = lines[i];
    if (indent != std::numeric_limits<std::size_t>::max() && l.size() >= indent) l.erase(0, indent);
    while (!l.empty() && (l.back() == ' ' || l.back() == '\t' || l.back() == '\r')) l.pop_back();
    out.push_back(std::move(l));
  }
  while (!out.empty() && out.back().empty()) out.pop_back();
  while (!out.empty() && out.front().empty()) out.erase(out.begin());
  std::string joined;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i) joined += '\n';
    joined += out[i];
  }
  return joined;
}

std::optional<std::string> docstring_of(const Node& fn, std::string_view source) {
  const Node* body = nullptr;
  for (const Node& c : fn.children) {
    if (c.type == "block") body = &c;
  }
  if (!body || body->children.empty()) return std::nullopt;
  const Node& first = body->children.front();
  if (first.type != "expression_statement" || first.children.size() != 1) return std::nullopt;
  const Node& expr = first.children.front();
  std::string text;
  if (expr.type == "string") {
    text = unquote(expr.text(source));
  } else if (expr.type == "concatenated_string") {
    for (const Node& part : expr.children) text += unquote(part.text(source));
  } else {
    return std::nullopt;
  }
  return clean_doc(text);
}

std::string dedented_source(const Node& fn, std::string_view source) {
  std::size_t line_start = source.rfind('\n', fn.begin == 0 ? 0 : fn.begin - 1);
  line_start = (line_start == std::string_view::npos || fn.begin == 0) ? 0 : line_start + 1;
  const std::string_view prefix = source.substr(line_start, fn.begin - line_start);
  if (prefix.find_first_not_of(" \t") != std::string_view::npos) {
    return std::string(source.substr(fn.begin, fn.end - fn.begin));
  }
  const std::size_t indent = prefix.size();
  std::string out;
  std::size_t pos = line_start;
  bool first = true;
  while (pos < fn.end) {
    std::size_t nl = source.find('\n', pos);
    const std::size_t line_end = nl == std::string_view::npos || nl >= fn.end ? fn.end : nl;
    std::string_view line = source.substr(pos, line_end - pos);
    std::size_t strip = 0;
    while (strip < indent && strip < line.size() && (line[strip] == ' ' || line[strip] == '\t')) ++strip;
    if (!first) out += '\n';
    out += line.substr(strip);
    first = false;
    if (line_end == fn.end) break;
    pos = line_end + 1;
  }
  out += '\n';
  return out;
}

void collect(const Node& node, std::string_view source, const std::string& scope,
             const python::ParseResult& parsed, std::vector<FunctionSource>& out) {
  for (const Node& child : node.children) {
    const Node* target = &child;
    if (child.type == "decorated_definition") target = &child.children.back();
    if (target->type == "function_definition" || target->type == "class_definition") {
      const std::string name(target->children.front().text(source));
      const std::string qualified = scope.empty() ? name : scope + "." + name;
      if (target->type == "function_definition") {
        FunctionSource fs;
        fs.name = name;
        fs.qualified_name = qualified;
        fs.code = dedented_source(*target, source);
        fs.docstring = docstring_of(*target, source);
        fs.line = static_cast<std::uint32_t>(
            std::count(source.begin(), source.begin() + target->begin, '\n') + 1);
        out.push_back(std::move(fs));
      }
      collect(*target, source, qualified, parsed, out);
    } else {
      collect(child, source, scope, parsed, out);
    }
  }
}

}  // namespace

std::vector<FunctionSource> extract_functions(const std::string& module_source) {
  const python::ParseResult parsed = python::parse(module_source);
  std::vector<FunctionSource> out;
  collect(parsed.root, parsed.source, "", parsed, out);
  return out;
}

std::optional<std::string> function_docstring(std::string_view function_code) {
  const python::ParseResult parsed = python::parse(std::string(function_code));
  std::optional<std::string> doc;
  bool found = false;
  python::walk(parsed.root, [&](const Node& n) {
    if (!found && n.type == "function_definition") {
      found = true;
      doc = docstring_of(n, parsed.source);
    }
  });
  return doc;
}

}  // namespace codecause::ingest
