#include "doctest.h"

#include "codecause/error.hpp"
#include "codecause/features.hpp"

using namespace codecause;
using namespace codecause::features;

namespace {

ingest::RawSample raw(std::string code, std::optional<std::string> doc = std::nullopt) {
  ingest::RawSample s;
  s.commit_id = "abcdef0";
  s.fun_name = "f";
  s.code = std::move(code);
  s.docstring = std::move(doc);
  return s;
}

}  // namespace

TEST_CASE("minimal method") {
  // One space after def, four indent spaces, two newlines.
  const auto f = compute_features(raw("def f():\n    pass\n"));
  CHECK(f.n_whitespaces == 7);
  CHECK(f.nloc == 2);
  CHECK(f.complexity == 1);
  CHECK(f.n_ast_errors == 0);
}

TEST_CASE("decision points") {
  for (const char* t : {"if_statement", "elif_clause", "for_statement", "while_statement", "except_clause",
                        "conditional_expression", "if_clause"}) {
    CHECK(is_decision_point(t));
  }
  CHECK_FALSE(is_decision_point("else_clause"));
  CHECK_FALSE(is_decision_point("function_definition"));
}

TEST_CASE("boolean chains count one per operator") {
  const auto f = compute_features(raw("def f(a, b, c):\n    return a and b or c\n"));
  CHECK(f.complexity == 3);
}

TEST_CASE("docstring features") {
  const auto d = extract_docstring_features(std::string("Return the sum of the two values."));
  CHECK(d.n_words == 7);
  CHECK(d.vocab_size == 6);  // "the" repeats
  CHECK(d.language == "en");
  CHECK(extract_docstring_features(std::nullopt).n_words == 0);
  CHECK(is_valid_docstring(std::string("one two three four")));
  CHECK_FALSE(is_valid_docstring(std::string("one two three")));
  CHECK_FALSE(is_valid_docstring(std::nullopt));
  CHECK(count_words("  a  b\tc\n") == 3);
}

TEST_CASE("language guess") {
  CHECK(detect_language("Returns the number of items that are stored in the list") == "en");
  CHECK(detect_language("Devuelve el número de elementos que están en la lista de la casa") == "es");
}

TEST_CASE("syntax errors are counted, not thrown") {
  const auto f = compute_features(raw("def f(:\n    return\n"));
  CHECK(f.n_ast_errors > 0);
  CHECK_THROWS_AS(parse_method("def f():\n    return '\xff'\n"), DataError);
}

TEST_CASE("parallel extraction equals the serial reference") {
  std::vector<ingest::RawSample> samples;
  for (int i = 0; i < 64; ++i) {
    std::string code = "def f" + std::to_string(i) + "(x):\n";
    for (int k = 0; k <= i % 7; ++k) code += "    if x > " + std::to_string(k) + ":\n        x -= 1\n";
    code += "    return x\n";
    samples.push_back(raw(code, "Reduce the value step by step."));
  }
  const auto par = extract_all(samples);
  const auto ser = extract_all_serial(samples);
  REQUIRE(par.size() == ser.size());
  for (std::size_t i = 0; i < par.size(); ++i) {
    CHECK(par[i] == ser[i]);
    CHECK(par[i].features.complexity == 2 + static_cast<std::int64_t>(i % 7));
  }
}

TEST_CASE("datapoint JSONL round-trips and recomputes missing features") {
  const auto p = make_datapoint(raw("def g(y):\n    return y * 2\n", "Double the input value please."));
  const std::string text = export_jsonl({p});
  CHECK(import_jsonl(text)[0] == p);
  const std::string bare = ingest::export_jsonl({p.raw});
  CHECK(import_jsonl(bare)[0] == p);
  CHECK(feature_value(p.features, "nloc") == 2.0);
  CHECK_FALSE(feature_value(p.features, "bogus").has_value());
}
