#include "doctest.h"

#include "codecause/error.hpp"
#include "codecause/tokenization.hpp"

using namespace codecause;
using namespace codecause::tokenization;

TEST_CASE("byte alphabet encodes every byte on its own") {
  const BpeModel m;
  CHECK(m.vocab_size() == 256);
  CHECK(m.encode("ab") == std::vector<std::string>{"a", "b"});
  CHECK(m.encode_ids("A") == std::vector<std::int32_t>{65});
}

TEST_CASE("most frequent pair merges first") {
  // Pairs of "abab": (a,b) twice, (b,a) once.
  const auto m = BpeModel::train({"abab"}, 258);
  REQUIRE(m.merges().size() == 2);
  CHECK(m.merges()[0] == std::pair<std::string, std::string>{"a", "b"});
  CHECK(m.merges()[1] == std::pair<std::string, std::string>{"ab", "ab"});
  CHECK(m.encode("abab") == std::vector<std::string>{"abab"});
  CHECK(m.encode("ba") == std::vector<std::string>{"b", "a"});
}

TEST_CASE("ties go to the smallest byte pair") {
  const auto m = BpeModel::train({"ba", "ab"}, 257);
  REQUIRE(m.merges().size() == 1);
  CHECK(m.merges()[0] == std::pair<std::string, std::string>{"a", "b"});
}

TEST_CASE("training is deterministic and encoding is lossless") {
  const std::vector<std::string> corpus = {"def add(a, b):\n    return a + b\n",
                                           "def sub(a, b):\n    return a - b\n",
                                           "for item in items:\n    total += item\n"};
  const auto m1 = BpeModel::train(corpus, 300);
  const auto m2 = BpeModel::train(corpus, 300);
  CHECK(m1.merges() == m2.merges());
  CHECK(m1.to_json() == m2.to_json());
  for (const std::string text : {"def mul(a, b):\n\treturn a * b\n", "caf\xc3\xa9 \xe2\x9c\x93", ""}) {
    CHECK(BpeModel::decode(m1.encode(text)) == text);
    CHECK(m1.decode_ids(m1.encode_ids(text)) == text);
  }
  const auto back = BpeModel::from_json(m1.to_json());
  CHECK(back.merges() == m1.merges());
  CHECK(back.encode_ids("return a + b") == m1.encode_ids("return a + b"));
}

TEST_CASE("special tokens are kept whole") {
  const auto m = BpeModel::train({"hello <eos> world"}, 260, {"<eos>"});
  const auto toks = m.encode("hi<eos>");
  CHECK(std::find(toks.begin(), toks.end(), "<eos>") != toks.end());
  CHECK(m.special_tokens() == std::vector<std::string>{"<eos>"});
}

TEST_CASE("training rejects bad input") {
  CHECK_THROWS_AS(BpeModel::train({}, 300), DataError);
  CHECK_THROWS_AS(BpeModel::train({"abc"}, 256), DataError);
}

TEST_CASE("pretokenizer chunks concatenate back to the text") {
  const std::string text = "  x = foo(12, 'a')\n\treturn  x\n";
  std::string joined;
  for (auto c : pretokenize(text)) joined += c;
  CHECK(joined == text);
  const auto chunks = pretokenize("a bc 12");
  CHECK(chunks == std::vector<std::string_view>{"a", " bc", " 12"});
}

TEST_CASE("taxonomy classification") {
  const TaxonomyTable t;
  CHECK(t.classify("if") == TokenClass::conditionals);
  CHECK(t.classify(" for") == TokenClass::loops);
  CHECK(t.classify("class") == TokenClass::oop);
  CHECK(t.classify("try") == TokenClass::exceptions);
  CHECK(t.classify("zzz_unmapped") == TokenClass::extraTokens);
  const auto custom = TaxonomyTable::from_json(R"({"loops": ["repeat"]})");
  CHECK(custom.classify("repeat") == TokenClass::loops);
  CHECK(custom.classify("if") == TokenClass::conditionals);

  const auto h = classify_tokens({"if", "x", "for", "if"}, t);
  std::int64_t total = 0;
  for (const auto& [cls, n] : h) total += n;
  CHECK(total == 4);
  CHECK(h.at(TokenClass::conditionals) == 2);
  for (auto c : all_token_classes()) CHECK(class_from_name(class_name(c)) == c);
}
