#include <random>
#include <set>

#include "doctest.h"

#include "codecause/error.hpp"
#include "codecause/testbeds.hpp"
#include "codecause/util.hpp"

using namespace codecause;
using namespace codecause::testbeds;

namespace {

std::vector<features::DataPoint> fixture_points() {
  auto samples = ingest::import_jsonl(read_file(CODECAUSE_FIXTURES "/replay/samples.jsonl"));
  samples.pop_back();  // the invalid sample
  return features::extract_all(std::move(samples));
}

double brute_max_similarity(const std::vector<TokenSet>& sets, const std::vector<std::size_t>& kept) {
  double best = 0.0;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    for (std::size_t j = i + 1; j < kept.size(); ++j) {
      const auto& a = sets[kept[i]];
      const auto& b = sets[kept[j]];
      std::set<std::int32_t> u(a.begin(), a.end());
      std::size_t inter = 0;
      for (auto x : b) inter += u.count(x) ? 1 : 0;
      u.insert(b.begin(), b.end());
      best = std::max(best, static_cast<double>(inter) / static_cast<double>(u.size()));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("jaccard similarity") {
  CHECK(jaccard_similarity({1, 2, 3}, {2, 3, 4}) == doctest::Approx(0.5));
  CHECK(jaccard_similarity({}, {}) == 1.0);
  CHECK(jaccard_similarity({1}, {}) == 0.0);
  CHECK(jaccard_similarity({1, 2}, {1, 2}) == 1.0);
}

TEST_CASE("dedup keeps the first of each near-duplicate group") {
  const std::vector<TokenSet> sets = {{1, 2, 3, 4}, {1, 2, 3, 4, 5}, {7, 8}, {1, 2, 3, 5}, {7, 8, 9}};
  // 0~1 = 0.8, 0~3 = 0.6, 2~4 = 0.67, 1~3 = 0.8 (but 1 is already dropped).
  const auto r = dedup(sets, 0.7);
  CHECK(r.kept == std::vector<std::size_t>{0, 2, 3, 4});
  CHECK(r.report.before == 5);
  CHECK(r.report.dupes == 1);
  CHECK(r.report.after == 4);
  CHECK(r.report.rate() == doctest::Approx(20.0));
}

TEST_CASE("parallel dedup equals the serial reference") {
  std::mt19937_64 rng(5);
  std::vector<TokenSet> sets;
  for (int i = 0; i < 300; ++i) {
    std::set<std::int32_t> s;
    const int size = 5 + static_cast<int>(rng() % 20);
    for (int k = 0; k < size; ++k) s.insert(static_cast<std::int32_t>(rng() % 60));
    sets.emplace_back(s.begin(), s.end());
  }
  for (double th : {0.3, 0.5, 0.7}) {
    const auto par = dedup(sets, th);
    const auto ser = dedup_serial(sets, th);
    CHECK(par.kept == ser.kept);
    CHECK(brute_max_similarity(sets, par.kept) < th);
  }
}

TEST_CASE("sampling without replacement") {
  const auto a = sample_indices(100, 30, 9);
  CHECK(a == sample_indices(100, 30, 9));
  CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == 30);
  CHECK(*std::max_element(a.begin(), a.end()) < 100);
  CHECK(a != sample_indices(100, 30, 10));
  CHECK_THROWS_AS(sample_indices(10, 11, 1), DataError);
}

TEST_CASE("cut candidates are body token starts") {
  // "def f(x):\n" is 10 bytes; body tokens start at 14 (return), 21 (x), 23 (+), 25 (1).
  CHECK(cut_candidates("def f(x):\n    return x + 1\n") == std::vector<std::size_t>{14, 21, 23, 25});
}

TEST_CASE("descriptive text") {
  CHECK(is_descriptive_text("one two three four five six seven eight nine ten eleven"));
  CHECK_FALSE(is_descriptive_text("fix bug"));
  CHECK(is_descriptive_text(std::string(51, 'x')));
}

TEST_CASE("derived testbeds on the fixture corpus") {
  const auto points = fixture_points();
  const auto raw = make_raw_testbed(points);
  const auto raw_doc = make_raw_docstring_testbed(points);
  std::vector<std::string> corpus;
  for (const auto& p : points) corpus.push_back(p.raw.code);
  const auto model = tokenization::BpeModel::train(corpus, 400);

  const auto d = derive_task_testbeds(raw, raw_doc, 20, 3, model, 0.7);
  REQUIRE(d.testbeds.size() == 5);
  REQUIRE(d.reports.size() == 5);
  CHECK(d.testbeds[0].name == TestbedName::RandomCut);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(d.reports[i].before == 20);
    CHECK(d.reports[i].after == d.testbeds[i].points.size());
    CHECK(d.reports[i].before == d.reports[i].after + d.reports[i].dupes);
  }
  for (const auto& tp : d.testbeds[0].points) {
    REQUIRE(tp.cut_prefix.has_value());
    CHECK(*tp.cut_prefix + *tp.expected_suffix == tp.point.raw.code);
  }
  for (const auto& tp : d.testbeds[1].points) CHECK(features::is_valid_docstring(tp.point.raw.docstring));

  const auto again = derive_task_testbeds(raw, raw_doc, 20, 3, model, 0.7);
  CHECK(export_jsonl(again.testbeds[1]) == export_jsonl(d.testbeds[1]));
  CHECK(import_jsonl(export_jsonl(d.testbeds[0])).points.size() == d.testbeds[0].points.size());
  CHECK_THROWS_AS(derive_task_testbeds(raw, raw_doc, points.size() + 1, 3, model), DataError);
}

TEST_CASE("dedup report CSV") {
  const DedupReport r{"WithDocstring", 3000, 81, 2919};
  CHECK(dedup_csv_row(r) == "WithDocstring,code completion,code-text=>code,3000,81,2.70%,2919\n");
  const auto back = parse_dedup_csv(dedup_csv_header() + dedup_csv_row(r));
  REQUIRE(back.size() == 1);
  CHECK(back[0].dupes == 81);
  CHECK(back[0].after == 2919);
}
