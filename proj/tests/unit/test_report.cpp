#include <cmath>
#include <set>

#include "doctest.h"

#include "codecause/error.hpp"
#include "codecause/report.hpp"
#include "codecause/util.hpp"
#include "support/synthetic.hpp"

using namespace codecause;
using namespace codecause::report;
using llm_eval::TreatmentId;

namespace {

ResultsInput results_input() {
  const auto s = synthetic::synthetic_study(120, 8);
  causal::StudyConfig c;
  c.scm.confounders = {"n_whitespaces", "token_count", "nloc"};
  c.params.min_per_arm = 10;
  ResultsInput in;
  in.metrics = performance_metrics(s.records, {TreatmentId::T1, TreatmentId::T2});
  in.correlations = causal::correlation_table(s.records, s.features, c);
  in.effects = causal::run_effects(s.records, s.features, c);
  in.confounders = c.scm.confounders;
  in.effect_modifiers = c.scm.effect_modifiers;
  return in;
}

}  // namespace

TEST_CASE("mean and sample standard deviation") {
  const auto s = mean_std({1, 2, 3, 4});
  CHECK(s.avg == 2.5);
  CHECK(s.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(mean_std({7}).std == 0.0);
  CHECK_THROWS_AS(mean_std({}), DataError);
}

TEST_CASE("descriptive table round-trips at two decimals") {
  testbeds::Testbed tb;
  tb.name = testbeds::TestbedName::WithDocstring;
  for (const char* code : {"def f():\n    pass\n", "def g(a, b):\n    return a + b\n"}) {
    ingest::RawSample r;
    r.code = code;
    tb.points.push_back({features::make_datapoint(r), std::nullopt, std::nullopt});
  }
  const auto row = describe(tb);
  CHECK(row.size == 2);
  CHECK(row.stats[0].avg == doctest::Approx(9.0));  // whitespace 7 and 11
  const auto back = parse_descriptive_csv(descriptive_csv({row}));
  REQUIRE(back.size() == 1);
  CHECK(back[0].testbed == "WithDocstring");
  CHECK(back[0].stats[0].std == doctest::Approx(2.83).epsilon(1e-9));
  CHECK(descriptive_csv({row}).starts_with("testbed,size,n_whitespaces_avg,n_whitespaces_std"));
  CHECK_THROWS_AS(describe(testbeds::Testbed{}), DataError);
}

TEST_CASE("Jensen-Shannon distance bounds") {
  CHECK(js_distance({0.5, 0.5}, {0.5, 0.5}) == doctest::Approx(0.0));
  CHECK(js_distance({1, 0}, {0, 1}) == doctest::Approx(std::sqrt(std::log(2.0))));
  const double d = js_distance({0.7, 0.3}, {0.4, 0.6});
  CHECK(d == doctest::Approx(js_distance({0.4, 0.6}, {0.7, 0.3})));
  CHECK(normalize({1, 3}) == std::vector<double>{0.25, 0.75});
}

TEST_CASE("proportion curve counts values at or above each threshold") {
  CHECK(proportion_curve({0.0, 0.5, 1.0}, 2) == std::vector<double>{1.0, 2.0 / 3.0, 1.0 / 3.0});
  const auto csv = similarity_proportion_csv({{"control", {0.2, 0.9}}}, 4);
  CHECK(csv.starts_with("threshold,control\n0.00,1"));
}

TEST_CASE("token histogram shares bins across groups") {
  const tokenization::BpeModel bytes;
  const GroupTexts groups = {{"a", {"xx", "xxxx"}}, {"b", {"x"}}};
  const auto h = token_histogram(groups, bytes, 2);
  // Longest text has 4 tokens: width (4 + 2) / 2 = 3, bins [0,3) and [3,6).
  CHECK(h.bin_width == 3);
  CHECK(h.counts[0] == std::vector<std::int64_t>{1, 1});
  CHECK(h.counts[1] == std::vector<std::int64_t>{1, 0});
  CHECK(token_dist_metadata(h, "a").find("\"log_base\"") != std::string::npos);
}

TEST_CASE("taxonomy counts cover every class") {
  const tokenization::BpeModel bytes;
  const auto counts = taxonomy_counts({{"g", {"if x"}}}, bytes, tokenization::TaxonomyTable{});
  CHECK(counts.size() == tokenization::all_token_classes().size());
  std::int64_t total = 0;
  for (const auto& c : counts) total += c.count;
  CHECK(total == 4);
  CHECK(taxonomy_svg(counts).starts_with("<svg"));
}

TEST_CASE("results table has the three blocks") {
  const auto in = results_input();
  const auto rows = results_rows(in);
  REQUIRE(rows.size() > 1);
  CHECK(rows[0][0] == "block");
  std::set<std::string> blocks;
  for (std::size_t i = 1; i < rows.size(); ++i) blocks.insert(rows[i][0]);
  CHECK(blocks == std::set<std::string>{"Performance Metrics", "Correlations", "Causal Effects"});
  CHECK(results_csv(in) == results_csv(in));
  const auto md = results_markdown(in);
  CHECK(md.find("**") != std::string::npos);

  auto missing = in;
  missing.effects.clear();
  CHECK_THROWS_AS(results_csv(missing), DataError);
  auto no_refuters = in;
  for (auto& e : no_refuters.effects) e.refutations.clear();
  CHECK_THROWS_AS(results_csv(no_refuters), DataError);
}

TEST_CASE("performance metrics put control first") {
  const auto s = synthetic::synthetic_study(20, 1);
  const auto m = performance_metrics(s.records, {TreatmentId::T2, TreatmentId::T1});
  REQUIRE(m.size() == 3);
  CHECK(m[0].group == "control");
  CHECK(m[1].group == "T2");
  CHECK(m[0].n == 20);
}
