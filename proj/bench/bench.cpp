// Parallel kernels against their serial reference implementations.
#include <random>
#include <set>

#include <benchmark/benchmark.h>

#include "codecause/causal.hpp"
#include "codecause/features.hpp"
#include "codecause/llm_eval.hpp"
#include "codecause/testbeds.hpp"
#include "codecause/util.hpp"

using namespace codecause;

namespace {

std::vector<ingest::RawSample> fixture_samples() {
  static const auto samples = ingest::import_jsonl(read_file(CODECAUSE_FIXTURES "/replay/samples.jsonl"));
  return samples;
}

std::vector<testbeds::TokenSet> random_sets(std::size_t n) {
  std::mt19937_64 rng(11);
  std::vector<testbeds::TokenSet> sets;
  for (std::size_t i = 0; i < n; ++i) {
    std::set<std::int32_t> s;
    for (int k = 0; k < 80; ++k) s.insert(static_cast<std::int32_t>(rng() % 2000));
    sets.emplace_back(s.begin(), s.end());
  }
  return sets;
}

struct ScoringInput {
  std::vector<llm_eval::Generation> generations;
  std::map<std::string, std::string> references;
};

const ScoringInput& scoring_input() {
  static const ScoringInput in = [] {
    ScoringInput s;
    const auto tb = testbeds::import_jsonl(read_file(CODECAUSE_FIXTURES "/replay/testbed.jsonl"));
    for (const auto& tp : tb.points) {
      const std::string id = llm_eval::point_id(tp.point);
      s.references[id] = tp.point.raw.code;
      std::string variant = tp.point.raw.code;
      if (const auto pos = variant.find("return"); pos != std::string::npos) variant.insert(pos, "# changed\n    ");
      for (auto t : {llm_eval::TreatmentId::control, llm_eval::TreatmentId::T1, llm_eval::TreatmentId::T2}) {
        s.generations.push_back({id, t, 100, "```python\n" + variant + "```"});
      }
    }
    return s;
  }();
  return in;
}

struct StudyInput {
  std::vector<llm_eval::EvalRecord> records;
  std::map<std::string, features::FeatureVector> features;
  causal::StudyConfig config;
};

const StudyInput& study_input() {
  static const StudyInput in = [] {
    StudyInput s;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise(0.0, 0.05);
    for (int i = 0; i < 400; ++i) {
      const std::string id = "p" + std::to_string(i);
      features::FeatureVector f;
      f.nloc = 2 + static_cast<std::int64_t>(rng() % 40);
      f.token_count = 6 * f.nloc + static_cast<std::int64_t>(rng() % 10);
      f.n_whitespaces = 8 * f.nloc + static_cast<std::int64_t>(rng() % 10);
      f.complexity = 1 + static_cast<std::int64_t>(rng() % 6);
      f.n_ast_nodes = 5 * f.nloc;
      f.n_ast_levels = 4 + static_cast<std::int64_t>(rng() % 5);
      s.features[id] = f;
      for (auto t : {llm_eval::TreatmentId::control, llm_eval::TreatmentId::T1, llm_eval::TreatmentId::T2}) {
        llm_eval::EvalRecord r;
        r.point_id = id;
        r.treatment = t;
        r.y_lev_similarity = std::clamp(0.9 - 0.01 * static_cast<double>(f.nloc) + noise(rng) -
                                            (t == llm_eval::TreatmentId::T1 ? 0.05 : 0.0),
                                        0.0, 1.0);
        r.y_lev_distance = static_cast<std::int64_t>(300.0 * (1.0 - r.y_lev_similarity));
        s.records.push_back(r);
      }
    }
    s.config.scm.confounders = {"n_whitespaces", "token_count", "nloc"};
    return s;
  }();
  return in;
}

void BM_dedup(benchmark::State& state) {
  const auto sets = random_sets(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(testbeds::dedup(sets, 0.7));
}
void BM_dedup_serial(benchmark::State& state) {
  const auto sets = random_sets(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(testbeds::dedup_serial(sets, 0.7));
}

void BM_extract_all(benchmark::State& state) {
  const auto samples = fixture_samples();
  for (auto _ : state) benchmark::DoNotOptimize(features::extract_all(samples));
}
void BM_extract_all_serial(benchmark::State& state) {
  const auto samples = fixture_samples();
  for (auto _ : state) benchmark::DoNotOptimize(features::extract_all_serial(samples));
}

void BM_score_all(benchmark::State& state) {
  const auto& in = scoring_input();
  for (auto _ : state) benchmark::DoNotOptimize(llm_eval::score_all(in.generations, in.references));
}
void BM_score_all_serial(benchmark::State& state) {
  const auto& in = scoring_input();
  for (auto _ : state) benchmark::DoNotOptimize(llm_eval::score_all_serial(in.generations, in.references));
}

void BM_run_effects(benchmark::State& state) {
  const auto& in = study_input();
  for (auto _ : state) benchmark::DoNotOptimize(causal::run_effects(in.records, in.features, in.config));
}
void BM_run_effects_serial(benchmark::State& state) {
  const auto& in = study_input();
  for (auto _ : state) benchmark::DoNotOptimize(causal::run_effects_serial(in.records, in.features, in.config));
}

}  // namespace

BENCHMARK(BM_dedup)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_dedup_serial)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_extract_all)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_extract_all_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_score_all)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_score_all_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_run_effects)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_run_effects_serial)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
