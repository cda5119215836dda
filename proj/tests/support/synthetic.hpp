// Small synthetic evaluation study shared by the causal and report tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "codecause/features.hpp"
#include "codecause/llm_eval.hpp"

namespace synthetic {

using codecause::llm_eval::TreatmentId;

struct Study {
  std::vector<codecause::llm_eval::EvalRecord> records;
  std::map<std::string, codecause::features::FeatureVector> features;
};

// Three groups over the same points; longer methods score lower, T1 lowers similarity.
inline Study synthetic_study(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::uniform_int_distribution<int> lines(2, 30);
  Study s;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = "pt" + std::to_string(i);
    codecause::features::FeatureVector f;
    f.nloc = lines(rng);
    f.token_count = 6 * f.nloc + lines(rng);
    f.n_whitespaces = 9 * f.nloc + lines(rng);
    f.complexity = 1 + lines(rng) % 5;
    f.n_ast_nodes = 5 * f.nloc;
    f.n_ast_levels = 4 + lines(rng) % 6;
    f.n_ast_errors = lines(rng) % 2;
    s.features[id] = f;
    for (auto t : {TreatmentId::control, TreatmentId::T1, TreatmentId::T2}) {
      codecause::llm_eval::EvalRecord r;
      r.point_id = id;
      r.treatment = t;
      r.prompt_size = 20 + 8 * f.nloc + (t == TreatmentId::T1 ? 5 : 0);
      const double shift = t == TreatmentId::T1 ? -0.05 : t == TreatmentId::T2 ? 0.02 : 0.0;
      r.y_lev_similarity = std::clamp(0.9 - 0.01 * static_cast<double>(f.nloc) + shift + noise(rng), 0.0, 1.0);
      r.y_lev_distance = static_cast<std::int64_t>(std::lround(400.0 * (1.0 - r.y_lev_similarity)));
      s.records.push_back(r);
    }
  }
  return s;
}

}  // namespace synthetic
