#include <exception>

#include "codecause/causal.hpp"
#include "codecause/csv.hpp"
#include "codecause/error.hpp"
#include "codecause/util.hpp"

namespace codecause::causal {

using llm_eval::EvalRecord;
using llm_eval::TreatmentId;

nlohmann::ordered_json EstimatorParams::to_json() const {
  nlohmann::ordered_json j;
  j["strata"] = strata;
  j["caliper"] = caliper;
  j["clip_lo"] = clip_lo;
  j["clip_hi"] = clip_hi;
  j["min_per_arm"] = min_per_arm;
  j["max_iterations"] = max_iterations;
  j["gradient_tolerance"] = gradient_tolerance;
  j["epsilon_placebo"] = epsilon_placebo;
  j["delta"] = delta;
  j["subset_fraction"] = subset_fraction;
  return j;
}

EstimatorParams EstimatorParams::from_json(const nlohmann::ordered_json& j) {
  EstimatorParams p;
  p.strata = j.value("strata", p.strata);
  p.caliper = j.value("caliper", p.caliper);
  p.clip_lo = j.value("clip_lo", p.clip_lo);
  p.clip_hi = j.value("clip_hi", p.clip_hi);
  p.min_per_arm = j.value("min_per_arm", p.min_per_arm);
  p.max_iterations = j.value("max_iterations", p.max_iterations);
  p.gradient_tolerance = j.value("gradient_tolerance", p.gradient_tolerance);
  p.epsilon_placebo = j.value("epsilon_placebo", p.epsilon_placebo);
  p.delta = j.value("delta", p.delta);
  p.subset_fraction = j.value("subset_fraction", p.subset_fraction);
  if (p.strata < 1) throw UsageError("strata must be at least 1");
  if (!(p.clip_lo > 0.0 && p.clip_lo < p.clip_hi && p.clip_hi < 1.0)) {
    throw UsageError("propensity clip bounds must satisfy 0 < lo < hi < 1");
  }
  if (!(p.subset_fraction > 0.0 && p.subset_fraction <= 1.0)) throw UsageError("subset_fraction must be in (0, 1]");
  if (p.caliper < 0.0 || p.delta < 0.0 || p.epsilon_placebo < 0.0) {
    throw UsageError("caliper, delta and epsilon_placebo must be non-negative");
  }
  return p;
}

nlohmann::ordered_json StudyConfig::to_json() const {
  nlohmann::ordered_json j;
  j["treatments"] = nlohmann::ordered_json::array();
  for (TreatmentId t : treatments) j["treatments"].push_back(llm_eval::treatment_str(t));
  j["outcomes"] = outcomes;
  j["scm"] = {{"confounders", scm.confounders}, {"effect_modifiers", scm.effect_modifiers}};
  j["methods"] = nlohmann::ordered_json::array();
  for (Method m : methods) j["methods"].push_back(method_str(m));
  j["refuters"] = nlohmann::ordered_json::array();
  for (Refuter r : refuters) j["refuters"].push_back(refuter_str(r));
  j["params"] = params.to_json();
  j["correlation"] = correlation == CorrelationKind::spearman ? "spearman" : "pearson";
  j["seed"] = seed;
  return j;
}

StudyConfig StudyConfig::from_json(const nlohmann::ordered_json& j) {
  StudyConfig c;
  try {
    if (j.contains("treatments")) {
      c.treatments.clear();
      for (const auto& t : j["treatments"]) c.treatments.push_back(llm_eval::treatment_from_str(t.get<std::string>()));
      for (TreatmentId t : c.treatments) {
        if (t == TreatmentId::control) throw UsageError("control cannot be a treated group");
      }
    }
    if (j.contains("outcomes")) c.outcomes = j["outcomes"].get<std::vector<std::string>>();
    if (j.contains("scm")) {
      const auto& s = j["scm"];
      if (s.contains("confounders")) c.scm.confounders = s["confounders"].get<std::vector<std::string>>();
      if (s.contains("effect_modifiers")) c.scm.effect_modifiers = s["effect_modifiers"].get<std::vector<std::string>>();
    }
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j["methods"]) c.methods.push_back(method_from_str(m.get<std::string>()));
    }
    if (j.contains("refuters")) {
      c.refuters.clear();
      for (const auto& r : j["refuters"]) c.refuters.push_back(refuter_from_str(r.get<std::string>()));
    }
    if (j.contains("params")) c.params = EstimatorParams::from_json(j["params"]);
    if (j.contains("correlation")) {
      const std::string kind = j["correlation"].get<std::string>();
      if (kind == "pearson") {
        c.correlation = CorrelationKind::pearson;
      } else if (kind == "spearman") {
        c.correlation = CorrelationKind::spearman;
      } else {
        throw UsageError("correlation must be 'pearson' or 'spearman'");
      }
    }
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("study config: ") + e.what());
  } catch (const DataError& e) {
    throw UsageError(std::string("study config: ") + e.what());
  }
  for (const std::string& outcome : c.outcomes) {
    ScmSpec s = c.scm;
    s.outcome = outcome;
    s.validate();
  }
  return c;
}

namespace {

void append_row(Dataset& d, const EvalRecord& r, const features::FeatureVector& f, double t) {
  d.treatment.push_back(t);
  d.columns["prompt_size"].push_back(static_cast<double>(r.prompt_size));
  d.columns["y_bleu"].push_back(r.y_bleu);
  d.columns["y_codebleu"].push_back(r.y_codebleu);
  d.columns["y_lev_distance"].push_back(static_cast<double>(r.y_lev_distance));
  d.columns["y_lev_similarity"].push_back(r.y_lev_similarity);
  for (const std::string& name : features::numeric_feature_names()) d.columns[name].push_back(*features::feature_value(f, name));
}

const features::FeatureVector& features_of(const std::map<std::string, features::FeatureVector>& by_point,
                                           const std::string& id) {
  const auto it = by_point.find(id);
  if (it == by_point.end()) throw DataError("evaluated point " + id + " is not in the testbed");
  return it->second;
}

}  // namespace

Dataset contrast_dataset(const std::vector<EvalRecord>& records,
                         const std::map<std::string, features::FeatureVector>& features_by_point, TreatmentId treated,
                         TreatmentId control) {
  Dataset d;
  for (const EvalRecord& r : records) {
    if (r.treatment == treated) append_row(d, r, features_of(features_by_point, r.point_id), 1.0);
    if (r.treatment == control) append_row(d, r, features_of(features_by_point, r.point_id), 0.0);
  }
  return d;
}

Dataset group_dataset(const std::vector<EvalRecord>& records,
                      const std::map<std::string, features::FeatureVector>& features_by_point, TreatmentId group) {
  Dataset d;
  for (const EvalRecord& r : records) {
    if (r.treatment == group) append_row(d, r, features_of(features_by_point, r.point_id), 0.0);
  }
  return d;
}

std::vector<CorrelationCell> correlation_table(const std::vector<EvalRecord>& records,
                                               const std::map<std::string, features::FeatureVector>& features_by_point,
                                               const StudyConfig& config) {
  std::vector<TreatmentId> groups = {TreatmentId::control};
  groups.insert(groups.end(), config.treatments.begin(), config.treatments.end());
  std::vector<std::string> variables = config.scm.confounders;
  variables.insert(variables.end(), config.scm.effect_modifiers.begin(), config.scm.effect_modifiers.end());
  std::vector<CorrelationCell> out;
  for (TreatmentId g : groups) {
    const Dataset d = group_dataset(records, features_by_point, g);
    if (d.rows() == 0) throw DataError("no eval records for group " + std::string(llm_eval::treatment_str(g)));
    for (const std::string& v : variables) {
      for (const std::string& outcome : config.outcomes) {
        CorrelationCell cell{std::string(llm_eval::treatment_str(g)), v, outcome, std::nullopt};
        try {
          cell.r = correlation(d.column(v), d.column(outcome), config.correlation);
        } catch (const DataError& e) {
          if (!d.columns.count(v) || !d.columns.count(outcome)) throw;
        }
        out.push_back(std::move(cell));
      }
    }
  }
  return out;
}

std::uint64_t job_seed(std::uint64_t seed, std::string_view contrast, std::string_view outcome, Method method,
                       Refuter refuter) {
  const std::string key = std::to_string(seed) + "|" + std::string(contrast) + "|" + std::string(outcome) + "|" +
                          std::string(method_str(method)) + "|" + std::string(refuter_str(refuter));
  return std::stoull(sha256_hex(key).substr(0, 16), nullptr, 16);
}

namespace {

struct Plan {
  std::vector<EffectCell> cells;
  std::vector<Dataset> data;  // per cell
  std::vector<ScmSpec> scm;   // per cell
};

Plan plan(const std::vector<EvalRecord>& records, const std::map<std::string, features::FeatureVector>& by_point,
          const StudyConfig& config) {
  Plan p;
  for (TreatmentId t : config.treatments) {
    const Dataset d = contrast_dataset(records, by_point, t);
    for (const std::string& outcome : config.outcomes) {
      for (Method m : config.methods) {
        EffectCell cell;
        cell.contrast = std::string(llm_eval::treatment_str(t));
        cell.outcome = outcome;
        cell.method = m;
        p.cells.push_back(std::move(cell));
        p.data.push_back(d);
        ScmSpec s = config.scm;
        s.outcome = outcome;
        p.scm.push_back(std::move(s));
      }
    }
  }
  return p;
}

void estimate_cell(Plan& p, std::size_t i, const StudyConfig& config) {
  p.cells[i].ate = estimate_ate(p.data[i], p.scm[i], p.cells[i].method, config.params);
  p.cells[i].refutations.resize(config.refuters.size());
}

void refute_cell(Plan& p, std::size_t i, std::size_t k, const StudyConfig& config) {
  EffectCell& c = p.cells[i];
  const Refuter r = config.refuters[k];
  c.refutations[k] = refute(p.data[i], p.scm[i], c.method, r, c.ate,
                            job_seed(config.seed, c.contrast, c.outcome, c.method, r), config.params);
}

void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::vector<EffectCell> run_effects(const std::vector<EvalRecord>& records,
                                    const std::map<std::string, features::FeatureVector>& features_by_point,
                                    const StudyConfig& config) {
  Plan p = plan(records, features_by_point, config);
  const auto n = static_cast<std::ptrdiff_t>(p.cells.size());
  std::vector<std::exception_ptr> errors(p.cells.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      estimate_cell(p, static_cast<std::size_t>(i), config);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  rethrow_first(errors);
  const auto n_ref = static_cast<std::ptrdiff_t>(config.refuters.size());
  std::vector<std::exception_ptr> ref_errors(p.cells.size() * config.refuters.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t job = 0; job < n * n_ref; ++job) {
    try {
      refute_cell(p, static_cast<std::size_t>(job / n_ref), static_cast<std::size_t>(job % n_ref), config);
    } catch (...) {
      ref_errors[job] = std::current_exception();
    }
  }
  rethrow_first(ref_errors);
  return std::move(p.cells);
}

std::vector<EffectCell> run_effects_serial(const std::vector<EvalRecord>& records,
                                           const std::map<std::string, features::FeatureVector>& features_by_point,
                                           const StudyConfig& config) {
  Plan p = plan(records, features_by_point, config);
  for (std::size_t i = 0; i < p.cells.size(); ++i) {
    estimate_cell(p, i, config);
    for (std::size_t k = 0; k < config.refuters.size(); ++k) refute_cell(p, i, k, config);
  }
  return std::move(p.cells);
}

std::string correlations_csv(const std::vector<CorrelationCell>& cells) {
  std::string out = csv_line({"group", "variable", "outcome", "r"});
  for (const CorrelationCell& c : cells) {
    out += csv_line({c.group, c.variable, c.outcome, c.r ? format_double(*c.r) : ""});
  }
  return out;
}

std::vector<CorrelationCell> parse_correlations_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  if (rows.empty() || rows.front() != CsvRow{"group", "variable", "outcome", "r"}) {
    throw DataError("correlations CSV: unexpected header");
  }
  std::vector<CorrelationCell> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const CsvRow& row = rows[i];
    if (row.size() != 4) throw DataError("correlations CSV row " + std::to_string(i + 1) + ": expected 4 columns");
    CorrelationCell c{row[0], row[1], row[2], std::nullopt};
    if (!row[3].empty()) c.r = parse_double(row[3]);
    out.push_back(std::move(c));
  }
  return out;
}

namespace {

const CsvRow kEffectsHeader = {"contrast", "outcome", "method", "estimate", "value", "original", "stable",
                               "n_treated", "n_control"};

}  // namespace

std::string effects_csv(const std::vector<EffectCell>& cells) {
  std::string out = csv_line(kEffectsHeader);
  for (const EffectCell& c : cells) {
    const std::string method(method_str(c.method));
    out += csv_line({c.contrast, c.outcome, method, "ate", format_double(c.ate.ate), "", "",
                     std::to_string(c.ate.n_treated), std::to_string(c.ate.n_control)});
    for (const RefutationResult& r : c.refutations) {
      out += csv_line({c.contrast, c.outcome, method, std::string(refuter_str(r.refuter)), format_double(r.refuted_ate),
                       format_double(r.original_ate), r.stable ? "true" : "false", "", ""});
    }
  }
  return out;
}

std::vector<EffectCell> parse_effects_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  if (rows.empty() || rows.front() != kEffectsHeader) throw DataError("effects CSV: unexpected header");
  std::vector<EffectCell> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const CsvRow& row = rows[i];
    const std::string where = "effects CSV row " + std::to_string(i + 1);
    if (row.size() != kEffectsHeader.size()) throw DataError(where + ": expected 9 columns");
    if (row[3] == "ate") {
      EffectCell c;
      c.contrast = row[0];
      c.outcome = row[1];
      c.method = method_from_str(row[2]);
      c.ate.method = c.method;
      c.ate.ate = parse_double(row[4]);
      if (is_similarity_outcome(c.outcome)) c.ate.ate_pct = 100.0 * c.ate.ate;
      try {
        c.ate.n_treated = std::stoull(row[7]);
        c.ate.n_control = std::stoull(row[8]);
      } catch (const std::exception&) {
        throw DataError(where + ": malformed arm sizes");
      }
      out.push_back(std::move(c));
    } else {
      if (out.empty() || out.back().contrast != row[0] || out.back().outcome != row[1] ||
          method_str(out.back().method) != row[2]) {
        throw DataError(where + ": refutation without a preceding ate row");
      }
      RefutationResult r;
      r.refuter = refuter_from_str(row[3]);
      r.refuted_ate = parse_double(row[4]);
      r.original_ate = parse_double(row[5]);
      r.stable = row[6] == "true";
      out.back().refutations.push_back(r);
    }
  }
  return out;
}

}  // namespace codecause::causal
