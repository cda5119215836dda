#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>

#include "codecause/causal.hpp"
#include "codecause/error.hpp"

namespace codecause::causal {

std::string_view method_str(Method m) {
  switch (m) {
    case Method::matching: return "matching";
    case Method::stratification: return "stratification";
    case Method::ipw: return "ipw";
  }
  return "matching";
}

Method method_from_str(std::string_view s) {
  if (s == "matching") return Method::matching;
  if (s == "stratification") return Method::stratification;
  if (s == "ipw") return Method::ipw;
  throw DataError("unknown estimation method '" + std::string(s) + "'");
}

std::string_view refuter_str(Refuter r) {
  switch (r) {
    case Refuter::placebo: return "placebo";
    case Refuter::random_common_cause: return "random_common_cause";
    case Refuter::subset: return "subset";
  }
  return "placebo";
}

Refuter refuter_from_str(std::string_view s) {
  if (s == "placebo") return Refuter::placebo;
  if (s == "random_common_cause") return Refuter::random_common_cause;
  if (s == "subset") return Refuter::subset;
  throw DataError("unknown refuter '" + std::string(s) + "'");
}

bool is_similarity_outcome(std::string_view outcome) {
  return outcome == "y_lev_similarity" || outcome == "y_bleu" || outcome == "y_codebleu";
}

void ScmSpec::validate() const {
  auto has = [](const std::vector<std::string>& v, const std::string& x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  };
  for (const std::string& z : confounders) {
    if (has(effect_modifiers, z)) throw UsageError("'" + z + "' is both a confounder and an effect modifier");
  }
  if (has(confounders, treatment)) throw UsageError("the treatment cannot be a confounder");
  if (has(confounders, outcome)) throw UsageError("the outcome cannot be a confounder");
  if (treatment == outcome) throw UsageError("treatment and outcome must differ");
}

const std::vector<double>& Dataset::column(const std::string& name) const {
  const auto it = columns.find(name);
  if (it == columns.end()) throw DataError("no column named '" + name + "'");
  return it->second;
}

Dataset Dataset::select(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.treatment.reserve(rows.size());
  for (std::size_t r : rows) out.treatment.push_back(treatment.at(r));
  for (const auto& [name, col] : columns) {
    std::vector<double> v;
    v.reserve(rows.size());
    for (std::size_t r : rows) v.push_back(col.at(r));
    out.columns.emplace(name, std::move(v));
  }
  return out;
}

void Dataset::validate() const {
  for (double t : treatment) {
    if (t != 0.0 && t != 1.0) throw DataError("treatment indicator must be 0 or 1");
  }
  for (const auto& [name, col] : columns) {
    if (col.size() != rows()) throw DataError("column '" + name + "' has the wrong length");
    for (double v : col) {
      if (!std::isfinite(v)) throw DataError("column '" + name + "' has a missing or non-finite value");
    }
  }
}

double difference_in_means(const std::vector<double>& t, const std::vector<double>& y) {
  double s1 = 0.0;
  double s0 = 0.0;
  std::size_t n1 = 0;
  std::size_t n0 = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == 1.0) {
      s1 += y[i];
      ++n1;
    } else {
      s0 += y[i];
      ++n0;
    }
  }
  if (n1 == 0 || n0 == 0) throw DataError("difference in means needs both arms");
  return s1 / static_cast<double>(n1) - s0 / static_cast<double>(n0);
}

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

struct Arm {
  std::vector<double> score;  // sorted logit(e)
  std::vector<double> outcome;
};

Arm make_arm(const std::vector<double>& t, const std::vector<double>& y, const std::vector<double>& l, double which) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == which) idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return l[a] < l[b] || (l[a] == l[b] && y[a] < y[b]); });
  Arm arm;
  for (std::size_t i : idx) {
    arm.score.push_back(l[i]);
    arm.outcome.push_back(y[i]);
  }
  return arm;
}

// Mean outcome over the nearest neighbours (all ties at the minimal distance), or nullopt when
// the nearest lies outside the caliper.
std::optional<double> nearest(const Arm& arm, double s, double caliper) {
  if (arm.score.empty()) return std::nullopt;
  const auto it = std::lower_bound(arm.score.begin(), arm.score.end(), s);
  double best = std::numeric_limits<double>::infinity();
  if (it != arm.score.end()) best = std::min(best, *it - s);
  if (it != arm.score.begin()) best = std::min(best, s - *(it - 1));
  if (best > caliper) return std::nullopt;
  std::vector<double> targets;
  if (it != arm.score.end() && *it - s == best) targets.push_back(*it);
  if (it != arm.score.begin() && s - *(it - 1) == best) targets.push_back(*(it - 1));
  double sum = 0.0;
  std::size_t count = 0;
  for (const double target : targets) {
    const auto [lo, hi] = std::equal_range(arm.score.begin(), arm.score.end(), target);
    for (auto k = lo; k != hi; ++k) {
      sum += arm.outcome[static_cast<std::size_t>(k - arm.score.begin())];
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

}  // namespace

double ate_matching(const std::vector<double>& t, const std::vector<double>& y, const std::vector<double>& e,
                    double caliper_sd) {
  std::vector<double> l(e.size());
  std::transform(e.begin(), e.end(), l.begin(), logit);
  const double n = static_cast<double>(l.size());
  const double mean = std::accumulate(l.begin(), l.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : l) ss += (v - mean) * (v - mean);
  const double sd = l.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  const double caliper = caliper_sd * sd;
  const Arm treated = make_arm(t, y, l, 1.0);
  const Arm control = make_arm(t, y, l, 0.0);
  double sum = 0.0;
  std::size_t matched = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const bool is_treated = t[i] == 1.0;
    const auto counterfactual = nearest(is_treated ? control : treated, l[i], caliper);
    if (!counterfactual) continue;
    sum += is_treated ? y[i] - *counterfactual : *counterfactual - y[i];
    ++matched;
  }
  if (matched == 0) throw DataError("matching: no unit has a match within the caliper (empty common support)");
  return sum / static_cast<double>(matched);
}

double ate_stratification(const std::vector<double>& t, const std::vector<double>& y, const std::vector<double>& e,
                          std::size_t strata) {
  if (strata == 0) throw UsageError("stratification needs at least one stratum");
  std::vector<double> sorted = e;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> cuts;
  for (std::size_t k = 1; k < strata; ++k) cuts.push_back(sorted[k * sorted.size() / strata]);
  std::vector<double> s1(strata, 0.0);
  std::vector<double> s0(strata, 0.0);
  std::vector<std::size_t> n1(strata, 0);
  std::vector<std::size_t> n0(strata, 0);
  for (std::size_t i = 0; i < e.size(); ++i) {
    const auto k = static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), e[i]) - cuts.begin());
    if (t[i] == 1.0) {
      s1[k] += y[i];
      ++n1[k];
    } else {
      s0[k] += y[i];
      ++n0[k];
    }
  }
  double weighted = 0.0;
  std::size_t kept = 0;
  for (std::size_t k = 0; k < strata; ++k) {
    if (n1[k] == 0 || n0[k] == 0) continue;
    const std::size_t size = n1[k] + n0[k];
    weighted += static_cast<double>(size) * (s1[k] / static_cast<double>(n1[k]) - s0[k] / static_cast<double>(n0[k]));
    kept += size;
  }
  if (kept == 0) throw DataError("stratification: every stratum lacks one of the arms");
  return weighted / static_cast<double>(kept);
}

double ate_ipw(const std::vector<double>& t, const std::vector<double>& y, const std::vector<double>& e) {
  double treated = 0.0;
  double control = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    treated += t[i] * y[i] / e[i];
    control += (1.0 - t[i]) * y[i] / (1.0 - e[i]);
  }
  const double n = static_cast<double>(t.size());
  return treated / n - control / n;
}

namespace {

std::vector<double> propensity_scores(const Dataset& data, const std::vector<std::string>& confounders,
                                      const EstimatorParams& params) {
  std::vector<std::vector<double>> z;
  for (const std::string& name : confounders) z.push_back(data.column(name));
  return fit_propensity(standardize(z), data.treatment, params).scores;
}

}  // namespace

AteResult estimate_ate(const Dataset& data, const ScmSpec& scm, Method method, const EstimatorParams& params) {
  scm.validate();
  data.validate();
  AteResult r;
  r.method = method;
  for (double t : data.treatment) (t == 1.0 ? r.n_treated : r.n_control) += 1;
  if (r.n_treated < params.min_per_arm || r.n_control < params.min_per_arm) {
    throw DataError("ATE needs at least " + std::to_string(params.min_per_arm) + " records per arm (treated " +
                    std::to_string(r.n_treated) + ", control " + std::to_string(r.n_control) + ")");
  }
  const std::vector<double>& y = data.column(scm.outcome);
  const std::vector<double> e = propensity_scores(data, scm.confounders, params);
  switch (method) {
    case Method::matching: r.ate = ate_matching(data.treatment, y, e, params.caliper); break;
    case Method::stratification: r.ate = ate_stratification(data.treatment, y, e, params.strata); break;
    case Method::ipw: r.ate = ate_ipw(data.treatment, y, e); break;
  }
  if (is_similarity_outcome(scm.outcome)) r.ate_pct = 100.0 * r.ate;
  return r;
}

double similarity_scale(double effect, const std::vector<double>& outcome, std::string_view outcome_name) {
  if (is_similarity_outcome(outcome_name) || outcome.empty()) return effect;
  const auto [lo, hi] = std::minmax_element(outcome.begin(), outcome.end());
  const double range = *hi - *lo;
  return range > 0.0 ? effect / range : effect;
}

RefutationResult refute(const Dataset& data, const ScmSpec& scm, Method method, Refuter refuter,
                        const AteResult& original, std::uint64_t seed, const EstimatorParams& params) {
  std::mt19937_64 rng(seed);
  RefutationResult r;
  r.refuter = refuter;
  r.original_ate = original.ate;
  switch (refuter) {
    case Refuter::placebo: {
      Dataset placebo = data;
      std::shuffle(placebo.treatment.begin(), placebo.treatment.end(), rng);
      r.refuted_ate = estimate_ate(placebo, scm, method, params).ate;
      r.stable = std::abs(similarity_scale(r.refuted_ate, data.column(scm.outcome), scm.outcome)) <=
                 params.epsilon_placebo;
      return r;
    }
    case Refuter::random_common_cause: {
      Dataset augmented = data;
      ScmSpec spec = scm;
      std::string name = "random_common_cause";
      while (augmented.columns.count(name)) name += "_";
      std::normal_distribution<double> normal(0.0, 1.0);
      std::vector<double> noise(data.rows());
      for (double& v : noise) v = normal(rng);
      augmented.columns.emplace(name, std::move(noise));
      spec.confounders.push_back(name);
      r.refuted_ate = estimate_ate(augmented, spec, method, params).ate;
      break;
    }
    case Refuter::subset: {
      std::vector<std::size_t> idx(data.rows());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(static_cast<std::size_t>(std::llround(params.subset_fraction * static_cast<double>(data.rows()))));
      std::sort(idx.begin(), idx.end());
      r.refuted_ate = estimate_ate(data.select(idx), scm, method, params).ate;
      break;
    }
  }
  r.stable = std::abs(r.refuted_ate - r.original_ate) <= params.delta * std::abs(r.original_ate);
  return r;
}

}  // namespace codecause::causal
