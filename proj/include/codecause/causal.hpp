#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "codecause/features.hpp"
#include "codecause/llm_eval.hpp"

namespace codecause::causal {

enum class Method { matching, stratification, ipw };
enum class Refuter { placebo, random_common_cause, subset };
enum class CorrelationKind { pearson, spearman };

std::string_view method_str(Method m);
Method method_from_str(std::string_view s);
std::string_view refuter_str(Refuter r);
Refuter refuter_from_str(std::string_view s);

/// Outcomes bounded to [0, 1]; their ATE is also reported as a percentage.
bool is_similarity_outcome(std::string_view outcome);

struct ScmSpec {
  std::string treatment = "T";
  std::string outcome = "y_lev_similarity";
  std::vector<std::string> confounders = {"prompt_size", "n_whitespaces", "token_count", "nloc"};
  std::vector<std::string> effect_modifiers = {"complexity", "n_ast_nodes", "n_ast_errors", "n_ast_levels"};

  /// Throws UsageError when the roles overlap.
  void validate() const;
};

/// Columnar records with a binary treatment indicator.
struct Dataset {
  std::vector<double> treatment;
  std::map<std::string, std::vector<double>> columns;

  std::size_t rows() const { return treatment.size(); }
  /// Throws DataError naming the column when absent.
  const std::vector<double>& column(const std::string& name) const;
  Dataset select(const std::vector<std::size_t>& rows) const;
  /// Throws DataError unless every column has rows() entries and the treatment is 0/1.
  void validate() const;
};

struct EstimatorParams {
  std::size_t strata = 5;
  double caliper = 0.2;  // in standard deviations of logit(e)
  double clip_lo = 0.01;
  double clip_hi = 0.99;
  std::size_t min_per_arm = 30;
  int max_iterations = 100;
  double gradient_tolerance = 1e-8;
  double epsilon_placebo = 0.05;
  double delta = 0.10;
  double subset_fraction = 0.8;

  nlohmann::ordered_json to_json() const;
  static EstimatorParams from_json(const nlohmann::ordered_json& j);
};

// ---- correlation -----------------------------------------------------------

/// Sample Pearson coefficient; DataError on mismatched or short input, or a constant series.
double pearson(const std::vector<double>& x, const std::vector<double>& y);
/// Pearson over average ranks.
double spearman(const std::vector<double>& x, const std::vector<double>& y);
double correlation(const std::vector<double>& x, const std::vector<double>& y, CorrelationKind kind);
std::vector<double> average_ranks(const std::vector<double>& x);

struct ScreenedCandidate {
  std::string name;
  double min_abs_r = 0.0;
  std::vector<double> r;  // one per group, in input order
};

/// Candidates whose |r| with the outcome lies in [lo, hi] within every group, strongest
/// first. A candidate that is constant in some group is dropped.
std::vector<ScreenedCandidate> screen_confounders(const std::vector<Dataset>& groups,
                                                  const std::vector<std::string>& candidates,
                                                  const std::string& outcome, double lo = 0.4, double hi = 0.8,
                                                  CorrelationKind kind = CorrelationKind::pearson);

// ---- propensity ------------------------------------------------------------

struct PropensityFit {
  std::vector<double> coefficients;  // intercept first, then one per kept column
  std::vector<std::size_t> kept_columns;  // constant columns are dropped from the design
  std::vector<double> scores;  // clipped
  int iterations = 0;
  double gradient_norm = 0.0;
};

/// Column-wise z-scores; a constant column becomes all zeros.
std::vector<std::vector<double>> standardize(const std::vector<std::vector<double>>& columns);

/// Logistic regression by Newton-Raphson with step halving. Throws DataError on perfect
/// separation and when the iteration cap is reached.
PropensityFit fit_propensity(const std::vector<std::vector<double>>& z, const std::vector<double>& t,
                             const EstimatorParams& params = {});

// ---- estimators ------------------------------------------------------------

struct AteResult {
  Method method = Method::stratification;
  double ate = 0.0;
  std::optional<double> ate_pct;
  std::size_t n_treated = 0;
  std::size_t n_control = 0;
};

/// Estimators on given propensity scores.
double ate_matching(const std::vector<double>& t, const std::vector<double>& y, const std::vector<double>& e,
                    double caliper_sd = 0.2);
double ate_stratification(const std::vector<double>& t, const std::vector<double>& y, const std::vector<double>& e,
                          std::size_t strata = 5);
double ate_ipw(const std::vector<double>& t, const std::vector<double>& y, const std::vector<double>& e);
double difference_in_means(const std::vector<double>& t, const std::vector<double>& y);

/// Fits the propensity model on the SCM's confounders and applies the chosen estimator.
AteResult estimate_ate(const Dataset& data, const ScmSpec& scm, Method method, const EstimatorParams& params = {});

struct RefutationResult {
  Refuter refuter = Refuter::placebo;
  double original_ate = 0.0;
  double refuted_ate = 0.0;
  bool stable = false;
};

/// Bounded outcomes are already on the similarity scale; others are divided by their range.
double similarity_scale(double effect, const std::vector<double>& outcome, std::string_view outcome_name);

RefutationResult refute(const Dataset& data, const ScmSpec& scm, Method method, Refuter refuter,
                        const AteResult& original, std::uint64_t seed, const EstimatorParams& params = {});

// ---- study -----------------------------------------------------------------

/// One binary contrast: the treatment group's records against the control group's, joined
/// with the features of the evaluated points.
Dataset contrast_dataset(const std::vector<llm_eval::EvalRecord>& records,
                         const std::map<std::string, features::FeatureVector>& features_by_point,
                         llm_eval::TreatmentId treated, llm_eval::TreatmentId control = llm_eval::TreatmentId::control);

/// Records of a single treatment group, with T all zero.
Dataset group_dataset(const std::vector<llm_eval::EvalRecord>& records,
                      const std::map<std::string, features::FeatureVector>& features_by_point,
                      llm_eval::TreatmentId group);

struct StudyConfig {
  std::vector<llm_eval::TreatmentId> treatments = {llm_eval::TreatmentId::T1, llm_eval::TreatmentId::T2};
  std::vector<std::string> outcomes = {"y_lev_distance", "y_lev_similarity"};
  ScmSpec scm;
  std::vector<Method> methods = {Method::matching, Method::stratification, Method::ipw};
  std::vector<Refuter> refuters = {Refuter::placebo, Refuter::random_common_cause, Refuter::subset};
  EstimatorParams params;
  CorrelationKind correlation = CorrelationKind::pearson;
  std::uint64_t seed = 42;

  nlohmann::ordered_json to_json() const;
  /// Missing keys keep their defaults.
  static StudyConfig from_json(const nlohmann::ordered_json& j);
};

struct CorrelationCell {
  std::string group;
  std::string variable;
  std::string outcome;
  std::optional<double> r;  // nullopt when undefined (constant series)
};

/// Every confounder and effect modifier against every outcome, per group (control first).
std::vector<CorrelationCell> correlation_table(const std::vector<llm_eval::EvalRecord>& records,
                                               const std::map<std::string, features::FeatureVector>& features_by_point,
                                               const StudyConfig& config);

struct EffectCell {
  std::string contrast;  // treatment id
  std::string outcome;
  Method method = Method::stratification;
  AteResult ate;
  std::vector<RefutationResult> refutations;
};

/// Per-job seed derived from the study seed and the job's identity.
std::uint64_t job_seed(std::uint64_t seed, std::string_view contrast, std::string_view outcome, Method method,
                       Refuter refuter);

/// Estimation and refutation jobs run in parallel; the result order is fixed.
std::vector<EffectCell> run_effects(const std::vector<llm_eval::EvalRecord>& records,
                                    const std::map<std::string, features::FeatureVector>& features_by_point,
                                    const StudyConfig& config);
std::vector<EffectCell> run_effects_serial(const std::vector<llm_eval::EvalRecord>& records,
                                           const std::map<std::string, features::FeatureVector>& features_by_point,
                                           const StudyConfig& config);

std::string correlations_csv(const std::vector<CorrelationCell>& cells);
std::vector<CorrelationCell> parse_correlations_csv(std::string_view text);
std::string effects_csv(const std::vector<EffectCell>& cells);
std::vector<EffectCell> parse_effects_csv(std::string_view text);

}  // namespace codecause::causal
