#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "codecause/causal.hpp"
#include "codecause/llm_eval.hpp"
#include "codecause/testbeds.hpp"
#include "codecause/tokenization.hpp"

namespace codecause::report {

// ---- descriptive statistics ------------------------------------------------

struct Stat {
  double avg = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
};

Stat mean_std(const std::vector<double>& values);

/// Feature columns in the descriptive table's order.
const std::vector<std::string>& descriptive_columns();

struct DescriptiveRow {
  std::string testbed;
  std::size_t size = 0;
  std::vector<Stat> stats;  // parallel to descriptive_columns()
};

/// Throws DataError on an empty testbed.
DescriptiveRow describe(const testbeds::Testbed& tb);

/// testbed,size,<feature>_avg,<feature>_std,... with two decimals.
std::string descriptive_csv(const std::vector<DescriptiveRow>& rows);
std::vector<DescriptiveRow> parse_descriptive_csv(std::string_view text);

// ---- results table ---------------------------------------------------------

struct MetricsSummary {
  std::string group;
  std::size_t n = 0;
  double bleu = 0.0;
  double codebleu = 0.0;
  Stat similarity;
};

/// One summary per group, control first then the treatments in `groups` order.
std::vector<MetricsSummary> performance_metrics(const std::vector<llm_eval::EvalRecord>& records,
                                                const std::vector<llm_eval::TreatmentId>& groups);

struct ResultsInput {
  std::vector<MetricsSummary> metrics;
  std::vector<causal::CorrelationCell> correlations;
  std::vector<causal::EffectCell> effects;
  std::vector<std::string> confounders;
  std::vector<std::string> effect_modifiers;
  std::string distance_outcome = "y_lev_distance";
  std::string similarity_outcome = "y_lev_similarity";
};

/// Rows of the three-block table. Numbers are kept at full precision; the Markdown
/// rendering rounds them.
std::vector<std::vector<std::string>> results_rows(const ResultsInput& in);
/// Throws DataError naming a missing or empty block.
std::string results_csv(const ResultsInput& in);
std::string results_markdown(const ResultsInput& in);

// ---- exploratory figures ---------------------------------------------------

/// Group name to the texts of that group (ground truth or generated code).
using GroupTexts = std::vector<std::pair<std::string, std::vector<std::string>>>;

struct TaxonomyCount {
  std::string group;
  tokenization::TokenClass token_class = tokenization::TokenClass::extraTokens;
  std::int64_t count = 0;
};

std::vector<TaxonomyCount> taxonomy_counts(const GroupTexts& groups, const tokenization::BpeModel& model,
                                           const tokenization::TaxonomyTable& table);
std::string taxonomy_counts_csv(const std::vector<TaxonomyCount>& counts);

struct TokenHistogram {
  std::int64_t bin_width = 1;
  std::vector<std::string> groups;
  std::vector<std::vector<std::int64_t>> counts;  // [group][bin]
};

/// Histogram of BPE tokens per text, on bins shared by all groups.
TokenHistogram token_histogram(const GroupTexts& groups, const tokenization::BpeModel& model, std::size_t bins = 20);

/// sqrt of the Jensen-Shannon divergence with natural logs; bounded by sqrt(ln 2).
double js_distance(const std::vector<double>& p, const std::vector<double>& q);
std::vector<double> normalize(const std::vector<std::int64_t>& counts);

/// group,bin_lo,bin_hi,count,frequency,js_to_reference
std::string token_dist_csv(const TokenHistogram& h, const std::string& reference_group);
/// JS distances and the log convention.
std::string token_dist_metadata(const TokenHistogram& h, const std::string& reference_group);

/// Share of values at or above each threshold 0.00, 0.01, ..., 1.00.
std::vector<double> proportion_curve(const std::vector<double>& similarities, std::size_t steps = 100);
std::string similarity_proportion_csv(const std::vector<std::pair<std::string, std::vector<double>>>& groups,
                                      std::size_t steps = 100);

std::string taxonomy_svg(const std::vector<TaxonomyCount>& counts);
std::string token_dist_svg(const TokenHistogram& h);
std::string proportion_svg(const std::vector<std::pair<std::string, std::vector<double>>>& groups,
                           std::size_t steps = 100);

}  // namespace codecause::report
