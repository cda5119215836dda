#include <algorithm>
#include <cmath>

#include "codecause/csv.hpp"
#include "codecause/error.hpp"
#include "codecause/report.hpp"
#include "codecause/util.hpp"

namespace codecause::report {

using causal::EffectCell;
using causal::Method;
using causal::Refuter;

Stat mean_std(const std::vector<double>& values) {
  if (values.empty()) throw DataError("statistics of an empty series");
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  Stat s;
  s.avg = sum / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.avg) * (v - s.avg);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

const std::vector<std::string>& descriptive_columns() {
  static const std::vector<std::string> cols = {"n_whitespaces", "nloc",        "token_count", "n_ast_errors",
                                                "n_ast_levels",  "n_ast_nodes", "complexity",  "n_identifiers"};
  return cols;
}

DescriptiveRow describe(const testbeds::Testbed& tb) {
  const std::string name(testbeds::name_str(tb.name));
  if (tb.points.empty()) throw DataError("testbed " + name + " is empty");
  DescriptiveRow row;
  row.testbed = name;
  row.size = tb.points.size();
  for (const std::string& col : descriptive_columns()) {
    std::vector<double> values;
    values.reserve(tb.points.size());
    for (const auto& tp : tb.points) values.push_back(*features::feature_value(tp.point.features, col));
    row.stats.push_back(mean_std(values));
  }
  return row;
}

std::string descriptive_csv(const std::vector<DescriptiveRow>& rows) {
  CsvRow header = {"testbed", "size"};
  for (const std::string& c : descriptive_columns()) {
    header.push_back(c + "_avg");
    header.push_back(c + "_std");
  }
  std::string out = csv_line(header);
  for (const DescriptiveRow& r : rows) {
    CsvRow line = {r.testbed, std::to_string(r.size)};
    for (const Stat& s : r.stats) {
      line.push_back(format_fixed(s.avg, 2));
      line.push_back(format_fixed(s.std, 2));
    }
    out += csv_line(line);
  }
  return out;
}

std::vector<DescriptiveRow> parse_descriptive_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  const std::size_t width = 2 + 2 * descriptive_columns().size();
  if (rows.empty() || rows.front().size() != width) throw DataError("descriptive CSV: unexpected header");
  std::vector<DescriptiveRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const CsvRow& row = rows[i];
    if (row.size() != width) throw DataError("descriptive CSV row " + std::to_string(i + 1) + ": wrong width");
    DescriptiveRow r;
    r.testbed = row[0];
    r.size = std::stoull(row[1]);
    for (std::size_t k = 2; k < width; k += 2) r.stats.push_back({parse_double(row[k]), parse_double(row[k + 1])});
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<MetricsSummary> performance_metrics(const std::vector<llm_eval::EvalRecord>& records,
                                                const std::vector<llm_eval::TreatmentId>& groups) {
  std::vector<llm_eval::TreatmentId> order = {llm_eval::TreatmentId::control};
  for (auto g : groups) {
    if (g != llm_eval::TreatmentId::control) order.push_back(g);
  }
  std::vector<MetricsSummary> out;
  for (auto g : order) {
    std::vector<double> bleu;
    std::vector<double> codebleu;
    std::vector<double> sim;
    for (const auto& r : records) {
      if (r.treatment != g) continue;
      bleu.push_back(r.y_bleu);
      codebleu.push_back(r.y_codebleu);
      sim.push_back(r.y_lev_similarity);
    }
    if (sim.empty()) throw DataError("no eval records for group " + std::string(llm_eval::treatment_str(g)));
    MetricsSummary m;
    m.group = std::string(llm_eval::treatment_str(g));
    m.n = sim.size();
    m.bleu = mean_std(bleu).avg;
    m.codebleu = mean_std(codebleu).avg;
    m.similarity = mean_std(sim);
    out.push_back(std::move(m));
  }
  return out;
}

namespace {

constexpr std::string_view kPerformance = "Performance Metrics";
constexpr std::string_view kCorrelations = "Correlations";
constexpr std::string_view kEffects = "Causal Effects";

std::string_view method_label(Method m) {
  switch (m) {
    case Method::matching: return "Score Matching";
    case Method::stratification: return "Stratification";
    case Method::ipw: return "IPW";
  }
  return "";
}

std::string_view refuter_label(Refuter r) {
  switch (r) {
    case Refuter::placebo: return "Placebo";
    case Refuter::random_common_cause: return "RCC";
    case Refuter::subset: return "Subset";
  }
  return "";
}

// Columns: block, section, row, then (dist, sim) per group, then annotation.
struct Layout {
  std::vector<std::string> groups;
  std::size_t width() const { return 4 + 2 * groups.size(); }
  std::size_t dist(std::size_t g) const { return 3 + 2 * g; }
  std::size_t sim(std::size_t g) const { return 4 + 2 * g; }
  std::size_t note() const { return 3 + 2 * groups.size(); }
};

CsvRow blank(const Layout& l, std::string_view block, std::string_view section, std::string_view row) {
  CsvRow r(l.width());
  r[0] = block;
  r[1] = section;
  r[2] = row;
  return r;
}

void annotate(CsvRow& row, std::size_t note, const std::string& text) {
  if (!row[note].empty()) row[note] += ";";
  row[note] += text;
}

const causal::CorrelationCell* find_corr(const std::vector<causal::CorrelationCell>& cells, const std::string& group,
                                         const std::string& variable, const std::string& outcome) {
  for (const auto& c : cells) {
    if (c.group == group && c.variable == variable && c.outcome == outcome) return &c;
  }
  return nullptr;
}

const EffectCell* find_effect(const std::vector<EffectCell>& cells, const std::string& contrast,
                              const std::string& outcome, Method m) {
  for (const auto& c : cells) {
    if (c.contrast == contrast && c.outcome == outcome && c.method == m) return &c;
  }
  return nullptr;
}

std::vector<Method> methods_of(const std::vector<EffectCell>& cells) {
  std::vector<Method> out;
  for (Method m : {Method::matching, Method::stratification, Method::ipw}) {
    if (std::any_of(cells.begin(), cells.end(), [&](const EffectCell& c) { return c.method == m; })) out.push_back(m);
  }
  return out;
}

std::vector<Refuter> refuters_of(const std::vector<EffectCell>& cells) {
  std::vector<Refuter> out;
  for (Refuter r : {Refuter::placebo, Refuter::random_common_cause, Refuter::subset}) {
    const bool present = std::any_of(cells.begin(), cells.end(), [&](const EffectCell& c) {
      return std::any_of(c.refutations.begin(), c.refutations.end(),
                         [&](const causal::RefutationResult& x) { return x.refuter == r; });
    });
    if (present) out.push_back(r);
  }
  return out;
}

const causal::RefutationResult* find_refutation(const EffectCell& c, Refuter r) {
  for (const auto& x : c.refutations) {
    if (x.refuter == r) return &x;
  }
  return nullptr;
}

void check_blocks(const ResultsInput& in) {
  if (in.metrics.empty()) throw DataError("results: the Performance Metrics block is missing");
  if (in.correlations.empty()) throw DataError("results: the Correlations block is missing");
  if (in.effects.empty()) throw DataError("results: the Causal Effects block is missing");
  for (const EffectCell& c : in.effects) {
    if (c.refutations.empty()) {
      throw DataError("results: the Causal Effects block has an empty refutation set (" + c.contrast + ", " + c.outcome +
                      ", " + std::string(causal::method_str(c.method)) + ")");
    }
  }
}

}  // namespace

std::vector<std::vector<std::string>> results_rows(const ResultsInput& in) {
  check_blocks(in);
  Layout l;
  for (const auto& m : in.metrics) l.groups.push_back(m.group);
  std::vector<CsvRow> rows;
  CsvRow header = {"block", "section", "row"};
  for (const auto& g : l.groups) {
    header.push_back(g + " Dist.");
    header.push_back(g + " Sim.%");
  }
  header.push_back("annotation");
  rows.push_back(header);

  CsvRow bleu = blank(l, kPerformance, "Distance", "BLEU");
  CsvRow codebleu = blank(l, kPerformance, "Distance", "CodeBLEU");
  CsvRow sim_avg = blank(l, kPerformance, "Similarity", "Avg. Lev.");
  CsvRow sim_std = blank(l, kPerformance, "Similarity", "Std. Lev.");
  for (std::size_t g = 0; g < l.groups.size(); ++g) {
    bleu[l.dist(g)] = format_double(in.metrics[g].bleu);
    codebleu[l.dist(g)] = format_double(in.metrics[g].codebleu);
    sim_avg[l.sim(g)] = format_double(in.metrics[g].similarity.avg);
    sim_std[l.sim(g)] = format_double(in.metrics[g].similarity.std);
  }
  for (auto* r : {&bleu, &codebleu, &sim_avg, &sim_std}) rows.push_back(*r);

  const std::size_t corr_begin = rows.size();
  for (const auto& [section, vars] : {std::pair{"Confounders", &in.confounders},
                                      std::pair{"Effect Modifiers", &in.effect_modifiers}}) {
    for (const std::string& v : *vars) {
      CsvRow row = blank(l, kCorrelations, section, v);
      for (std::size_t g = 0; g < l.groups.size(); ++g) {
        const auto* d = find_corr(in.correlations, l.groups[g], v, in.distance_outcome);
        const auto* s = find_corr(in.correlations, l.groups[g], v, in.similarity_outcome);
        if (!d || !s) {
          throw DataError("results: the Correlations block lacks " + v + " for group " + l.groups[g]);
        }
        if (d->r) row[l.dist(g)] = format_double(*d->r);
        if (s->r) row[l.sim(g)] = format_double(100.0 * *s->r);
      }
      rows.push_back(std::move(row));
    }
  }
  // Mark the strongest correlation in each column.
  for (std::size_t col = 3; col < l.note(); ++col) {
    std::size_t best = 0;
    double best_abs = -1.0;
    for (std::size_t r = corr_begin; r < rows.size(); ++r) {
      if (rows[r][col].empty()) continue;
      const double v = std::abs(parse_double(rows[r][col]));
      if (v > best_abs) {
        best_abs = v;
        best = r;
      }
    }
    if (best_abs >= 0.0) annotate(rows[best], l.note(), "highest " + header[col]);
  }

  for (Method m : methods_of(in.effects)) {
    CsvRow ate = blank(l, kEffects, method_label(m), "ATE");
    std::vector<CsvRow> refuted;
    const std::vector<Refuter> refuters = refuters_of(in.effects);
    for (Refuter r : refuters) refuted.push_back(blank(l, kEffects, method_label(m), refuter_label(r)));
    for (std::size_t g = 0; g < l.groups.size(); ++g) {
      if (l.groups[g] == "control") {
        ate[l.dist(g)] = ate[l.sim(g)] = "-";
        for (auto& row : refuted) row[l.dist(g)] = row[l.sim(g)] = "-";
        continue;
      }
      for (const auto& [outcome, col, scale] : {std::tuple{in.distance_outcome, l.dist(g), 1.0},
                                                std::tuple{in.similarity_outcome, l.sim(g), 100.0}}) {
        const EffectCell* cell = find_effect(in.effects, l.groups[g], outcome, m);
        if (!cell) {
          throw DataError("results: the Causal Effects block lacks " + std::string(causal::method_str(m)) + " for " +
                          l.groups[g] + " on " + outcome);
        }
        ate[col] = format_double(scale * cell->ate.ate);
        for (std::size_t k = 0; k < refuters.size(); ++k) {
          const auto* x = find_refutation(*cell, refuters[k]);
          if (!x) continue;
          refuted[k][col] = format_double(scale * x->refuted_ate);
          const std::string where = header[col];
          if (refuters[k] == Refuter::placebo && x->stable) annotate(refuted[k], l.note(), "null effect " + where);
          if (refuters[k] != Refuter::placebo && !x->stable) annotate(refuted[k], l.note(), "unstable " + where);
        }
      }
    }
    rows.push_back(std::move(ate));
    for (auto& row : refuted) rows.push_back(std::move(row));
  }
  return rows;
}

std::string results_csv(const ResultsInput& in) {
  std::string out;
  for (const CsvRow& row : results_rows(in)) out += csv_line(row);
  return out;
}

namespace {

std::string md_escape(std::string s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

std::string fmt(const std::string& cell, int decimals, std::string_view suffix = "") {
  if (cell.empty() || cell == "-") return cell.empty() ? "" : "-";
  return format_fixed(parse_double(cell), decimals) + std::string(suffix);
}

}  // namespace

std::string results_markdown(const ResultsInput& in) {
  const auto rows = results_rows(in);
  Layout l;
  for (const auto& m : in.metrics) l.groups.push_back(m.group);
  const CsvRow& header = rows.front();
  std::string out = "| Block | Section | Row |";
  for (std::size_t c = 3; c < l.note(); ++c) out += " " + header[c] + " |";
  out += "\n|---|---|---|";
  for (std::size_t c = 3; c < l.note(); ++c) out += "---:|";
  out += "\n";
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    if (row[2] == "Std. Lev.") continue;
    CsvRow cells(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(l.note()));
    const std::string& note = row[l.note()];
    for (std::size_t c = 3; c < l.note(); ++c) {
      const bool is_sim = (c - 3) % 2 == 1;
      std::string v;
      if (row[0] == kPerformance) {
        if (row[2] == "Avg. Lev.") {
          v = row[c].empty() ? "" : format_fixed(parse_double(row[c]), 2) + "±" + fmt(rows[r + 1][c], 2);
        } else {
          v = fmt(row[c], 3);
        }
      } else if (row[0] == kCorrelations) {
        v = is_sim ? fmt(row[c], 1, "%") : fmt(row[c], 2);
        if (note.find("highest " + header[c]) != std::string::npos) v = "**" + v + "**";
      } else {
        v = is_sim ? fmt(row[c], 1, "%") : fmt(row[c], 2);
        if (note.find("null effect " + header[c]) != std::string::npos) v = "<u>" + v + "</u>";
      }
      cells[c] = v;
    }
    out += "|";
    for (const std::string& c : cells) out += " " + md_escape(c) + " |";
    out += "\n";
  }
  out += "\nbold: highest correlation per column; underline: placebo refutation within tolerance (null effect).\n";
  return out;
}

}  // namespace codecause::report
