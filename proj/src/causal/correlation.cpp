#include <algorithm>
#include <cmath>
#include <numeric>

#include "codecause/causal.hpp"
#include "codecause/error.hpp"

namespace codecause::causal {

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DataError("correlation needs series of equal length");
  if (x.size() < 2) throw DataError("correlation needs at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DataError("correlation undefined for a constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DataError("correlation needs series of equal length");
  return pearson(average_ranks(x), average_ranks(y));
}

double correlation(const std::vector<double>& x, const std::vector<double>& y, CorrelationKind kind) {
  return kind == CorrelationKind::spearman ? spearman(x, y) : pearson(x, y);
}

std::vector<ScreenedCandidate> screen_confounders(const std::vector<Dataset>& groups,
                                                  const std::vector<std::string>& candidates,
                                                  const std::string& outcome, double lo, double hi,
                                                  CorrelationKind kind) {
  if (groups.empty()) throw DataError("screening needs at least one group");
  std::vector<ScreenedCandidate> out;
  for (const std::string& name : candidates) {
    ScreenedCandidate c{name, 1.0, {}};
    bool keep = true;
    for (const Dataset& g : groups) {
      double r;
      try {
        r = correlation(g.column(name), g.column(outcome), kind);
      } catch (const DataError&) {
        keep = false;
        break;
      }
      c.r.push_back(r);
      c.min_abs_r = std::min(c.min_abs_r, std::abs(r));
      if (std::abs(r) < lo || std::abs(r) > hi) keep = false;
    }
    if (keep) out.push_back(std::move(c));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ScreenedCandidate& a, const ScreenedCandidate& b) { return a.min_abs_r > b.min_abs_r; });
  return out;
}

}  // namespace codecause::causal
