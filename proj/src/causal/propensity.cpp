#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "codecause/causal.hpp"
#include "codecause/error.hpp"
#include "codecause/util.hpp"

namespace codecause::causal {
namespace {

// Beyond this many log-odds per standard deviation the fit is treating the data as separable.
constexpr double kSeparationCoefficient = 30.0;

double log_likelihood(const Eigen::VectorXd& eta, const Eigen::VectorXd& t) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    // log(1 + exp(eta)) computed without overflow.
    const double softplus = eta[i] > 0 ? eta[i] + std::log1p(std::exp(-eta[i])) : std::log1p(std::exp(eta[i]));
    ll += t[i] * eta[i] - softplus;
  }
  return ll;
}

Eigen::VectorXd sigmoid(const Eigen::VectorXd& eta) {
  Eigen::VectorXd p(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    p[i] = eta[i] >= 0 ? 1.0 / (1.0 + std::exp(-eta[i])) : std::exp(eta[i]) / (1.0 + std::exp(eta[i]));
  }
  return p;
}

}  // namespace

std::vector<std::vector<double>> standardize(const std::vector<std::vector<double>>& columns) {
  std::vector<std::vector<double>> out;
  out.reserve(columns.size());
  for (const auto& col : columns) {
    const double n = static_cast<double>(col.size());
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : col) ss += (v - mean) * (v - mean);
    const double sd = col.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    std::vector<double> z(col.size(), 0.0);
    if (sd > 0.0) {
      for (std::size_t i = 0; i < col.size(); ++i) z[i] = (col[i] - mean) / sd;
    }
    out.push_back(std::move(z));
  }
  return out;
}

PropensityFit fit_propensity(const std::vector<std::vector<double>>& z, const std::vector<double>& t,
                             const EstimatorParams& params) {
  const std::size_t n = t.size();
  if (n == 0) throw DataError("propensity fit on empty data");
  PropensityFit fit;
  for (std::size_t c = 0; c < z.size(); ++c) {
    if (z[c].size() != n) throw DataError("propensity fit: column length differs from treatment length");
    const auto [lo, hi] = std::minmax_element(z[c].begin(), z[c].end());
    if (*lo != *hi) fit.kept_columns.push_back(c);
  }
  std::size_t n_treated = 0;
  for (double v : t) n_treated += v == 1.0 ? 1 : 0;
  if (n_treated == 0 || n_treated == n) {
    throw DataError("propensity fit: only one treatment arm present (perfect separation); trim the data");
  }

  const auto p = static_cast<Eigen::Index>(fit.kept_columns.size() + 1);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), p);
  Eigen::VectorXd tv(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x(r, 0) = 1.0;
    for (std::size_t k = 0; k < fit.kept_columns.size(); ++k) x(r, static_cast<Eigen::Index>(k + 1)) = z[fit.kept_columns[k]][i];
    tv[r] = t[i];
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  // Start the intercept at the marginal log-odds so the intercept-only case converges at once.
  const double frac = static_cast<double>(n_treated) / static_cast<double>(n);
  beta[0] = std::log(frac / (1.0 - frac));
  Eigen::VectorXd eta = x * beta;
  double ll = log_likelihood(eta, tv);
  bool converged = false;
  for (int iter = 0; iter <= params.max_iterations; ++iter) {
    const Eigen::VectorXd mu = sigmoid(eta);
    const Eigen::VectorXd grad = x.transpose() * (tv - mu);
    fit.gradient_norm = grad.norm() / static_cast<double>(n);
    fit.iterations = iter;
    if (fit.gradient_norm <= params.gradient_tolerance) {
      converged = true;
      break;
    }
    if (iter == params.max_iterations) break;
    const Eigen::VectorXd w = mu.array() * (1.0 - mu.array());
    const Eigen::MatrixXd hessian = x.transpose() * w.asDiagonal() * x;
    const Eigen::VectorXd step = hessian.ldlt().solve(grad);
    if (!step.allFinite()) break;
    double scale = 1.0;
    Eigen::VectorXd next = beta + step;
    Eigen::VectorXd next_eta = x * next;
    double next_ll = log_likelihood(next_eta, tv);
    for (int halving = 0; halving < 30 && next_ll < ll; ++halving) {
      scale /= 2.0;
      next = beta + scale * step;
      next_eta = x * next;
      next_ll = log_likelihood(next_eta, tv);
    }
    beta = next;
    eta = next_eta;
    ll = next_ll;
    if ((p > 1 && beta.tail(p - 1).cwiseAbs().maxCoeff() > kSeparationCoefficient) ||
        ll > -1e-9 * static_cast<double>(n)) {
      throw DataError("propensity fit: confounders separate the treatment arms (perfect separation); "
                      "trim extreme records or drop a confounder");
    }
  }
  if (!converged) {
    throw DataError("propensity fit did not converge after " + std::to_string(params.max_iterations) +
                    " iterations (gradient norm " + format_double(fit.gradient_norm) + ")");
  }
  fit.coefficients.assign(beta.data(), beta.data() + beta.size());
  const Eigen::VectorXd mu = sigmoid(eta);
  fit.scores.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    fit.scores[i] = std::clamp(mu[static_cast<Eigen::Index>(i)], params.clip_lo, params.clip_hi);
  }
  return fit;
}

}  // namespace codecause::causal
