#include "duqbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "duqbench/errors.hpp"

namespace duqbench {

namespace {

// sum_{j<k} |x_j - x_k| in O(M log M): after sorting ascending, element i
// is the larger member of i pairs and the smaller of (M-1-i), so it
// contributes x_i * (2i - M + 1).
double pairwise_abs_sum(std::vector<double>& scratch) {
  std::sort(scratch.begin(), scratch.end());
  const int m = static_cast<int>(scratch.size());
  double s = 0.0;
  for (int i = 0; i < m; ++i) s += scratch[i] * (2.0 * i - m + 1.0);
  return s;
}

double crps_impl(double y, std::span<const double> draws, bool fair) {
  const int m = static_cast<int>(draws.size());
  if (m < 2) throw DomainError("CRPS requires at least 2 draws");
  if (!std::isfinite(y)) throw DomainError("CRPS requires finite y");
  double abs_err = 0.0;
  std::vector<double> scratch(draws.begin(), draws.end());
  for (double d : scratch) {
    if (!std::isfinite(d)) throw DomainError("CRPS requires finite draws");
    abs_err += std::fabs(d - y);
  }
  const double pair_sum = pairwise_abs_sum(scratch);
  const double denom = fair ? static_cast<double>(m) * (m - 1)
                            : 2.0 * m * (m - 1);
  return abs_err / m - pair_sum / denom;
}

}  // namespace

double crps_ensemble(double y, std::span<const double> draws) {
  return crps_impl(y, draws, /*fair=*/false);
}

double crps_fair(double y, std::span<const double> draws) {
  return crps_impl(y, draws, /*fair=*/true);
}

double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw DomainError("quantile of empty sample");
  if (prob <= 0.0) return sorted.front();
  if (prob >= 1.0) return sorted.back();
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(h);
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double population_variance(const Eigen::VectorXd& v) {
  if (v.size() == 0) throw DomainError("variance of empty vector");
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(v.size());
}

double population_sd(const Eigen::VectorXd& v) {
  return std::sqrt(population_variance(v));
}

MetricBundle summary_metrics(const Eigen::VectorXd& y_test,
                             const PredictiveEnsemble& ensemble,
                             const ScoreConfig& cfg) {
  const int n = static_cast<int>(y_test.size());
  if (ensemble.num_points() != n) {
    throw DomainError("ensemble has " + std::to_string(ensemble.num_points()) +
                      " columns but y_test has " + std::to_string(n));
  }
  if (ensemble.num_draws() < 2) throw DomainError("ensemble requires M >= 2");
  if (n == 0) throw DomainError("empty test set");

  MetricBundle out;

  const Eigen::VectorXd mean_pred = ensemble.draws.colwise().mean();
  const double mse = (mean_pred - y_test).squaredNorm() / n;
  out.rmse = std::sqrt(mse);
  const double var_y = population_variance(y_test);
  out.fvu = var_y > 0.0 ? mse / var_y
                        : std::numeric_limits<double>::quiet_NaN();

  const int m = ensemble.num_draws();
  std::vector<double> col(m);
  std::vector<double> crps(n);
  const double alpha = cfg.interval_alpha;
  int covered = 0;
  double iscore = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) col[j] = ensemble.draws(j, i);
    crps[i] = cfg.fair_crps ? crps_fair(y_test(i), col)
                            : crps_ensemble(y_test(i), col);
    std::sort(col.begin(), col.end());
    const double lo = quantile_sorted(col, alpha / 2.0);
    const double hi = quantile_sorted(col, 1.0 - alpha / 2.0);
    const double y = y_test(i);
    if (y >= lo && y <= hi) ++covered;
    double s = hi - lo;
    if (y < lo) s += (2.0 / alpha) * (lo - y);
    if (y > hi) s += (2.0 / alpha) * (y - hi);
    iscore += s;
  }
  out.coverage = static_cast<double>(covered) / n;
  out.interval_score = iscore / n;

  std::vector<double> sorted_crps = crps;
  std::sort(sorted_crps.begin(), sorted_crps.end());
  double total = 0.0;
  for (double c : crps) total += c;
  out.crps_mean = total / n;
  out.crps_median = quantile_sorted(sorted_crps, 0.5);
  out.crps_quantiles.reserve(cfg.crps_quantiles.size());
  for (double q : cfg.crps_quantiles) {
    out.crps_quantiles.push_back(quantile_sorted(sorted_crps, q));
  }
  return out;
}

bool rescale_guard_engaged(double ref_sd) { return ref_sd < 1e-12; }

double rescale_to_unit_variance(double score, double ref_sd) {
  if (ref_sd < 0.0) throw DomainError("ref_sd must be nonnegative");
  return rescale_guard_engaged(ref_sd) ? score : score / ref_sd;
}

Eigen::VectorXd rescale_to_unit_variance(const Eigen::VectorXd& scores,
                                         double ref_sd) {
  if (ref_sd < 0.0) throw DomainError("ref_sd must be nonnegative");
  if (rescale_guard_engaged(ref_sd)) return scores;
  return scores / ref_sd;
}

std::map<std::string, double> relative_scores(
    const std::map<std::string, double>& scores_by_method,
    const ScoreConfig& cfg) {
  if (scores_by_method.empty()) {
    throw DomainError("relative_scores of empty map");
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [name, s] : scores_by_method) {
    if (!std::isfinite(s)) throw DomainError("non-finite score for " + name);
    best = std::min(best, s);
  }
  std::map<std::string, double> out;
  for (const auto& [name, s] : scores_by_method) {
    out[name] = std::min(cfg.cap, (s + cfg.epsilon) / (best + cfg.epsilon));
  }
  return out;
}

}  // namespace duqbench
