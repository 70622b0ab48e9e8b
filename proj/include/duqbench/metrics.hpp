#pragma once

#include <Eigen/Dense>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace duqbench {

// M x n_test matrix of predictive draws from a fitted emulator; row j holds
// the j-th draw at every test point. M >= 2 (the CRPS pairwise term needs it).
struct PredictiveEnsemble {
  Eigen::MatrixXd draws;

  int num_draws() const { return static_cast<int>(draws.rows()); }
  int num_points() const { return static_cast<int>(draws.cols()); }
};

struct ScoreConfig {
  double epsilon = 0.001;       // offset for relative scores
  double cap = 100.0;           // cap for relative CRPS
  double interval_alpha = 0.05; // central (1 - alpha) interval
  std::vector<double> crps_quantiles{0.0, 0.25, 0.5, 0.75, 1.0};
  bool fair_crps = false;       // false: pairwise constant 1/(2M(M-1))
                                // true:  fair estimator, 1/(M(M-1))
};

// Sample CRPS with pairwise constant 1/(2M(M-1)):
//   (1/M) sum_j |y_j - y|  -  (1/(2M(M-1))) sum_{j<k} |y_j - y_k|
// computed via the O(M log M) sorted form. Throws DomainError for M < 2 or
// non-finite input.
double crps_ensemble(double y, std::span<const double> draws);

// The unbiased ("fair") variant: pairwise constant 1/(M(M-1)).
double crps_fair(double y, std::span<const double> draws);

struct MetricBundle {
  double rmse = 0.0;            // over the ensemble-mean prediction
  double fvu = 0.0;             // MSE / population variance of y_test (NaN if undefined)
  double crps_mean = 0.0;
  double crps_median = 0.0;
  std::vector<double> crps_quantiles;  // at ScoreConfig::crps_quantiles
  double coverage = 0.0;        // fraction inside the central (1-alpha) interval
  double interval_score = 0.0;
};

MetricBundle summary_metrics(const Eigen::VectorXd& y_test,
                             const PredictiveEnsemble& ensemble,
                             const ScoreConfig& cfg);

// Scores divided by ref_sd, with a constant-response guard: if ref_sd is
// below 1e-12 the divisor is 1 and the scores pass through unchanged.
Eigen::VectorXd rescale_to_unit_variance(const Eigen::VectorXd& scores,
                                         double ref_sd);
double rescale_to_unit_variance(double score, double ref_sd);
bool rescale_guard_engaged(double ref_sd);

// Per-scenario relative scores min(cap, (s_m + eps) / (s* + eps)) with s* the
// minimum over methods. Throws DomainError on an empty map.
std::map<std::string, double> relative_scores(
    const std::map<std::string, double>& scores_by_method,
    const ScoreConfig& cfg);

// Quantile of a sorted sample with linear interpolation between order
// statistics (R type 7): h = (n-1)p, q = x[h0] + (h-h0)(x[h0+1]-x[h0]).
double quantile_sorted(std::span<const double> sorted, double prob);

double population_variance(const Eigen::VectorXd& v);
double population_sd(const Eigen::VectorXd& v);

}  // namespace duqbench
