#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "duqbench/harness.hpp"
#include "duqbench/metrics.hpp"

namespace duqbench {

// Cumulative rank curve of one method: proportions[r-1] is the fraction of
// scenarios in which the method ranked <= r by mean CRPS (competition
// ranking, ties share the smaller rank).
struct RankCurve {
  std::string method;
  std::vector<double> proportions;  // indexed r = 1..K
  double auc = 0.0;                 // average of proportions
};

// Per scenario, methods are ranked by the CRPS column ascending; output is
// sorted by auc descending. Throws on an empty table or a scenario with
// fewer than two methods.
std::vector<RankCurve> cumulative_ranks(const ResultTable& t);

// function x method matrix of mean-over-replications of the CRPS_median
// column. `display` is clamped to [floor, ceil]; `raw` keeps the unclamped
// values. Missing cells are NaN. Methods are ordered by their cross-function
// average ascending.
struct HeatmapMatrix {
  std::vector<std::string> functions;  // row labels, lexicographic
  std::vector<std::string> methods;    // column labels, sorted by column mean
  Eigen::MatrixXd raw;
  Eigen::MatrixXd display;
  double floor_value = 0.001;
  double ceil_value = 1.0;
};
HeatmapMatrix heatmap_matrix(const ResultTable& t, double floor_value = 0.001,
                             double ceil_value = 1.0);

struct ParetoPoint {
  std::string method;
  double avg_rel_crps = 0.0;     // in [1, cap]
  double avg_rel_runtime = 0.0;  // >= 1, uncapped
  bool dominated = false;
};

// Per scenario: relative CRPS min(cap, (s+eps)/(s*+eps)) and relative runtime
// (t_tot+eps)/(min t_tot+eps); averaged per method across scenarios, then
// marked for Pareto dominance. Sorted by avg_rel_runtime ascending.
std::vector<ParetoPoint> pareto_frontier(const ResultTable& t,
                                         const ScoreConfig& cfg);

enum class ClusterAxis { methods, problems };

struct ClusterResult {
  std::vector<std::string> items;
  Eigen::MatrixXd coords;       // items x 2 embedding
  std::vector<int> labels;      // DBSCAN cluster ids, noise = -1
  Eigen::MatrixXd distances;    // rank-based distance matrix
  double eps = 0.0;             // DBSCAN radius actually used
};

// Rank-based performance clustering: per-item vectors of competition ranks
// (methods ranked within each problem by mean CRPS), pairwise distance
// 1 - Spearman over jointly observed entries, classical MDS to 2-D, DBSCAN
// with eps = median 4th-nearest-neighbor distance and minPts = 3.
ClusterResult cluster_performance(const ResultTable& t, ClusterAxis axis,
                                  int min_pts = 3);

// Building blocks, exposed for verification.
Eigen::MatrixXd classical_mds(const Eigen::MatrixXd& distances, int dims);
std::vector<int> dbscan(const Eigen::MatrixXd& points, double eps,
                        int min_pts);
// 1 - Spearman correlation over coordinates where both vectors are finite;
// NaN marks a missing observation.
double spearman_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Artifact writers (CSV plus an SVG sibling with the same basename).
void write_rank_artifacts(const std::vector<RankCurve>& curves,
                          const std::string& basename);
void write_heatmap_artifacts(const HeatmapMatrix& hm,
                             const std::string& basename);
void write_pareto_artifacts(const std::vector<ParetoPoint>& points,
                            const std::string& basename);
void write_cluster_artifacts(const ClusterResult& cr,
                             const std::string& basename);

}  // namespace duqbench
