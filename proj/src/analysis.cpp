#include "duqbench/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "duqbench/errors.hpp"

namespace duqbench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// scenario key -> method -> CRPS
using ScenarioScores = std::map<std::string, std::map<std::string, double>>;

ScenarioScores scores_by_scenario(const ResultTable& t) {
  ScenarioScores out;
  for (const auto& r : t.rows) {
    out[r.scenario_key()][r.method] = r.crps;
  }
  return out;
}

std::vector<std::string> all_methods(const ResultTable& t) {
  std::set<std::string> s;
  for (const auto& r : t.rows) s.insert(r.method);
  return {s.begin(), s.end()};
}

// competition ("min") rank of each method within one scenario
std::map<std::string, int> competition_ranks(
    const std::map<std::string, double>& scores) {
  std::map<std::string, int> ranks;
  for (const auto& [m, s] : scores) {
    int r = 1;
    for (const auto& [other, s2] : scores) {
      (void)other;
      if (s2 < s) ++r;
    }
    ranks[m] = r;
  }
  return ranks;
}

}  // namespace

std::vector<RankCurve> cumulative_ranks(const ResultTable& t) {
  if (t.rows.empty()) throw DomainError("cumulative_ranks of an empty table");
  const auto scen = scores_by_scenario(t);
  const auto methods = all_methods(t);
  const int K = static_cast<int>(methods.size());
  const int S = static_cast<int>(scen.size());
  for (const auto& [key, scores] : scen) {
    if (scores.size() < 2) {
      throw DomainError("scenario '" + key + "' has fewer than 2 methods");
    }
  }

  std::map<std::string, std::vector<int>> counts;  // method -> count rank <= r
  for (const auto& m : methods) counts[m].assign(K, 0);
  for (const auto& [key, scores] : scen) {
    const auto ranks = competition_ranks(scores);
    for (const auto& [m, r] : ranks) {
      for (int q = r; q <= K; ++q) counts[m][q - 1]++;
    }
  }

  std::vector<RankCurve> out;
  for (const auto& m : methods) {
    RankCurve c;
    c.method = m;
    c.proportions.resize(K);
    double acc = 0.0;
    for (int r = 0; r < K; ++r) {
      c.proportions[r] = static_cast<double>(counts[m][r]) / S;
      acc += c.proportions[r];
    }
    c.auc = acc / K;
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const RankCurve& a, const RankCurve& b) {
    if (a.auc != b.auc) return a.auc > b.auc;
    return a.method < b.method;
  });
  return out;
}

HeatmapMatrix heatmap_matrix(const ResultTable& t, double floor_value,
                             double ceil_value) {
  HeatmapMatrix hm;
  hm.floor_value = floor_value;
  hm.ceil_value = ceil_value;
  if (t.rows.empty()) return hm;

  std::set<std::string> fn_set;
  for (const auto& r : t.rows) fn_set.insert(r.name);
  hm.functions.assign(fn_set.begin(), fn_set.end());
  const auto methods = all_methods(t);

  // mean over replications of the per-replication median CRPS
  std::map<std::pair<std::string, std::string>, std::pair<double, int>> acc;
  for (const auto& r : t.rows) {
    auto& slot = acc[{r.name, r.method}];
    slot.first += r.crps_median;
    slot.second += 1;
  }

  const int F = static_cast<int>(hm.functions.size());
  const int K = static_cast<int>(methods.size());
  Eigen::MatrixXd raw(F, K);
  raw.setConstant(kNaN);
  for (int i = 0; i < F; ++i) {
    for (int j = 0; j < K; ++j) {
      auto it = acc.find({hm.functions[i], methods[j]});
      if (it != acc.end()) raw(i, j) = it->second.first / it->second.second;
    }
  }

  // column order: cross-function average of raw cells, ascending
  std::vector<int> order(K);
  std::vector<double> col_avg(K, 0.0);
  for (int j = 0; j < K; ++j) {
    order[j] = j;
    double sum = 0.0;
    int cnt = 0;
    for (int i = 0; i < F; ++i) {
      if (std::isfinite(raw(i, j))) {
        sum += raw(i, j);
        ++cnt;
      }
    }
    col_avg[j] = cnt ? sum / cnt : std::numeric_limits<double>::infinity();
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (col_avg[a] != col_avg[b]) return col_avg[a] < col_avg[b];
    return methods[a] < methods[b];
  });

  hm.methods.resize(K);
  hm.raw.resize(F, K);
  hm.display.resize(F, K);
  for (int j = 0; j < K; ++j) {
    hm.methods[j] = methods[order[j]];
    for (int i = 0; i < F; ++i) {
      const double v = raw(i, order[j]);
      hm.raw(i, j) = v;
      hm.display(i, j) = std::isfinite(v)
                             ? std::min(ceil_value, std::max(floor_value, v))
                             : kNaN;
    }
  }
  return hm;
}

std::vector<ParetoPoint> pareto_frontier(const ResultTable& t,
                                         const ScoreConfig& cfg) {
  if (t.rows.empty()) return {};
  for (const auto& r : t.rows) {
    if (!(r.t_tot > 0.0)) {
      throw DomainError("pareto_frontier needs positive t_tot on every row");
    }
  }
  ScenarioScores crps = scores_by_scenario(t);
  ScenarioScores runtime;
  for (const auto& r : t.rows) runtime[r.scenario_key()][r.method] = r.t_tot;

  std::map<std::string, std::pair<double, int>> crps_acc, time_acc;
  for (const auto& [key, scores] : crps) {
    const auto rel = relative_scores(scores, cfg);
    for (const auto& [m, v] : rel) {
      crps_acc[m].first += v;
      crps_acc[m].second += 1;
    }
    const auto& times = runtime[key];
    double tmin = std::numeric_limits<double>::infinity();
    for (const auto& [m, v] : times) tmin = std::min(tmin, v);
    for (const auto& [m, v] : times) {
      time_acc[m].first += (v + cfg.epsilon) / (tmin + cfg.epsilon);
      time_acc[m].second += 1;
    }
  }

  std::vector<ParetoPoint> out;
  for (const auto& [m, a] : crps_acc) {
    ParetoPoint p;
    p.method = m;
    p.avg_rel_crps = a.first / a.second;
    p.avg_rel_runtime = time_acc[m].first / time_acc[m].second;
    out.push_back(p);
  }
  for (auto& p : out) {
    p.dominated = false;
    for (const auto& q : out) {
      if (q.method == p.method) continue;
      const bool leq = q.avg_rel_crps <= p.avg_rel_crps &&
                       q.avg_rel_runtime <= p.avg_rel_runtime;
      const bool lt = q.avg_rel_crps < p.avg_rel_crps ||
                      q.avg_rel_runtime < p.avg_rel_runtime;
      if (leq && lt) {
        p.dominated = true;
        break;
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const ParetoPoint& a,
                                       const ParetoPoint& b) {
    if (a.avg_rel_runtime != b.avg_rel_runtime) {
      return a.avg_rel_runtime < b.avg_rel_runtime;
    }
    return a.method < b.method;
  });
  return out;
}

// --- clustering ----------------------------------------------------------------

namespace {

// fractional (average) ranks, NaN passes through
Eigen::VectorXd fractional_ranks(const Eigen::VectorXd& v) {
  const int n = static_cast<int>(v.size());
  std::vector<int> idx;
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(v(i))) idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return v(a) < v(b); });
  Eigen::VectorXd out = Eigen::VectorXd::Constant(n, kNaN);
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v(idx[j + 1]) == v(idx[i])) ++j;
    const double rank = 0.5 * (i + j) + 1.0;  // average rank, 1-based
    for (std::size_t q = i; q <= j; ++q) out(idx[q]) = rank;
    i = j + 1;
  }
  return out;
}

}  // namespace

double spearman_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  std::vector<int> joint;
  for (int i = 0; i < a.size(); ++i) {
    if (std::isfinite(a(i)) && std::isfinite(b(i))) joint.push_back(i);
  }
  if (joint.size() < 2) return 1.0;  // nothing to correlate
  Eigen::VectorXd av(joint.size()), bv(joint.size());
  for (std::size_t i = 0; i < joint.size(); ++i) {
    av(i) = a(joint[i]);
    bv(i) = b(joint[i]);
  }
  const Eigen::VectorXd ra = fractional_ranks(av);
  const Eigen::VectorXd rb = fractional_ranks(bv);
  const double ma = ra.mean(), mb = rb.mean();
  const Eigen::VectorXd ca = ra.array() - ma, cb = rb.array() - mb;
  const double sa = ca.norm(), sb = cb.norm();
  if (sa < 1e-300 && sb < 1e-300) return 0.0;  // both constant: identical ranks
  if (sa < 1e-300 || sb < 1e-300) return 1.0;  // one constant: no association
  return 1.0 - ca.dot(cb) / (sa * sb);
}

Eigen::MatrixXd classical_mds(const Eigen::MatrixXd& D, int dims) {
  const int n = static_cast<int>(D.rows());
  if (D.cols() != n) throw DomainError("mds: distance matrix must be square");
  Eigen::MatrixXd d2 = D.array().square();
  // double centering: B = -1/2 J d2 J
  Eigen::VectorXd row_mean = d2.rowwise().mean();
  const double total_mean = d2.mean();
  Eigen::MatrixXd B(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      B(i, j) = -0.5 * (d2(i, j) - row_mean(i) - row_mean(j) + total_mean);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(B);
  if (eig.info() != Eigen::Success) throw Error("mds: eigensolver failed");
  Eigen::MatrixXd coords(n, dims);
  coords.setZero();
  // eigenvalues ascending; take the top `dims`
  for (int d = 0; d < dims; ++d) {
    const int col = n - 1 - d;
    if (col < 0) break;
    const double lambda = eig.eigenvalues()(col);
    if (lambda > 0.0) {
      coords.col(d) = eig.eigenvectors().col(col) * std::sqrt(lambda);
    }
  }
  return coords;
}

std::vector<int> dbscan(const Eigen::MatrixXd& points, double eps,
                        int min_pts) {
  const int n = static_cast<int>(points.rows());
  std::vector<std::vector<int>> neighbors(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if ((points.row(i) - points.row(j)).norm() <= eps) {
        neighbors[i].push_back(j);  // includes i itself
      }
    }
  }
  std::vector<int> labels(n, -2);  // -2 unvisited, -1 noise
  int cluster = 0;
  for (int i = 0; i < n; ++i) {
    if (labels[i] != -2) continue;
    if (static_cast<int>(neighbors[i].size()) < min_pts) {
      labels[i] = -1;
      continue;
    }
    labels[i] = cluster;
    std::vector<int> frontier = neighbors[i];
    for (std::size_t q = 0; q < frontier.size(); ++q) {
      const int j = frontier[q];
      if (labels[j] == -1) labels[j] = cluster;  // border point
      if (labels[j] != -2) continue;
      labels[j] = cluster;
      if (static_cast<int>(neighbors[j].size()) >= min_pts) {
        frontier.insert(frontier.end(), neighbors[j].begin(),
                        neighbors[j].end());
      }
    }
    ++cluster;
  }
  return labels;
}

ClusterResult cluster_performance(const ResultTable& t, ClusterAxis axis,
                                  int min_pts) {
  if (t.rows.empty()) throw DomainError("cluster_performance of empty table");

  // problem x method mean CRPS, then competition ranks within each problem
  std::set<std::string> prob_set;
  for (const auto& r : t.rows) prob_set.insert(r.name);
  const std::vector<std::string> problems(prob_set.begin(), prob_set.end());
  const auto methods = all_methods(t);
  const int P = static_cast<int>(problems.size());
  const int K = static_cast<int>(methods.size());

  std::map<std::pair<std::string, std::string>, std::pair<double, int>> acc;
  for (const auto& r : t.rows) {
    auto& slot = acc[{r.name, r.method}];
    slot.first += r.crps;
    slot.second += 1;
  }
  Eigen::MatrixXd rank_mat(P, K);  // rank of method j on problem i
  rank_mat.setConstant(kNaN);
  for (int i = 0; i < P; ++i) {
    std::vector<std::pair<double, int>> vals;
    for (int j = 0; j < K; ++j) {
      auto it = acc.find({problems[i], methods[j]});
      if (it != acc.end()) {
        vals.push_back({it->second.first / it->second.second, j});
      }
    }
    for (const auto& [v, j] : vals) {
      int r = 1;
      for (const auto& [v2, j2] : vals) {
        if (v2 < v) ++r;
      }
      rank_mat(i, j) = r;
    }
  }

  ClusterResult out;
  int n_items;
  if (axis == ClusterAxis::methods) {
    out.items = methods;
    n_items = K;
  } else {
    out.items = problems;
    n_items = P;
  }
  if (n_items < 3) {
    throw DomainError("cluster_performance needs at least 3 items");
  }

  out.distances.resize(n_items, n_items);
  for (int i = 0; i < n_items; ++i) {
    for (int j = 0; j < n_items; ++j) {
      if (i == j) {
        out.distances(i, j) = 0.0;
        continue;
      }
      Eigen::VectorXd a, b;
      if (axis == ClusterAxis::methods) {
        a = rank_mat.col(i);
        b = rank_mat.col(j);
      } else {
        a = rank_mat.row(i).transpose();
        b = rank_mat.row(j).transpose();
      }
      out.distances(i, j) = spearman_distance(a, b);
    }
  }
  // exact symmetry for the eigensolver
  out.distances = 0.5 * (out.distances + out.distances.transpose()).eval();

  out.coords = classical_mds(out.distances, 2);

  // eps: median 4th-nearest-neighbor distance in the embedding
  std::vector<double> knn;
  for (int i = 0; i < n_items; ++i) {
    std::vector<double> d;
    for (int j = 0; j < n_items; ++j) {
      if (j != i) d.push_back((out.coords.row(i) - out.coords.row(j)).norm());
    }
    std::sort(d.begin(), d.end());
    const std::size_t idx = std::min<std::size_t>(3, d.size() - 1);
    knn.push_back(d[idx]);
  }
  std::sort(knn.begin(), knn.end());
  out.eps = quantile_sorted(knn, 0.5);
  out.labels = dbscan(out.coords, out.eps, min_pts);
  return out;
}

}  // namespace duqbench
