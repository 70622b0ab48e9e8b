#include "duqbench/analysis.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <filesystem>

#include "duqbench/errors.hpp"
#include "duqbench/rng.hpp"

using namespace duqbench;

namespace {

ResultRow synth_row(const std::string& method, const std::string& fname,
                    int rep, double crps, double t_tot = 1.0,
                    double crps_median = -1.0) {
  ResultRow r;
  r.kind = ScenarioKind::synthetic;
  r.method = method;
  r.name = fname;
  r.n_train = 100;
  r.nsr = 0.0;
  r.design_type = "LHS";
  r.replication = rep;
  r.crps = crps;
  r.crps_median = crps_median < 0 ? crps : crps_median;
  r.t_fit = t_tot / 2;
  r.t_pred = t_tot / 2;
  r.t_tot = t_tot;
  return r;
}

ResultTable make_table(std::vector<ResultRow> rows) {
  ResultTable t;
  t.kind = ScenarioKind::synthetic;
  t.rows = std::move(rows);
  return t;
}

// O(K^2) brute-force dominance oracle
std::vector<bool> brute_force_dominated(const std::vector<ParetoPoint>& pts) {
  std::vector<bool> out(pts.size(), false);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (i == j) continue;
      const bool leq = pts[j].avg_rel_crps <= pts[i].avg_rel_crps &&
                       pts[j].avg_rel_runtime <= pts[i].avg_rel_runtime;
      const bool lt = pts[j].avg_rel_crps < pts[i].avg_rel_crps ||
                      pts[j].avg_rel_runtime < pts[i].avg_rel_runtime;
      if (leq && lt) out[i] = true;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("rank curves for hand-ranked tables") {
  // two methods, one scenario: CRPS 0.1 vs 0.2 -> curves (1,1) and (0,1)
  auto t = make_table({synth_row("a", "f", 1, 0.1), synth_row("b", "f", 1, 0.2)});
  auto curves = cumulative_ranks(t);
  REQUIRE(curves.size() == 2);
  CHECK(curves[0].method == "a");
  CHECK(curves[0].proportions == std::vector<double>{1.0, 1.0});
  CHECK(curves[1].proportions == std::vector<double>{0.0, 1.0});
  CHECK(curves[0].auc == 1.0);
  CHECK(curves[1].auc == 0.5);

  // a method winning every scenario has proportions all 1
  auto t2 = make_table({
      synth_row("win", "f", 1, 0.1), synth_row("mid", "f", 1, 0.2),
      synth_row("lose", "f", 1, 0.3), synth_row("win", "f", 2, 0.1),
      synth_row("mid", "f", 2, 0.4), synth_row("lose", "f", 2, 0.9),
  });
  auto c2 = cumulative_ranks(t2);
  CHECK(c2[0].method == "win");
  for (double p : c2[0].proportions) CHECK(p == 1.0);
  // last everywhere: (0, ..., 0, 1)
  CHECK(c2[2].method == "lose");
  CHECK(c2[2].proportions == std::vector<double>{0.0, 0.0, 1.0});

  CHECK_THROWS_AS(cumulative_ranks(make_table({})), DomainError);
  CHECK_THROWS_AS(cumulative_ranks(make_table({synth_row("a", "f", 1, 0.1)})),
                  DomainError);
}

TEST_CASE("rank curve monotonicity and terminal value on random tables") {
  Rng rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ResultRow> rows;
    const int K = 3 + static_cast<int>(rng.below(4));
    const int S = 2 + static_cast<int>(rng.below(5));
    for (int s = 0; s < S; ++s) {
      for (int m = 0; m < K; ++m) {
        rows.push_back(synth_row("m" + std::to_string(m), "f", s + 1,
                                 rng.uniform()));
      }
    }
    auto curves = cumulative_ranks(make_table(rows));
    for (const auto& c : curves) {
      for (std::size_t r = 1; r < c.proportions.size(); ++r) {
        CHECK(c.proportions[r] >= c.proportions[r - 1]);
      }
      CHECK(c.proportions.back() == 1.0);  // fully participating methods
    }
    // auc ordering equals average-rank ordering
    for (std::size_t i = 1; i < curves.size(); ++i) {
      CHECK(curves[i - 1].auc >= curves[i].auc);
    }
  }
}

TEST_CASE("tied winners all count toward top-1") {
  auto t = make_table({synth_row("a", "f", 1, 0.5), synth_row("b", "f", 1, 0.5),
                       synth_row("c", "f", 1, 0.9)});
  auto curves = cumulative_ranks(t);
  int top1_winners = 0;
  for (const auto& c : curves) {
    if (c.proportions[0] == 1.0) ++top1_winners;
  }
  CHECK(top1_winners == 2);
}

TEST_CASE("heatmap cells, clamping, and column order") {
  // raw below the floor clamps for display but is preserved raw
  auto t = make_table({
      synth_row("fast", "f1", 1, 0.1, 1.0, 1e-5),
      synth_row("slow", "f1", 1, 0.2, 1.0, 0.5),
      synth_row("fast", "f1", 2, 0.1, 1.0, 3e-5),
      synth_row("slow", "f1", 2, 0.2, 1.0, 0.7),
      synth_row("fast", "f2", 1, 0.1, 1.0, 2.5),
      synth_row("slow", "f2", 1, 0.2, 1.0, 0.9),
  });
  auto hm = heatmap_matrix(t);
  REQUIRE(hm.functions == std::vector<std::string>{"f1", "f2"});
  // column averages: fast = (2e-5 + 2.5)/2 = 1.25001e0? vs slow (0.6+0.9)/2=0.75
  REQUIRE(hm.methods == std::vector<std::string>{"slow", "fast"});
  const int fast = 1, slow = 0;
  CHECK_THAT(hm.raw(0, fast), Catch::Matchers::WithinRel(2e-5, 1e-12));
  CHECK(hm.display(0, fast) == 0.001);  // clamped to the floor
  CHECK_THAT(hm.raw(0, slow), Catch::Matchers::WithinRel(0.6, 1e-12));
  CHECK(hm.display(1, fast) == 1.0);  // 2.5 clamps to the ceiling
  // single replication: cell equals that replication's median CRPS
  CHECK_THAT(hm.raw(1, slow), Catch::Matchers::WithinRel(0.9, 1e-12));

  // absent pair is NaN
  auto t2 = make_table({
      synth_row("a", "f1", 1, 0.1), synth_row("b", "f1", 1, 0.2),
      synth_row("a", "f2", 1, 0.3),
  });
  auto hm2 = heatmap_matrix(t2);
  const int bj = hm2.methods[0] == "b" ? 0 : 1;
  CHECK(std::isnan(hm2.raw(1, bj)));
  CHECK(std::isnan(hm2.display(1, bj)));
}

TEST_CASE("pareto frontier basics") {
  ScoreConfig cfg;
  // strictly best in both -> sole frontier member
  auto t = make_table({
      synth_row("best", "f", 1, 0.1, 1.0),
      synth_row("meh", "f", 1, 0.2, 2.0),
      synth_row("bad", "f", 1, 0.5, 5.0),
  });
  auto pts = pareto_frontier(t, cfg);
  REQUIRE(pts.size() == 3);
  int frontier = 0;
  for (const auto& p : pts) {
    if (!p.dominated) {
      ++frontier;
      CHECK(p.method == "best");
    }
  }
  CHECK(frontier == 1);
  // the best method's relative CRPS is exactly 1
  CHECK(pts[0].avg_rel_crps == 1.0);

  // swapped coordinates -> both non-dominated
  auto t2 = make_table({
      synth_row("fast_bad", "f", 1, 0.9, 0.5),
      synth_row("slow_good", "f", 1, 0.1, 7.0),
  });
  for (const auto& p : pareto_frontier(t2, cfg)) CHECK_FALSE(p.dominated);

  // positive t_tot required
  auto t3 = make_table({synth_row("a", "f", 1, 0.1, 0.0)});
  CHECK_THROWS_AS(pareto_frontier(t3, cfg), DomainError);
}

TEST_CASE("pareto frontier equals brute force on randomized tables") {
  ScoreConfig cfg;
  Rng rng(2025);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ResultRow> rows;
    const int K = 2 + static_cast<int>(rng.below(6));
    const int S = 1 + static_cast<int>(rng.below(6));
    for (int s = 0; s < S; ++s) {
      for (int m = 0; m < K; ++m) {
        rows.push_back(synth_row("m" + std::to_string(m), "f", s + 1,
                                 rng.uniform(), 0.01 + rng.uniform()));
      }
    }
    auto pts = pareto_frontier(make_table(rows), cfg);
    auto oracle = brute_force_dominated(pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      CHECK(pts[i].dominated == oracle[i]);
    }
    for (const auto& p : pts) {
      CHECK(p.avg_rel_crps >= 1.0);
      CHECK(p.avg_rel_crps <= cfg.cap);
      CHECK(p.avg_rel_runtime >= 1.0);
    }
  }
}

TEST_CASE("pareto dominance is invariant under monotone transforms") {
  ScoreConfig cfg;
  Rng rng(77);
  std::vector<ResultRow> rows;
  for (int m = 0; m < 5; ++m) {
    rows.push_back(synth_row("m" + std::to_string(m), "f", 1, rng.uniform(),
                             0.01 + rng.uniform()));
  }
  auto pts = pareto_frontier(make_table(rows), cfg);
  // apply a strictly monotone map to both coordinates of every method
  auto mapped = pts;
  for (auto& p : mapped) {
    p.avg_rel_crps = std::exp(p.avg_rel_crps);
    p.avg_rel_runtime = std::sqrt(p.avg_rel_runtime);
  }
  auto before = brute_force_dominated(pts);
  auto after = brute_force_dominated(mapped);
  CHECK(before == after);
}

TEST_CASE("classical MDS reproduces Euclidean-embeddable distances") {
  // equilateral triangle
  Eigen::MatrixXd D(3, 3);
  D << 0, 1, 1,
       1, 0, 1,
       1, 1, 0;
  auto coords = classical_mds(D, 2);
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      CHECK_THAT((coords.row(i) - coords.row(j)).norm(),
                 Catch::Matchers::WithinAbs(1.0, 1e-6));
    }
  }

  // random 2-D point sets: embedding must reproduce distances to 1e-8
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 4 + static_cast<int>(rng.below(8));
    Eigen::MatrixXd pts(n, 2);
    for (int i = 0; i < n; ++i) {
      pts(i, 0) = rng.uniform() * 4.0;
      pts(i, 1) = rng.uniform() * 4.0;
    }
    Eigen::MatrixXd dist(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        dist(i, j) = (pts.row(i) - pts.row(j)).norm();
    auto emb = classical_mds(dist, 2);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        CHECK_THAT((emb.row(i) - emb.row(j)).norm(),
                   Catch::Matchers::WithinAbs(dist(i, j), 1e-8));
      }
    }
  }
}

TEST_CASE("spearman distance") {
  Eigen::VectorXd a(4), b(4), c(4), k(4);
  a << 1, 2, 3, 4;
  b << 10, 20, 30, 40;   // same order
  c << 4, 3, 2, 1;       // reversed
  k << 7, 7, 7, 7;       // constant
  CHECK_THAT(spearman_distance(a, b), Catch::Matchers::WithinAbs(0.0, 1e-12));
  CHECK_THAT(spearman_distance(a, c), Catch::Matchers::WithinAbs(2.0, 1e-12));
  CHECK(spearman_distance(a, k) == 1.0);
  CHECK(spearman_distance(k, k) == 0.0);

  // missing entries: only jointly observed coordinates count
  Eigen::VectorXd m1(4), m2(4);
  m1 << 1, 2, std::nan(""), 4;
  m2 << 2, 4, 9, 8;
  CHECK_THAT(spearman_distance(m1, m2), Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("dbscan splits well-separated blobs and flags noise") {
  Eigen::MatrixXd pts(7, 2);
  pts << 0.0, 0.0,
         0.1, 0.0,
         0.0, 0.1,
         5.0, 5.0,
         5.1, 5.0,
         5.0, 5.1,
         99.0, 99.0;
  auto labels = dbscan(pts, 0.5, 3);
  CHECK(labels[0] == labels[1]);
  CHECK(labels[1] == labels[2]);
  CHECK(labels[3] == labels[4]);
  CHECK(labels[4] == labels[5]);
  CHECK(labels[0] != labels[3]);
  CHECK(labels[6] == -1);
}

TEST_CASE("cluster_performance duplicate method lands at distance zero") {
  Rng rng(31);
  std::vector<ResultRow> rows;
  for (int f = 0; f < 6; ++f) {
    const std::string fname = "f" + std::to_string(f);
    for (int m = 0; m < 4; ++m) {
      const double crps = rng.uniform();
      rows.push_back(synth_row("m" + std::to_string(m), fname, 1, crps));
      if (m == 2) {
        auto dup = synth_row("m2_copy", fname, 1, crps);
        rows.push_back(dup);
      }
    }
  }
  auto cr = cluster_performance(make_table(rows), ClusterAxis::methods);
  int i2 = -1, icopy = -1;
  for (std::size_t i = 0; i < cr.items.size(); ++i) {
    if (cr.items[i] == "m2") i2 = static_cast<int>(i);
    if (cr.items[i] == "m2_copy") icopy = static_cast<int>(i);
  }
  REQUIRE(i2 >= 0);
  REQUIRE(icopy >= 0);
  CHECK(cr.distances(i2, icopy) < 1e-12);
  CHECK((cr.coords.row(i2) - cr.coords.row(icopy)).norm() < 1e-8);
  CHECK(cr.labels[i2] == cr.labels[icopy]);
}

TEST_CASE("cluster_performance degenerate all-equal ranks forms one cluster") {
  // every method identical -> all rank vectors equal -> one cluster
  std::vector<ResultRow> rows;
  for (int f = 0; f < 4; ++f) {
    for (int m = 0; m < 4; ++m) {
      rows.push_back(synth_row("m" + std::to_string(m), "f" + std::to_string(f),
                               1, 0.5));
    }
  }
  auto cr = cluster_performance(make_table(rows), ClusterAxis::methods);
  for (int lbl : cr.labels) CHECK(lbl == cr.labels[0]);
  CHECK(cr.labels[0] == 0);

  CHECK_THROWS_AS(
      cluster_performance(make_table({synth_row("a", "f", 1, 0.1),
                                      synth_row("b", "f", 1, 0.2)}),
                          ClusterAxis::methods),
      DomainError);
}

TEST_CASE("cluster_performance problems axis separates inverted problems") {
  // problems g* invert the method ordering of problems f*
  std::vector<ResultRow> rows;
  for (int f = 0; f < 3; ++f) {
    for (int m = 0; m < 5; ++m) {
      rows.push_back(synth_row("m" + std::to_string(m), "f" + std::to_string(f),
                               1, 0.1 * (m + 1)));
      rows.push_back(synth_row("m" + std::to_string(m), "g" + std::to_string(f),
                               1, 0.1 * (5 - m)));
    }
  }
  auto cr = cluster_performance(make_table(rows), ClusterAxis::problems);
  REQUIRE(cr.items.size() == 6);
  for (std::size_t i = 0; i < cr.items.size(); ++i) {
    for (std::size_t j = 0; j < cr.items.size(); ++j) {
      if (i == j) continue;
      const bool same_family = cr.items[i][0] == cr.items[j][0];
      if (same_family) {
        CHECK(cr.distances(i, j) < 1e-9);
      } else {
        CHECK_THAT(cr.distances(i, j), Catch::Matchers::WithinAbs(2.0, 1e-9));
      }
    }
  }
}

TEST_CASE("artifact writers emit CSV and SVG siblings") {
  namespace fs = std::filesystem;
  const std::string dir = "/tmp/duqbench_artifacts_test";
  fs::create_directories(dir);

  auto t = make_table({
      synth_row("alpha", "f1", 1, 0.1, 0.5), synth_row("beta", "f1", 1, 0.2, 1.5),
      synth_row("alpha", "f2", 1, 0.4, 0.5), synth_row("beta", "f2", 1, 0.3, 1.5),
      synth_row("gamma", "f1", 1, 0.6, 0.1), synth_row("gamma", "f2", 1, 0.5, 0.1),
  });
  write_rank_artifacts(cumulative_ranks(t), dir + "/rank");
  write_heatmap_artifacts(heatmap_matrix(t), dir + "/heatmap");
  write_pareto_artifacts(pareto_frontier(t, ScoreConfig{}), dir + "/pareto");
  write_cluster_artifacts(cluster_performance(t, ClusterAxis::methods),
                          dir + "/clusters");
  for (const char* base : {"rank", "heatmap", "pareto", "clusters"}) {
    CHECK(fs::exists(dir + "/" + std::string(base) + ".csv"));
    CHECK(fs::exists(dir + "/" + std::string(base) + ".svg"));
    CHECK(fs::file_size(dir + "/" + std::string(base) + ".svg") > 200);
  }
  fs::remove_all(dir);
}
