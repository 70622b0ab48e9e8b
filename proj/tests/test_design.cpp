#include "duqbench/design.hpp"

#include <algorithm>
#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <sstream>
#include <vector>

#include "duqbench/errors.hpp"
#include "duqbench/rng.hpp"

using namespace duqbench;

namespace {

// Each column must hold exactly one point per stratum [i/n, (i+1)/n).
bool lhs_property(const Eigen::MatrixXd& x) {
  const int n = static_cast<int>(x.rows());
  for (int c = 0; c < x.cols(); ++c) {
    std::vector<int> counts(n, 0);
    for (int i = 0; i < n; ++i) {
      const double v = x(i, c);
      if (v < 0.0 || v >= 1.0) return false;
      counts[static_cast<int>(v * n)]++;
    }
    if (std::any_of(counts.begin(), counts.end(),
                    [](int k) { return k != 1; }))
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("rng reference stream and inverse normal") {
  // AS241 spot checks against published quantiles.
  CHECK(Rng::inverse_normal_cdf(0.5) == 0.0);
  CHECK_THAT(Rng::inverse_normal_cdf(0.975),
             Catch::Matchers::WithinAbs(1.959963984540054, 1e-12));
  CHECK_THAT(Rng::inverse_normal_cdf(0.001),
             Catch::Matchers::WithinAbs(-3.090232306167814, 1e-12));

  // Moments of the normal substream.
  Rng rng(42);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK_THAT(sum / n, Catch::Matchers::WithinAbs(0.0, 0.01));
  CHECK_THAT(sq / n, Catch::Matchers::WithinAbs(1.0, 0.02));

  // Gamma mean/variance (shape 2.5): mean = 2.5, var = 2.5.
  Rng rg(7);
  sum = 0.0; sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rg.gamma(2.5);
    sum += g;
    sq += g * g;
  }
  const double mean = sum / n;
  CHECK_THAT(mean, Catch::Matchers::WithinAbs(2.5, 0.02));
  CHECK_THAT(sq / n - mean * mean, Catch::Matchers::WithinAbs(2.5, 0.1));
}

TEST_CASE("lhs satisfies the stratum property") {
  auto d = lhs(4, 1, 11);
  std::vector<double> col(d.points.col(0).data(), d.points.col(0).data() + 4);
  std::sort(col.begin(), col.end());
  for (int i = 0; i < 4; ++i) {
    CHECK(col[i] >= i / 4.0);
    CHECK(col[i] < (i + 1) / 4.0);
  }

  auto d2 = lhs(2, 1, 3);
  const double a = d2.points(0, 0), b = d2.points(1, 0);
  CHECK(((a < 0.5 && b >= 0.5) || (a >= 0.5 && b < 0.5)));

  // property over assorted shapes and seeds
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(40));
    const int p = 1 + static_cast<int>(rng.below(6));
    CHECK(lhs_property(lhs(n, p, rng.next_u64()).points));
  }
}

TEST_CASE("designs are deterministic in the seed") {
  auto a = lhs(17, 3, 1234567);
  auto b = lhs(17, 3, 1234567);
  CHECK(a.points == b.points);
  auto c = lhs(17, 3, 1234568);
  CHECK(a.points != c.points);

  auto u1 = uniform_design(9, 4, 55);
  auto u2 = uniform_design(9, 4, 55);
  CHECK(u1.points == u2.points);

  auto m1 = maximin_lhs(20, 2, 99, 500);
  auto m2 = maximin_lhs(20, 2, 99, 500);
  CHECK(m1.points == m2.points);
}

TEST_CASE("maximin with zero iterations equals plain lhs") {
  auto a = lhs(12, 3, 77);
  auto b = maximin_lhs(12, 3, 77, 0);
  CHECK(a.points == b.points);
}

TEST_CASE("maximin never decreases the minimum pairwise distance") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 42ULL, 123ULL}) {
    auto base = lhs(25, 2, seed);
    auto opt = maximin_lhs(25, 2, seed, 1000);
    CHECK(min_pairwise_distance(opt.points) >=
          min_pairwise_distance(base.points));
    CHECK(lhs_property(opt.points));
  }
}

TEST_CASE("uniform design columns have the right mean") {
  auto d = uniform_design(10000, 1, 2024);
  CHECK(d.points.minCoeff() >= 0.0);
  CHECK(d.points.maxCoeff() <= 1.0);
  CHECK_THAT(d.points.col(0).mean(), Catch::Matchers::WithinAbs(0.5, 0.02));
}

TEST_CASE("degenerate design arguments are rejected") {
  CHECK_THROWS_AS(lhs(0, 1, 1), DomainError);
  CHECK_THROWS_AS(lhs(1, 0, 1), DomainError);
  CHECK_THROWS_AS(uniform_design(0, 2, 1), DomainError);
  CHECK_THROWS_AS(maximin_lhs(3, 1, 1, -1), DomainError);
}

TEST_CASE("design CSV header and shape") {
  auto d = lhs(3, 2, 5);
  std::ostringstream os;
  write_design_csv(d, os);
  const std::string s = os.str();
  CHECK(s.rfind("x1,x2\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 4);
}
