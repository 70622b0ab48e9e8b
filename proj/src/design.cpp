#include "duqbench/design.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <vector>

#include "duqbench/errors.hpp"
#include "duqbench/rng.hpp"
#include "duqbench/seeding.hpp"

namespace duqbench {

std::string to_string(DesignType t) {
  switch (t) {
    case DesignType::LHS: return "LHS";
    case DesignType::maximin_LHS: return "maximin_LHS";
    case DesignType::uniform: return "uniform";
  }
  throw DomainError("bad DesignType");
}

DesignType design_type_from_string(const std::string& s) {
  if (s == "LHS") return DesignType::LHS;
  if (s == "maximin_LHS") return DesignType::maximin_LHS;
  if (s == "uniform") return DesignType::uniform;
  throw DomainError("unknown design_type: '" + s + "'");
}

namespace {

void check_dims(int n, int p) {
  if (n < 1 || p < 1) throw DomainError("design requires n >= 1 and p >= 1");
}

// Stream order per column: n jitters, then a Fisher-Yates permutation.
void fill_lhs(Eigen::MatrixXd& x, Rng& rng) {
  const int n = static_cast<int>(x.rows());
  const int p = static_cast<int>(x.cols());
  std::vector<int> perm(n);
  for (int c = 0; c < p; ++c) {
    for (int i = 0; i < n; ++i) {
      x(i, c) = (static_cast<double>(i) + rng.uniform()) / n;
    }
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
      std::swap(perm[i], perm[j]);
    }
    Eigen::VectorXd col = x.col(c);
    for (int i = 0; i < n; ++i) x(i, c) = col(perm[i]);
  }
}

double sq_dist(const Eigen::MatrixXd& x, int i, int j) {
  return (x.row(i) - x.row(j)).squaredNorm();
}

}  // namespace

DesignMatrix lhs(int n, int p, std::uint64_t seed) {
  check_dims(n, p);
  DesignMatrix d;
  d.points.resize(n, p);
  d.design_type = DesignType::LHS;
  d.seed = seed;
  Rng rng(seed);
  fill_lhs(d.points, rng);
  return d;
}

DesignMatrix maximin_lhs(int n, int p, std::uint64_t seed, int iters) {
  check_dims(n, p);
  if (iters < 0) throw DomainError("maximin_lhs requires iters >= 0");
  DesignMatrix d;
  d.points.resize(n, p);
  d.design_type = DesignType::maximin_LHS;
  d.seed = seed;
  Rng rng(seed);
  fill_lhs(d.points, rng);
  if (n < 2) {
    // nothing to optimize, but keep the stream position defined
    for (int t = 0; t < iters; ++t) { rng.below(p); rng.below(n); rng.below(n); }
    return d;
  }

  Eigen::MatrixXd& x = d.points;
  // Full squared-distance matrix; kept in sync incrementally.
  Eigen::MatrixXd d2(n, n);
  double gmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    d2(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double v = sq_dist(x, i, j);
      d2(i, j) = v;
      d2(j, i) = v;
      gmin = std::min(gmin, v);
    }
  }

  std::vector<double> new_i(n), new_j(n);
  for (int t = 0; t < iters; ++t) {
    const int c = static_cast<int>(rng.below(p));
    const int i = static_cast<int>(rng.below(n));
    const int j = static_cast<int>(rng.below(n));
    if (i == j) continue;

    const double xi = x(i, c);
    const double xj = x(j, c);
    // Swapping one coordinate only moves points i and j.
    double m_new = std::numeric_limits<double>::infinity();
    double m_old = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
      if (k == i || k == j) continue;
      const double dik = x(k, c) - xi;
      const double djk = x(k, c) - xj;
      new_i[k] = d2(i, k) - dik * dik + djk * djk;
      new_j[k] = d2(j, k) - djk * djk + dik * dik;
      m_new = std::min(m_new, std::min(new_i[k], new_j[k]));
      m_old = std::min(m_old, std::min(d2(i, k), d2(j, k)));
    }
    new_i[j] = d2(i, j);  // distance between i and j is unchanged by the swap
    m_new = std::min(m_new, d2(i, j));
    m_old = std::min(m_old, d2(i, j));

    if (m_new < gmin) continue;  // would decrease the minimum distance

    x(i, c) = xj;
    x(j, c) = xi;
    for (int k = 0; k < n; ++k) {
      if (k == i || k == j) continue;
      d2(i, k) = new_i[k];
      d2(k, i) = new_i[k];
      d2(j, k) = new_j[k];
      d2(k, j) = new_j[k];
    }
    if (m_old <= gmin) {
      // The previous minimum pair may have involved i or j; rescan.
      gmin = std::numeric_limits<double>::infinity();
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) gmin = std::min(gmin, d2(a, b));
    }
  }
  return d;
}

DesignMatrix uniform_design(int n, int p, std::uint64_t seed) {
  check_dims(n, p);
  DesignMatrix d;
  d.points.resize(n, p);
  d.design_type = DesignType::uniform;
  d.seed = seed;
  Rng rng(seed);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) d.points(i, j) = rng.uniform();
  return d;
}

DesignMatrix make_design(DesignType type, int n, int p, std::uint64_t seed) {
  switch (type) {
    case DesignType::LHS: return lhs(n, p, seed);
    case DesignType::maximin_LHS:
      return maximin_lhs(n, p, seed, default_maximin_iters(n));
    case DesignType::uniform: return uniform_design(n, p, seed);
  }
  throw DomainError("bad DesignType");
}

double min_pairwise_distance(const Eigen::MatrixXd& points) {
  const int n = static_cast<int>(points.rows());
  if (n < 2) return std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      best = std::min(best, (points.row(i) - points.row(j)).squaredNorm());
  return std::sqrt(best);
}

void write_design_csv(const DesignMatrix& d, std::ostream& os) {
  const int p = static_cast<int>(d.points.cols());
  for (int j = 0; j < p; ++j) os << (j ? "," : "") << "x" << (j + 1);
  os << "\n";
  for (int i = 0; i < d.points.rows(); ++i) {
    for (int j = 0; j < p; ++j)
      os << (j ? "," : "") << format_double(d.points(i, j));
    os << "\n";
  }
}

}  // namespace duqbench
