#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>

namespace duqbench {

enum class DesignType { LHS, maximin_LHS, uniform };

std::string to_string(DesignType t);
DesignType design_type_from_string(const std::string& s);

// n x p points on the unit hypercube plus provenance. For the LHS types each
// column has exactly one point in each stratum [i/n, (i+1)/n).
struct DesignMatrix {
  Eigen::MatrixXd points;
  DesignType design_type = DesignType::LHS;
  std::uint64_t seed = 0;
};

// Latin hypercube sample: per column, one point uniform in each of the n
// strata, strata assigned to rows by a seeded permutation.
DesignMatrix lhs(int n, int p, std::uint64_t seed);

// Starts from lhs(n, p, seed) and performs `iters` random within-column
// stratum swaps, accepting a swap iff the minimum pairwise Euclidean
// distance does not decrease. iters = 0 returns the plain LHS.
DesignMatrix maximin_lhs(int n, int p, std::uint64_t seed, int iters);

inline int default_maximin_iters(int n) { return 50 * n; }

// i.i.d. uniform entries, row-major fill order.
DesignMatrix uniform_design(int n, int p, std::uint64_t seed);

DesignMatrix make_design(DesignType type, int n, int p, std::uint64_t seed);

double min_pairwise_distance(const Eigen::MatrixXd& points);

// CSV with header x1..xp, one row per point.
void write_design_csv(const DesignMatrix& d, std::ostream& os);

}  // namespace duqbench
