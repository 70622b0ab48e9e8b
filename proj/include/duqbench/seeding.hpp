#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace duqbench {

enum class ScenarioKind { synthetic, dataset };

enum class CvType { cross_validation, bootstrap };

std::string to_string(CvType t);
CvType cv_type_from_string(const std::string& s);

// The complete identity of one benchmark cell. Exactly one of `replication`
// (synthetic) or (`fold`, `cv_type`, `fold_size`) (dataset) is meaningful,
// matching `kind`.
struct Scenario {
  ScenarioKind kind = ScenarioKind::synthetic;
  std::string name;            // fname (synthetic) or dname (dataset)
  int n_train = 0;             // synthetic
  double nsr = 0.0;            // synthetic, noise-to-signal ratio >= 0
  std::string design_type;     // synthetic: LHS | maximin_LHS | uniform
  int replication = 0;         // synthetic, >= 1
  CvType cv_type = CvType::cross_validation;  // dataset
  int fold = 0;                // dataset, >= 1
  int fold_size = 0;           // dataset, >= 1

  static Scenario synthetic(std::string fname, int n_train, double nsr,
                            std::string design_type, int replication);
  static Scenario dataset(std::string dname, CvType cv_type, int fold_size,
                          int fold);
};

// Polynomial hash of the UTF-8 bytes of `s` by Horner's rule:
//   h = sum_i byte_i * B^(L-1-i) mod P,  B = 31,  P = 2^61 - 1.
// These constants are frozen; the result is platform-independent.
std::uint64_t poly_hash(std::string_view s);

// Canonical scenario string.
//   synthetic: fname|n_train|NSR|design_type|rep=<k>
//   dataset:   dname|cv_type|fold_size|fold=<k>
// NSR is rendered as the shortest decimal that round-trips to the same
// double. Throws DomainError on malformed scenarios.
std::string canonical_string(const Scenario& s);

// poly_hash of the canonical string. Identical scenarios always map to the
// same seed regardless of run order or batching.
std::uint64_t scenario_seed(const Scenario& s);

// Substream offsets added to a scenario seed. Independent stochastic stages
// of one scenario must not alias.
inline constexpr std::uint64_t kSeedOffsetDesign = 1;   // training design draw
inline constexpr std::uint64_t kSeedOffsetNoise = 2;    // response noise draw
inline constexpr std::uint64_t kSeedOffsetFit = 3;      // emulator fit
inline constexpr std::uint64_t kSeedOffsetPredict = 4;  // emulator predict

// Shortest round-trip decimal rendering of a double ("0", "0.1", "1e-05"...).
std::string format_double(double x);

// Identifier check shared by function, dataset and method names: nonempty,
// characters from [A-Za-z0-9_.+-] only (keeps canonical strings and CSV
// unambiguous).
bool valid_identifier(std::string_view s);

}  // namespace duqbench
