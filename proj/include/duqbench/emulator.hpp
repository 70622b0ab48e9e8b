#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "duqbench/metrics.hpp"

namespace duqbench {

using HyperValue = std::variant<double, std::string>;

// Identifies a (possibly tuned) emulator. `variant_label`, when nonempty, is
// appended to the method name in result tables so tuning variants can be
// joined as new emulators.
struct EmulatorSpec {
  std::string method;
  std::map<std::string, HyperValue> hyperparameters;
  std::string variant_label;

  std::string result_label() const {
    return variant_label.empty() ? method : method + "_" + variant_label;
  }

  double num(const std::string& key, double fallback) const;
  std::string str(const std::string& key, const std::string& fallback) const;
  bool has(const std::string& key) const {
    return hyperparameters.count(key) != 0;
  }
};

// Opaque fitted state plus identification and fit timing. predict with an
// identical (state, X_test, M, seed) is bit-deterministic.
struct FittedModel {
  std::string method;
  std::shared_ptr<const void> state;
  std::uint64_t fit_seed = 0;
  double fit_seconds = 0.0;
};

class Emulator {
 public:
  virtual ~Emulator() = default;
  virtual std::string name() const = 0;
  virtual FittedModel fit(const EmulatorSpec& spec, const Eigen::MatrixXd& X,
                          const Eigen::VectorXd& y,
                          std::uint64_t seed) const = 0;
  virtual PredictiveEnsemble predict(const FittedModel& model,
                                     const Eigen::MatrixXd& X_test, int M,
                                     std::uint64_t seed) const = 0;

  // Deterministic predictive location and squared scale per test point,
  // for diagnostics; not available for external emulators.
  virtual void moments(const FittedModel& model, const Eigen::MatrixXd& X_test,
                       Eigen::VectorXd* mean, Eigen::VectorXd* var) const;
};

// Built-in methods, lexicographic: baseline_t, blm, gp, local_nn_gp, rbcm,
// rffgp, sod_gp. "external" resolves to the subprocess bridge.
const std::vector<std::string>& builtin_emulators();
const Emulator& find_emulator(const std::string& method);
bool emulator_exists(const std::string& method);

// Dispatch helpers used by the harness and the CLI.
FittedModel fit(const EmulatorSpec& spec, const Eigen::MatrixXd& X,
                const Eigen::VectorXd& y, std::uint64_t seed);
PredictiveEnsemble predict(const FittedModel& model,
                           const Eigen::MatrixXd& X_test, int M,
                           std::uint64_t seed);
void predictive_moments(const FittedModel& model,
                        const Eigen::MatrixXd& X_test, Eigen::VectorXd* mean,
                        Eigen::VectorXd* var);

// Data-size recipes shared with the harness; exact integer arithmetic.
int isqrt(int n);
int local_gp_neighborhood(int n_train);  // min(max(30, floor(sqrt n)), 100)
int sod_subset_size(int n_train);        // min(max(100, 2 floor(sqrt n)), 300, n-1)
int rff_feature_count(int n_train);      // min(512, 2 floor(sqrt n))
int bcm_partition_count(int n_train);    // floor(sqrt(n)/2), at least 1

// Common input validation shared by the built-ins.
void check_training_data(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         int min_rows);

}  // namespace duqbench
