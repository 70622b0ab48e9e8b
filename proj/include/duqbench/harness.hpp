#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "duqbench/design.hpp"
#include "duqbench/emulator.hpp"
#include "duqbench/metrics.hpp"
#include "duqbench/seeding.hpp"
#include "duqbench/test_functions.hpp"

namespace duqbench {

// One emulator x scenario record. Metric columns are unit-variance rescaled;
// when failure_type != "none" they are the fallback model's metrics.
struct ResultRow {
  ScenarioKind kind = ScenarioKind::synthetic;
  std::string method;
  std::string name;  // fname or dname
  int n_train = 0;
  double nsr = 0.0;
  std::string design_type;  // synthetic design, or the cv_type for datasets
  int replication = 0;      // synthetic
  int fold = 0;             // dataset
  int fold_size = 0;        // dataset

  double rmse = 0.0;
  double fvu = 0.0;
  double crps = 0.0;  // mean over test points
  double t_fit = 0.0;
  double t_pred = 0.0;
  double t_tot = 0.0;
  std::string failure_type = "none";  // "none" | "fit" | "pred"

  // optional extras (always populated by this harness)
  double coverage = 0.0;
  double interval_score = 0.0;
  double crps_median = 0.0;
  double crps_q0 = 0.0, crps_q25 = 0.0, crps_q50 = 0.0, crps_q75 = 0.0,
         crps_q100 = 0.0;
  bool rescale_guard = false;

  std::string scenario_key() const;   // identity minus method
  std::string row_key() const;        // method + scenario key
};

struct ResultTable {
  ScenarioKind kind = ScenarioKind::synthetic;
  std::vector<ResultRow> rows;
};

struct StudyGrid {
  std::vector<std::string> fnames;
  std::vector<int> n_train{1000};
  std::vector<double> nsr{0.0};
  DesignType design_type = DesignType::LHS;
  std::vector<int> replications{1};
};

struct RunOptions {
  int M = 100;                  // predictive draws
  int n_test = 1000;            // shared maximin-LHS test design size
  int workers = 1;
  double timeout_seconds = 0.0; // 0 = none; overruns become failures
  ScoreConfig score;
  bool log_progress = true;     // one plain line per cell on stderr
};

// Training data for one synthetic scenario, fully determined by the scenario
// seed: design from substream +1, responses from the registry, Gaussian noise
// with sd sqrt(NSR * popvar(signal)) from substream +2.
struct TrainingData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;        // noisy responses used for fitting
  Eigen::VectorXd y_true;   // noise-free responses
};
TrainingData make_training_data(const Scenario& s,
                                const FunctionRegistry& reg);

// Shared noise-free test set for one function: maximin LHS with seed
// poly_hash(fname), so every method and replication scores against identical
// test inputs and responses.
struct TestSet {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  double ref_sd = 0.0;  // population sd of the noise-free test responses
};
TestSet make_test_set(const std::string& fname, int n_test,
                      const FunctionRegistry& reg);

ResultTable run_sim_study(const std::vector<EmulatorSpec>& specs,
                          const StudyGrid& grid, const RunOptions& opts,
                          const FunctionRegistry& reg = default_registry());

// --- datasets ---------------------------------------------------------------

struct Dataset {
  std::string name;
  Eigen::MatrixXd X;  // raw predictor columns (unscaled)
  Eigen::VectorXd y;
  std::vector<std::string> predictor_names;
  std::string response_name;
};

// Parses a numeric CSV with a header row; `response` names the response
// column, all remaining columns become predictors.
Dataset load_dataset_csv(const std::string& name, const std::string& path,
                         const std::string& response);

void register_dataset(Dataset d);
bool dataset_exists(const std::string& name);
const Dataset& find_dataset(const std::string& name);

ResultTable run_sim_study_data(const std::vector<EmulatorSpec>& specs,
                               const std::string& dname, CvType cv_type,
                               int folds, const RunOptions& opts);

// --- table algebra ----------------------------------------------------------

// Row union of compatible tables; duplicate (method, scenario) keys resolve
// in favor of `a` with one warning per key (appended to *warnings when given,
// otherwise logged to stderr).
ResultTable join_sim_study(const ResultTable& a, const ResultTable& b,
                           std::vector<std::string>* warnings = nullptr);

// Conjunctive equality filters over scenario columns (and "method"); numeric
// columns compare by value. Unknown column -> error naming valid columns.
ResultTable filter_sim_study(const ResultTable& t,
                             const std::map<std::string, std::string>& eq);

void write_results_csv(const ResultTable& t, std::ostream& os);
ResultTable read_results_csv(std::istream& is);
void write_results_csv_file(const ResultTable& t, const std::string& path);
ResultTable read_results_csv_file(const std::string& path);

}  // namespace duqbench
