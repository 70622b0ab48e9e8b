#include "duqbench/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "duqbench/errors.hpp"
#include "duqbench/rng.hpp"

namespace duqbench {

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string nan_aware(double v) {
  return std::isfinite(v) ? format_double(v) : std::string("NA");
}

double parse_nan_aware(const std::string& s) {
  if (s == "NA" || s.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::stod(s);
}

Scenario row_scenario(const ResultRow& r) {
  if (r.kind == ScenarioKind::synthetic) {
    return Scenario::synthetic(r.name, r.n_train, r.nsr, r.design_type,
                               r.replication);
  }
  return Scenario::dataset(r.name, cv_type_from_string(r.design_type),
                           r.fold_size, r.fold);
}

}  // namespace

std::string ResultRow::scenario_key() const {
  return canonical_string(row_scenario(*this));
}

std::string ResultRow::row_key() const { return method + "|" + scenario_key(); }

TrainingData make_training_data(const Scenario& s,
                                const FunctionRegistry& reg) {
  if (s.kind != ScenarioKind::synthetic) {
    throw DomainError("make_training_data expects a synthetic scenario");
  }
  const std::uint64_t seed = scenario_seed(s);
  const TestFunction fn = reg.get(s.name);
  TrainingData td;
  td.X = make_design(design_type_from_string(s.design_type), s.n_train,
                     fn.input_dim, seed + kSeedOffsetDesign)
             .points;
  td.y_true = reg.evaluate(s.name, td.X);
  const double sigma = std::sqrt(s.nsr * population_variance(td.y_true));
  td.y = td.y_true;
  if (sigma > 0.0) {
    Rng rng(seed + kSeedOffsetNoise);
    for (int i = 0; i < td.y.size(); ++i) td.y(i) += sigma * rng.normal();
  }
  return td;
}

TestSet make_test_set(const std::string& fname, int n_test,
                      const FunctionRegistry& reg) {
  const TestFunction fn = reg.get(fname);
  TestSet ts;
  ts.X = maximin_lhs(n_test, fn.input_dim, poly_hash(fname),
                     default_maximin_iters(n_test))
             .points;
  ts.y = reg.evaluate(fname, ts.X);
  ts.ref_sd = population_sd(ts.y);
  return ts;
}

namespace {

struct MetricColumns {
  MetricBundle raw;
  bool guard = false;
};

void fill_metrics(ResultRow* row, const Eigen::VectorXd& y_test,
                  const PredictiveEnsemble& ens, double ref_sd,
                  const ScoreConfig& score) {
  const MetricBundle mb = summary_metrics(y_test, ens, score);
  const bool guard = rescale_guard_engaged(ref_sd);
  auto rs = [&](double v) { return rescale_to_unit_variance(v, ref_sd); };
  row->rmse = rs(mb.rmse);
  row->fvu = mb.fvu;
  row->crps = rs(mb.crps_mean);
  row->crps_median = rs(mb.crps_median);
  row->coverage = mb.coverage;
  row->interval_score = rs(mb.interval_score);
  row->crps_q0 = rs(mb.crps_quantiles.at(0));
  row->crps_q25 = rs(mb.crps_quantiles.at(1));
  row->crps_q50 = rs(mb.crps_quantiles.at(2));
  row->crps_q75 = rs(mb.crps_quantiles.at(3));
  row->crps_q100 = rs(mb.crps_quantiles.at(4));
  row->rescale_guard = guard;
}

// Fit/predict one cell with fallback handling and timing. The baseline_t
// fallback keeps every metric column populated no matter how the emulator
// fails.
void run_cell(const EmulatorSpec& spec, const Eigen::MatrixXd& X_train,
              const Eigen::VectorXd& y_train, const Eigen::MatrixXd& X_test,
              const Eigen::VectorXd& y_test, double ref_sd,
              std::uint64_t scenario_seed_value, const RunOptions& opts,
              ResultRow* row) {
  const double t_start = now_seconds();
  const std::uint64_t fit_seed = scenario_seed_value + kSeedOffsetFit;
  const std::uint64_t pred_seed = scenario_seed_value + kSeedOffsetPredict;

  EmulatorSpec effective = spec;
  if (opts.timeout_seconds > 0.0 && !effective.has("timeout_seconds")) {
    effective.hyperparameters["timeout_seconds"] = opts.timeout_seconds;
  }

  row->failure_type = "none";
  row->t_fit = 0.0;
  row->t_pred = 0.0;

  std::optional<FittedModel> model;
  std::optional<PredictiveEnsemble> ens;
  try {
    FittedModel m = fit(effective, X_train, y_train, fit_seed);
    row->t_fit = m.fit_seconds;
    if (opts.timeout_seconds > 0.0 && m.fit_seconds > opts.timeout_seconds) {
      throw FitFailure("fit exceeded the " +
                       format_double(opts.timeout_seconds) + "s timeout");
    }
    model = std::move(m);
  } catch (const ConfigError&) {
    throw;  // misconfiguration aborts the study instead of falling back
  } catch (const std::exception&) {
    row->failure_type = "fit";
  }

  if (model) {
    try {
      const double t0 = now_seconds();
      PredictiveEnsemble e = predict(*model, X_test, opts.M, pred_seed);
      row->t_pred = now_seconds() - t0;
      if (opts.timeout_seconds > 0.0 && row->t_pred > opts.timeout_seconds) {
        throw PredFailure("predict exceeded the " +
                          format_double(opts.timeout_seconds) + "s timeout");
      }
      ens = std::move(e);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      row->failure_type = "pred";
    }
  }

  if (!ens) {
    // fallback: Student-t marginal model on the same training data
    EmulatorSpec fallback{"baseline_t", {}, ""};
    FittedModel fb = fit(fallback, X_train, y_train, fit_seed);
    ens = predict(fb, X_test, opts.M, pred_seed);
  }

  fill_metrics(row, y_test, *ens, ref_sd, opts.score);
  row->t_tot = now_seconds() - t_start;
}

void check_specs(const std::vector<EmulatorSpec>& specs) {
  if (specs.empty()) throw ConfigError("no emulator specs given");
  std::vector<std::string> labels;
  for (const auto& spec : specs) {
    if (!emulator_exists(spec.method)) {
      throw ConfigError("unknown emulator: '" + spec.method + "'");
    }
    if (spec.method == "external" && spec.str("command", "").empty()) {
      throw ConfigError("external emulator spec needs a 'command'");
    }
    const std::string label = spec.result_label();
    if (!valid_identifier(label)) {
      throw ConfigError("emulator label is not a valid identifier: '" + label +
                        "'");
    }
    if (std::find(labels.begin(), labels.end(), label) != labels.end()) {
      throw ConfigError("duplicate emulator label in study: '" + label + "'");
    }
    labels.push_back(label);
  }
}

// Runs `work(i)` for i in [0, count) on `workers` threads. Results must be
// written to disjoint slots; the first exception aborts remaining work.
void parallel_for(int count, int workers,
                  const std::function<void(int)>& work) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) work(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> stop{false};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto body = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count || stop.load()) return;
      try {
        work(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        stop.store(true);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::mutex g_log_mu;

void log_cell(const RunOptions& opts, int index, int total,
              const ResultRow& row) {
  if (!opts.log_progress) return;
  std::lock_guard<std::mutex> lock(g_log_mu);
  std::cerr << "[" << (index + 1) << "/" << total << "] " << row.method << " "
            << row.scenario_key() << " t_tot=" << format_double(row.t_tot)
            << "s"
            << (row.failure_type == "none" ? ""
                                           : " failure=" + row.failure_type)
            << "\n";
}

}  // namespace

ResultTable run_sim_study(const std::vector<EmulatorSpec>& specs,
                          const StudyGrid& grid, const RunOptions& opts,
                          const FunctionRegistry& reg) {
  check_specs(specs);
  if (grid.fnames.empty() || grid.n_train.empty() || grid.nsr.empty() ||
      grid.replications.empty()) {
    throw ConfigError("study grid has an empty dimension");
  }
  if (opts.M < 2) throw ConfigError("M must be >= 2");
  if (opts.n_test < 2) throw ConfigError("n_test must be >= 2");
  for (const auto& fname : grid.fnames) {
    if (!reg.contains(fname)) {
      throw ConfigError("unknown function: '" + fname + "'");
    }
    if (!reg.get(fname).evaluator) {
      throw ConfigError("function '" + fname +
                        "' has no evaluator; supply one before running");
    }
  }
  for (int n : grid.n_train) {
    if (n < 1) throw ConfigError("n_train must be >= 1");
  }
  for (double nsr : grid.nsr) {
    if (!(nsr >= 0.0) || !std::isfinite(nsr)) {
      throw ConfigError("NSR must be finite and >= 0");
    }
  }
  for (int rep : grid.replications) {
    if (rep < 1) throw ConfigError("replications must be >= 1");
  }

  // shared per-function test sets, built in parallel
  std::vector<TestSet> test_sets(grid.fnames.size());
  parallel_for(static_cast<int>(grid.fnames.size()), opts.workers,
               [&](int i) {
                 test_sets[i] = make_test_set(grid.fnames[i], opts.n_test, reg);
               });

  struct Cell {
    int fname_idx;
    Scenario scenario;
    int spec_idx;
  };
  std::vector<Cell> cells;
  for (std::size_t fi = 0; fi < grid.fnames.size(); ++fi) {
    for (int n : grid.n_train) {
      for (double nsr : grid.nsr) {
        for (int rep : grid.replications) {
          Scenario s = Scenario::synthetic(grid.fnames[fi], n, nsr,
                                           to_string(grid.design_type), rep);
          canonical_string(s);  // validate early
          for (std::size_t si = 0; si < specs.size(); ++si) {
            cells.push_back({static_cast<int>(fi), s, static_cast<int>(si)});
          }
        }
      }
    }
  }

  ResultTable table;
  table.kind = ScenarioKind::synthetic;
  table.rows.resize(cells.size());
  std::atomic<int> done{0};

  parallel_for(static_cast<int>(cells.size()), opts.workers, [&](int ci) {
    const Cell& cell = cells[ci];
    const Scenario& s = cell.scenario;
    const TrainingData td = make_training_data(s, reg);
    const TestSet& ts = test_sets[cell.fname_idx];

    ResultRow& row = table.rows[ci];
    row.kind = ScenarioKind::synthetic;
    row.method = specs[cell.spec_idx].result_label();
    row.name = s.name;
    row.n_train = s.n_train;
    row.nsr = s.nsr;
    row.design_type = s.design_type;
    row.replication = s.replication;
    run_cell(specs[cell.spec_idx], td.X, td.y, ts.X, ts.y, ts.ref_sd,
             scenario_seed(s), opts, &row);
    log_cell(opts, done.fetch_add(1), static_cast<int>(cells.size()), row);
  });
  return table;
}

// --- datasets ----------------------------------------------------------------

namespace {

std::map<std::string, Dataset>& dataset_store() {
  static auto* store = new std::map<std::string, Dataset>();
  return *store;
}
std::mutex g_dataset_mu;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

// Min/max scaling of predictors to [0,1], fit on the training rows only.
void scale_columns(const Eigen::MatrixXd& train_ref, Eigen::MatrixXd* train,
                   Eigen::MatrixXd* test) {
  const int p = static_cast<int>(train_ref.cols());
  for (int j = 0; j < p; ++j) {
    const double lo = train_ref.col(j).minCoeff();
    const double hi = train_ref.col(j).maxCoeff();
    const double range = hi - lo;
    if (range < 1e-300) {
      train->col(j).setConstant(0.5);
      test->col(j).setConstant(0.5);
    } else {
      train->col(j) = (train->col(j).array() - lo) / range;
      test->col(j) = (test->col(j).array() - lo) / range;
    }
  }
}

}  // namespace

Dataset load_dataset_csv(const std::string& name, const std::string& path,
                         const std::string& response) {
  std::ifstream is(path);
  if (!is) throw NotFoundError("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(is, line)) throw SchemaError("empty dataset file: " + path);
  const auto header = split_csv_line(line);
  int resp_col = -1;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == response) resp_col = static_cast<int>(j);
  }
  if (resp_col < 0) {
    throw SchemaError("response column '" + response + "' missing from " +
                      path);
  }
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw SchemaError(path + ":" + std::to_string(lineno) +
                        ": wrong field count");
    }
    std::vector<double> vals(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      try {
        vals[j] = std::stod(fields[j]);
      } catch (...) {
        throw SchemaError(path + ":" + std::to_string(lineno) +
                          ": non-numeric value '" + fields[j] + "'");
      }
    }
    rows.push_back(std::move(vals));
  }
  if (rows.size() < 2) throw SchemaError("dataset needs at least 2 rows");

  Dataset d;
  d.name = name;
  d.response_name = response;
  const int n = static_cast<int>(rows.size());
  const int p = static_cast<int>(header.size()) - 1;
  if (p < 1) throw SchemaError("dataset needs at least one predictor column");
  d.X.resize(n, p);
  d.y.resize(n);
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (static_cast<int>(j) != resp_col) d.predictor_names.push_back(header[j]);
  }
  for (int i = 0; i < n; ++i) {
    int c = 0;
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (static_cast<int>(j) == resp_col) {
        d.y(i) = rows[i][j];
      } else {
        d.X(i, c++) = rows[i][j];
      }
    }
  }
  if (!d.X.allFinite() || !d.y.allFinite()) {
    throw SchemaError("dataset contains non-finite values");
  }
  return d;
}

void register_dataset(Dataset d) {
  if (!valid_identifier(d.name)) {
    throw DomainError("dataset name is not a valid identifier: '" + d.name +
                      "'");
  }
  std::lock_guard<std::mutex> lock(g_dataset_mu);
  dataset_store()[d.name] = std::move(d);
}

bool dataset_exists(const std::string& name) {
  std::lock_guard<std::mutex> lock(g_dataset_mu);
  return dataset_store().count(name) != 0;
}

const Dataset& find_dataset(const std::string& name) {
  std::lock_guard<std::mutex> lock(g_dataset_mu);
  auto it = dataset_store().find(name);
  if (it == dataset_store().end()) {
    throw NotFoundError("unknown dataset: '" + name + "'");
  }
  return it->second;
}

ResultTable run_sim_study_data(const std::vector<EmulatorSpec>& specs,
                               const std::string& dname, CvType cv_type,
                               int folds, const RunOptions& opts) {
  check_specs(specs);
  const Dataset& data = find_dataset(dname);
  const int n = static_cast<int>(data.X.rows());
  if (cv_type == CvType::cross_validation && folds < 2) {
    throw ConfigError("cross validation needs folds >= 2");
  }
  if (folds < 1) throw ConfigError("folds must be >= 1");
  if (cv_type == CvType::cross_validation && folds > n) {
    throw ConfigError("more folds than rows");
  }

  // fold assignment seeded by the dataset-level key only, so every fold of
  // one study sees the same partition
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  {
    const std::uint64_t partition_seed =
        poly_hash(dname + "|" + to_string(cv_type) + "|k=" +
                  std::to_string(folds));
    Rng rng(partition_seed);
    for (int i = n - 1; i > 0; --i) {
      const int j =
          static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
      std::swap(perm[i], perm[j]);
    }
  }

  struct FoldData {
    Scenario scenario;
    std::vector<int> train_idx, test_idx;
  };
  std::vector<FoldData> fold_data;
  for (int k = 1; k <= folds; ++k) {
    FoldData fd;
    if (cv_type == CvType::cross_validation) {
      const int base = n / folds;
      const int extra = n % folds;
      const int size_k = base + (k <= extra ? 1 : 0);
      int start = 0;
      for (int q = 1; q < k; ++q) start += base + (q <= extra ? 1 : 0);
      fd.test_idx.assign(perm.begin() + start, perm.begin() + start + size_k);
      for (int i = 0; i < n; ++i) {
        if (std::find(fd.test_idx.begin(), fd.test_idx.end(), perm[i]) ==
            fd.test_idx.end()) {
          fd.train_idx.push_back(perm[i]);
        }
      }
      std::sort(fd.test_idx.begin(), fd.test_idx.end());
      std::sort(fd.train_idx.begin(), fd.train_idx.end());
      fd.scenario = Scenario::dataset(dname, cv_type, size_k, k);
    } else {
      fd.scenario = Scenario::dataset(dname, cv_type, n, k);
      const std::uint64_t seed = scenario_seed(fd.scenario);
      Rng rng(seed + kSeedOffsetDesign);
      std::vector<bool> in_bag(n, false);
      fd.train_idx.resize(n);
      for (int i = 0; i < n; ++i) {
        const int j = static_cast<int>(rng.below(n));
        fd.train_idx[i] = j;
        in_bag[j] = true;
      }
      std::sort(fd.train_idx.begin(), fd.train_idx.end());
      for (int i = 0; i < n; ++i) {
        if (!in_bag[i]) fd.test_idx.push_back(i);
      }
      if (fd.test_idx.empty()) {
        throw DomainError("bootstrap fold " + std::to_string(k) +
                          " has no out-of-bag rows");
      }
    }
    fold_data.push_back(std::move(fd));
  }

  struct Cell {
    int fold_idx;
    int spec_idx;
  };
  std::vector<Cell> cells;
  for (int f = 0; f < folds; ++f) {
    for (std::size_t si = 0; si < specs.size(); ++si) {
      cells.push_back({f, static_cast<int>(si)});
    }
  }

  ResultTable table;
  table.kind = ScenarioKind::dataset;
  table.rows.resize(cells.size());
  std::atomic<int> done{0};

  parallel_for(static_cast<int>(cells.size()), opts.workers, [&](int ci) {
    const auto& cell = cells[ci];
    const FoldData& fd = fold_data[cell.fold_idx];
    const int ntr = static_cast<int>(fd.train_idx.size());
    const int nte = static_cast<int>(fd.test_idx.size());
    Eigen::MatrixXd Xtr(ntr, data.X.cols()), Xte(nte, data.X.cols());
    Eigen::VectorXd ytr(ntr), yte(nte);
    for (int i = 0; i < ntr; ++i) {
      Xtr.row(i) = data.X.row(fd.train_idx[i]);
      ytr(i) = data.y(fd.train_idx[i]);
    }
    for (int i = 0; i < nte; ++i) {
      Xte.row(i) = data.X.row(fd.test_idx[i]);
      yte(i) = data.y(fd.test_idx[i]);
    }
    const Eigen::MatrixXd train_ref = Xtr;
    scale_columns(train_ref, &Xtr, &Xte);

    ResultRow& row = table.rows[ci];
    row.kind = ScenarioKind::dataset;
    row.method = specs[cell.spec_idx].result_label();
    row.name = dname;
    row.n_train = ntr;
    row.nsr = 0.0;
    row.design_type = to_string(fd.scenario.cv_type);
    row.fold = fd.scenario.fold;
    row.fold_size = fd.scenario.fold_size;
    run_cell(specs[cell.spec_idx], Xtr, ytr, Xte, yte, population_sd(ytr),
             scenario_seed(fd.scenario), opts, &row);
    log_cell(opts, done.fetch_add(1), static_cast<int>(cells.size()), row);
  });
  return table;
}

// --- table algebra -----------------------------------------------------------

ResultTable join_sim_study(const ResultTable& a, const ResultTable& b,
                           std::vector<std::string>* warnings) {
  if (!a.rows.empty() && !b.rows.empty() && a.kind != b.kind) {
    throw SchemaError(
        "cannot join tables with different schemas: columns "
        "(fname, replication) vs (dname, fold, fold_size)");
  }
  ResultTable out;
  out.kind = a.rows.empty() ? b.kind : a.kind;
  out.rows = a.rows;
  std::map<std::string, bool> seen;
  for (const auto& r : a.rows) seen[r.row_key()] = true;
  for (const auto& r : b.rows) {
    if (seen.count(r.row_key())) {
      const std::string w =
          "join: duplicate row for (" + r.row_key() + "); keeping the first";
      if (warnings) {
        warnings->push_back(w);
      } else {
        std::cerr << w << "\n";
      }
      continue;
    }
    seen[r.row_key()] = true;
    out.rows.push_back(r);
  }
  return out;
}

namespace {

const std::vector<std::string>& filter_columns(ScenarioKind kind) {
  static const std::vector<std::string> syn{
      "method", "fname", "n_train", "NSR", "design_type", "replication"};
  static const std::vector<std::string> dat{
      "method", "dname", "n_train", "NSR", "design_type", "fold", "fold_size"};
  return kind == ScenarioKind::synthetic ? syn : dat;
}

bool row_matches(const ResultRow& r, const std::string& col,
                 const std::string& val) {
  auto num_eq = [&val](double v) { return v == std::stod(val); };
  if (col == "method") return r.method == val;
  if (col == "fname" || col == "dname") return r.name == val;
  if (col == "n_train") return num_eq(r.n_train);
  if (col == "NSR") return num_eq(r.nsr);
  if (col == "design_type") return r.design_type == val;
  if (col == "replication") return num_eq(r.replication);
  if (col == "fold") return num_eq(r.fold);
  if (col == "fold_size") return num_eq(r.fold_size);
  return false;
}

}  // namespace

ResultTable filter_sim_study(const ResultTable& t,
                             const std::map<std::string, std::string>& eq) {
  const auto& cols = filter_columns(t.kind);
  for (const auto& [col, val] : eq) {
    if (std::find(cols.begin(), cols.end(), col) == cols.end()) {
      std::string valid;
      for (const auto& c : cols) valid += (valid.empty() ? "" : ", ") + c;
      throw SchemaError("unknown filter column '" + col + "'; valid: " + valid);
    }
    if (col == "n_train" || col == "NSR" || col == "replication" ||
        col == "fold" || col == "fold_size") {
      try {
        (void)std::stod(val);
      } catch (...) {
        throw SchemaError("filter value for '" + col + "' must be numeric");
      }
    }
  }
  ResultTable out;
  out.kind = t.kind;
  for (const auto& r : t.rows) {
    bool keep = true;
    for (const auto& [col, val] : eq) {
      if (!row_matches(r, col, val)) {
        keep = false;
        break;
      }
    }
    if (keep) out.rows.push_back(r);
  }
  return out;
}

// --- CSV ----------------------------------------------------------------------

namespace {

const std::vector<std::string>& metric_columns() {
  static const std::vector<std::string> cols{
      "RMSE", "FVU", "CRPS", "t_fit", "t_pred", "t_tot", "failure_type",
      "coverage", "interval_score", "CRPS_median", "CRPS_q0", "CRPS_q25",
      "CRPS_q50", "CRPS_q75", "CRPS_q100", "rescale_guard"};
  return cols;
}

std::vector<std::string> header_for(ScenarioKind kind) {
  std::vector<std::string> h;
  if (kind == ScenarioKind::synthetic) {
    h = {"method", "fname", "n_train", "NSR", "design_type", "replication"};
  } else {
    h = {"method", "dname", "n_train", "NSR", "design_type", "fold",
         "fold_size"};
  }
  const auto& m = metric_columns();
  h.insert(h.end(), m.begin(), m.end());
  return h;
}

}  // namespace

void write_results_csv(const ResultTable& t, std::ostream& os) {
  const auto header = header_for(t.kind);
  for (std::size_t i = 0; i < header.size(); ++i) {
    os << (i ? "," : "") << header[i];
  }
  os << "\n";
  for (const auto& r : t.rows) {
    os << r.method << "," << r.name << "," << r.n_train << ","
       << format_double(r.nsr) << "," << r.design_type << ",";
    if (t.kind == ScenarioKind::synthetic) {
      os << r.replication << ",";
    } else {
      os << r.fold << "," << r.fold_size << ",";
    }
    os << nan_aware(r.rmse) << "," << nan_aware(r.fvu) << ","
       << nan_aware(r.crps) << "," << format_double(r.t_fit) << ","
       << format_double(r.t_pred) << "," << format_double(r.t_tot) << ","
       << r.failure_type << "," << nan_aware(r.coverage) << ","
       << nan_aware(r.interval_score) << "," << nan_aware(r.crps_median) << ","
       << nan_aware(r.crps_q0) << "," << nan_aware(r.crps_q25) << ","
       << nan_aware(r.crps_q50) << "," << nan_aware(r.crps_q75) << ","
       << nan_aware(r.crps_q100) << "," << (r.rescale_guard ? 1 : 0) << "\n";
  }
}

ResultTable read_results_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw SchemaError("empty results CSV");
  const auto header = split_csv_line(line);
  ScenarioKind kind;
  if (std::find(header.begin(), header.end(), "fname") != header.end()) {
    kind = ScenarioKind::synthetic;
  } else if (std::find(header.begin(), header.end(), "dname") != header.end()) {
    kind = ScenarioKind::dataset;
  } else {
    throw SchemaError("results CSV needs an fname or dname column");
  }
  const auto expected = header_for(kind);
  std::map<std::string, int> pos;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (std::find(expected.begin(), expected.end(), header[j]) ==
        expected.end()) {
      throw SchemaError("unexpected results column '" + header[j] + "'");
    }
    pos[header[j]] = static_cast<int>(j);
  }
  for (const auto& need :
       std::vector<std::string>{"method", "n_train", "NSR", "design_type",
                                "RMSE", "FVU", "CRPS", "t_fit", "t_pred",
                                "t_tot", "failure_type"}) {
    if (!pos.count(need)) {
      throw SchemaError("results CSV missing column '" + need + "'");
    }
  }
  if (kind == ScenarioKind::dataset &&
      (!pos.count("fold") || !pos.count("fold_size"))) {
    throw SchemaError("dataset results CSV missing fold/fold_size");
  }
  if (kind == ScenarioKind::synthetic && !pos.count("replication")) {
    throw SchemaError("synthetic results CSV missing replication");
  }

  ResultTable out;
  out.kind = kind;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw SchemaError("results CSV line " + std::to_string(lineno) +
                        ": wrong field count");
    }
    auto get = [&](const std::string& col) -> const std::string& {
      return f[pos.at(col)];
    };
    auto get_opt = [&](const std::string& col, double fallback) {
      return pos.count(col) ? parse_nan_aware(get(col)) : fallback;
    };
    ResultRow r;
    r.kind = kind;
    r.method = get("method");
    r.name = kind == ScenarioKind::synthetic ? get("fname") : get("dname");
    r.n_train = std::stoi(get("n_train"));
    r.nsr = std::stod(get("NSR"));
    r.design_type = get("design_type");
    if (kind == ScenarioKind::synthetic) {
      r.replication = std::stoi(get("replication"));
    } else {
      r.fold = std::stoi(get("fold"));
      r.fold_size = std::stoi(get("fold_size"));
    }
    r.rmse = parse_nan_aware(get("RMSE"));
    r.fvu = parse_nan_aware(get("FVU"));
    r.crps = parse_nan_aware(get("CRPS"));
    r.t_fit = std::stod(get("t_fit"));
    r.t_pred = std::stod(get("t_pred"));
    r.t_tot = std::stod(get("t_tot"));
    r.failure_type = get("failure_type");
    if (r.failure_type != "none" && r.failure_type != "fit" &&
        r.failure_type != "pred") {
      throw SchemaError("bad failure_type '" + r.failure_type + "' on line " +
                        std::to_string(lineno));
    }
    r.coverage = get_opt("coverage", std::nan(""));
    r.interval_score = get_opt("interval_score", std::nan(""));
    r.crps_median = get_opt("CRPS_median", std::nan(""));
    r.crps_q0 = get_opt("CRPS_q0", std::nan(""));
    r.crps_q25 = get_opt("CRPS_q25", std::nan(""));
    r.crps_q50 = get_opt("CRPS_q50", std::nan(""));
    r.crps_q75 = get_opt("CRPS_q75", std::nan(""));
    r.crps_q100 = get_opt("CRPS_q100", std::nan(""));
    r.rescale_guard =
        pos.count("rescale_guard") && get("rescale_guard") == "1";
    out.rows.push_back(std::move(r));
  }
  return out;
}

void write_results_csv_file(const ResultTable& t, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path);
  write_results_csv(t, os);
}

ResultTable read_results_csv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw NotFoundError("cannot open results CSV: " + path);
  return read_results_csv(is);
}

}  // namespace duqbench
