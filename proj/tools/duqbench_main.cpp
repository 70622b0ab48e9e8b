// duqbench command-line interface. Subcommands are thin delegates into the
// library; all business logic lives in the duqbench modules.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "duqbench/analysis.hpp"
#include "duqbench/config.hpp"
#include "duqbench/errors.hpp"
#include "duqbench/harness.hpp"
#include "duqbench/version.hpp"

namespace fs = std::filesystem;
using namespace duqbench;

namespace {

struct ExecFlags {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> functions;
  std::vector<std::string> methods;
  std::vector<int> n_train;
  std::vector<double> nsr;
  std::vector<int> reps;
  std::string design;
  int m_draws = 0;
  int n_test = 0;
  int workers = 0;
  double timeout = -1.0;
  std::string crps_variant;
};

void add_exec_flags(CLI::App* cmd, ExecFlags* f) {
  cmd->add_option("--config", f->config_path, "TOML study configuration");
  cmd->add_option("--out", f->out_dir, "output directory (flag wins over config)");
  cmd->add_option("--functions", f->functions, "test functions (override)");
  cmd->add_option("--methods", f->methods,
                  "emulator methods (override; no hyperparameters)");
  cmd->add_option("--n-train", f->n_train, "training sizes (override)");
  cmd->add_option("--nsr", f->nsr, "noise-to-signal ratios (override)");
  cmd->add_option("--reps", f->reps,
                  "replications; a single value n means 1..n");
  cmd->add_option("--design", f->design, "LHS | maximin_LHS | uniform");
  cmd->add_option("-M,--draws", f->m_draws, "predictive draws per test point");
  cmd->add_option("--n-test", f->n_test, "shared test design size");
  cmd->add_option("--workers", f->workers,
                  "worker threads (default $DUQBENCH_WORKERS, then 1)");
  cmd->add_option("--timeout", f->timeout,
                  "per-call timeout in seconds (0 = none)");
  cmd->add_option("--crps", f->crps_variant, "CRPS variant: default | fair");
}

StudyConfig merge_config(const ExecFlags& f) {
  StudyConfig cfg;
  if (!f.config_path.empty()) cfg = StudyConfig::from_toml_file(f.config_path);
  if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
  if (!f.functions.empty()) cfg.functions = f.functions;
  if (!f.methods.empty()) {
    cfg.emulators.clear();
    for (const auto& m : f.methods) cfg.emulators.push_back({m, {}, ""});
  }
  if (!f.n_train.empty()) cfg.n_train = f.n_train;
  if (!f.nsr.empty()) cfg.nsr = f.nsr;
  if (!f.reps.empty()) {
    cfg.replications.clear();
    if (f.reps.size() == 1 && f.reps[0] > 1) {
      for (int i = 1; i <= f.reps[0]; ++i) cfg.replications.push_back(i);
    } else {
      cfg.replications = f.reps;
    }
  }
  if (!f.design.empty()) cfg.design_type = f.design;
  if (f.m_draws > 0) cfg.m_draws = f.m_draws;
  if (f.n_test > 0) cfg.n_test = f.n_test;
  if (f.workers > 0) cfg.workers = f.workers;
  if (f.timeout >= 0.0) cfg.timeout_seconds = f.timeout;
  if (!f.crps_variant.empty()) {
    if (f.crps_variant != "default" && f.crps_variant != "fair") {
      throw ConfigError("--crps must be 'default' or 'fair'");
    }
    cfg.crps_variant = f.crps_variant;
  }
  return cfg;
}

RunOptions run_options(const StudyConfig& cfg) {
  RunOptions opts;
  opts.M = cfg.m_draws;
  opts.n_test = cfg.n_test;
  opts.workers = cfg.resolved_workers();
  opts.timeout_seconds = cfg.timeout_seconds;
  opts.score = cfg.score_config();
  return opts;
}

void write_manifest(const StudyConfig& cfg, const ResultTable& table,
                    const fs::path& out) {
  nlohmann::json j;
  j["tool"] = "duqbench";
  j["version"] = kVersion;
  j["config"] = nlohmann::json::parse(cfg.to_json_string());
  nlohmann::json seeds = nlohmann::json::array();
  std::set<std::string> seen;
  for (const auto& r : table.rows) {
    const std::string key = r.scenario_key();
    if (!seen.insert(key).second) continue;
    seeds.push_back({{"canonical_string", key}, {"seed", poly_hash(key)}});
  }
  j["scenario_seeds"] = seeds;
  if (table.kind == ScenarioKind::synthetic) {
    nlohmann::json td = nlohmann::json::array();
    for (const auto& fname : cfg.functions) {
      td.push_back({{"fname", fname}, {"test_design_seed", poly_hash(fname)}});
    }
    j["test_design_seeds"] = td;
  }
  std::ofstream os(out);
  if (!os) throw Error("cannot write " + out.string());
  os << j.dump(2) << "\n";
}

int cmd_run(const ExecFlags& flags) {
  const StudyConfig cfg = merge_config(flags);
  if (cfg.functions.empty()) throw ConfigError("no functions configured");
  if (cfg.emulators.empty()) throw ConfigError("no emulators configured");
  StudyGrid grid;
  grid.fnames = cfg.functions;
  grid.n_train = cfg.n_train;
  grid.nsr = cfg.nsr;
  grid.design_type = design_type_from_string(cfg.design_type);
  grid.replications = cfg.replications;
  const RunOptions opts = run_options(cfg);

  const auto table = run_sim_study(cfg.emulators, grid, opts);

  fs::create_directories(cfg.out_dir);
  write_results_csv_file(table, (fs::path(cfg.out_dir) / "results.csv").string());
  write_manifest(cfg, table, fs::path(cfg.out_dir) / "manifest.json");
  std::cout << "wrote " << (fs::path(cfg.out_dir) / "results.csv").string()
            << " (" << table.rows.size() << " rows)\n";
  return 0;
}

int cmd_run_data(const ExecFlags& flags, const std::string& dataset_flag,
                 const std::string& csv_flag, const std::string& response_flag,
                 const std::string& cv_flag, int folds_flag) {
  StudyConfig cfg = merge_config(flags);
  if (!dataset_flag.empty()) cfg.dataset = dataset_flag;
  if (!cv_flag.empty()) cfg.cv_type = cv_flag;
  if (folds_flag > 0) cfg.folds = folds_flag;
  if (cfg.emulators.empty()) throw ConfigError("no emulators configured");

  for (const auto& ref : cfg.datasets) {
    register_dataset(load_dataset_csv(ref.name, ref.path, ref.response));
  }
  if (!csv_flag.empty()) {
    if (cfg.dataset.empty()) {
      throw ConfigError("--csv also needs --dataset to name the dataset");
    }
    if (response_flag.empty()) {
      throw ConfigError("--csv also needs --response");
    }
    register_dataset(load_dataset_csv(cfg.dataset, csv_flag, response_flag));
  }
  if (cfg.dataset.empty()) throw ConfigError("no dataset selected");
  if (!dataset_exists(cfg.dataset)) {
    throw ConfigError("dataset '" + cfg.dataset +
                      "' is not configured; add a [[dataset]] block or --csv");
  }

  const RunOptions opts = run_options(cfg);
  const auto table = run_sim_study_data(
      cfg.emulators, cfg.dataset, cv_type_from_string(cfg.cv_type), cfg.folds,
      opts);

  fs::create_directories(cfg.out_dir);
  write_results_csv_file(table, (fs::path(cfg.out_dir) / "results.csv").string());
  write_manifest(cfg, table, fs::path(cfg.out_dir) / "manifest.json");
  std::cout << "wrote " << (fs::path(cfg.out_dir) / "results.csv").string()
            << " (" << table.rows.size() << " rows)\n";
  return 0;
}

ResultTable load_and_join(const std::vector<std::string>& paths,
                          const std::map<std::string, std::string>& filters) {
  if (paths.empty()) throw ConfigError("no result files given");
  ResultTable table = read_results_csv_file(paths[0]);
  for (std::size_t i = 1; i < paths.size(); ++i) {
    table = join_sim_study(table, read_results_csv_file(paths[i]));
  }
  if (!filters.empty()) table = filter_sim_study(table, filters);
  return table;
}

std::map<std::string, std::string> parse_filters(
    const std::vector<std::string>& kvs) {
  std::map<std::string, std::string> out;
  for (const auto& kv : kvs) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("filter '" + kv + "' is not of the form column=value");
    }
    out[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return out;
}

int cmd_analyze(const std::vector<std::string>& results,
                const std::vector<std::string>& which_raw,
                const std::vector<std::string>& filter_kvs,
                const std::string& out_dir, const std::string& cluster_axis,
                double floor_value, double ceil_value, double epsilon,
                double cap) {
  std::vector<std::string> which = which_raw;
  if (which.empty()) which = {"rank", "heatmap", "pareto", "cluster"};
  for (const auto& w : which) {
    if (w != "rank" && w != "heatmap" && w != "pareto" && w != "cluster") {
      throw ConfigError("unknown analysis '" + w +
                        "'; expected rank, heatmap, pareto, or cluster");
    }
  }
  if (cluster_axis != "methods" && cluster_axis != "problems") {
    throw ConfigError("--cluster-axis must be methods or problems");
  }
  const auto table = load_and_join(results, parse_filters(filter_kvs));
  if (table.rows.empty()) throw ConfigError("no rows left after filtering");

  ScoreConfig score;
  score.epsilon = epsilon;
  score.cap = cap;

  fs::create_directories(out_dir);
  for (const auto& w : which) {
    const std::string base = (fs::path(out_dir) / w).string();
    if (w == "rank") {
      write_rank_artifacts(cumulative_ranks(table), base);
    } else if (w == "heatmap") {
      write_heatmap_artifacts(heatmap_matrix(table, floor_value, ceil_value),
                              base);
    } else if (w == "pareto") {
      write_pareto_artifacts(pareto_frontier(table, score), base);
    } else {
      const auto axis = cluster_axis == "methods" ? ClusterAxis::methods
                                                  : ClusterAxis::problems;
      write_cluster_artifacts(cluster_performance(table, axis),
                              (fs::path(out_dir) / "clusters").string());
    }
    std::cout << "wrote " << (w == "cluster" ? "clusters" : w) << ".csv/.svg in "
              << out_dir << "\n";
  }
  return 0;
}

int cmd_join(const std::vector<std::string>& results, const std::string& out) {
  const auto table = load_and_join(results, {});
  write_results_csv_file(table, out);
  std::cout << "wrote " << out << " (" << table.rows.size() << " rows)\n";
  return 0;
}

int cmd_filter(const std::vector<std::string>& results,
               const std::vector<std::string>& filter_kvs,
               const std::string& out) {
  const auto table = load_and_join(results, parse_filters(filter_kvs));
  write_results_csv_file(table, out);
  std::cout << "wrote " << out << " (" << table.rows.size() << " rows)\n";
  return 0;
}

int cmd_list(bool as_json, bool functions_only, bool emulators_only) {
  if (as_json) {
    nlohmann::json j;
    if (!emulators_only) {
      j["functions"] =
          nlohmann::json::parse(default_registry().manifest_json());
    }
    if (!functions_only) j["emulators"] = builtin_emulators();
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  if (!emulators_only) {
    std::cout << "functions (" << default_registry().list().size() << "):\n";
    for (const auto& name : default_registry().list()) {
      const auto fn = default_registry().get(name);
      std::cout << "  " << name << "  p=" << fn.input_dim
                << (fn.evaluator ? "" : "  [stub: needs an evaluator]");
      if (!fn.tags.empty()) {
        std::cout << "  {";
        bool first = true;
        for (const auto& t : fn.tags) {
          std::cout << (first ? "" : ", ") << t;
          first = false;
        }
        std::cout << "}";
      }
      std::cout << "\n";
    }
  }
  if (!functions_only) {
    std::cout << "emulators (" << builtin_emulators().size() << " built-in):\n";
    for (const auto& name : builtin_emulators()) std::cout << "  " << name << "\n";
    std::cout << "  external (subprocess protocol; needs command=...)\n";
  }
  return 0;
}

int cmd_seed(const std::string& fname, int n_train, double nsr,
             const std::string& design, int rep, const std::string& dname,
             const std::string& cv, int fold_size, int fold) {
  Scenario s;
  if (!dname.empty()) {
    s = Scenario::dataset(dname, cv_type_from_string(cv), fold_size, fold);
  } else if (!fname.empty()) {
    s = Scenario::synthetic(fname, n_train, nsr, design, rep);
  } else {
    throw ConfigError("seed needs --fname or --dname");
  }
  const std::string canonical = canonical_string(s);
  std::cout << "canonical_string: " << canonical << "\n"
            << "seed: " << scenario_seed(s) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"duqbench: reproducible benchmarking of computer-model emulators"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  ExecFlags run_flags;
  auto* run = app.add_subcommand("run", "run a synthetic-function study");
  add_exec_flags(run, &run_flags);

  ExecFlags rd_flags;
  std::string rd_dataset, rd_csv, rd_response, rd_cv;
  int rd_folds = 0;
  auto* run_data = app.add_subcommand("run-data", "run a dataset study");
  add_exec_flags(run_data, &rd_flags);
  run_data->add_option("--dataset", rd_dataset, "dataset name");
  run_data->add_option("--csv", rd_csv, "dataset CSV path (with --response)");
  run_data->add_option("--response", rd_response, "response column name");
  run_data->add_option("--cv-type", rd_cv, "cross_validation | bootstrap");
  run_data->add_option("--folds", rd_folds, "fold / bootstrap count");

  std::vector<std::string> an_results, an_which, an_filters;
  std::string an_out = "duqbench_out", an_axis = "methods";
  double an_floor = 0.001, an_ceil = 1.0, an_eps = 0.001, an_cap = 100.0;
  auto* analyze = app.add_subcommand("analyze", "produce analysis artifacts");
  analyze->add_option("--results", an_results, "result CSVs (joined in order)")
      ->required();
  analyze->add_option("--which", an_which,
                      "rank, heatmap, pareto, cluster (default: all)");
  analyze->add_option("--filter", an_filters, "column=value filters");
  analyze->add_option("--out", an_out, "output directory");
  analyze->add_option("--cluster-axis", an_axis, "methods | problems");
  analyze->add_option("--heatmap-floor", an_floor, "display clamp floor");
  analyze->add_option("--heatmap-ceil", an_ceil, "display clamp ceiling");
  analyze->add_option("--epsilon", an_eps, "relative-score offset");
  analyze->add_option("--cap", an_cap, "relative-CRPS cap");

  std::vector<std::string> join_results;
  std::string join_out = "joined.csv";
  auto* join = app.add_subcommand("join", "join result tables");
  join->add_option("--results", join_results, "result CSVs")->required();
  join->add_option("--out", join_out, "output CSV path");

  std::vector<std::string> flt_results, flt_filters;
  std::string flt_out = "filtered.csv";
  auto* filter = app.add_subcommand("filter", "filter a result table");
  filter->add_option("--results", flt_results, "result CSVs")->required();
  filter->add_option("--filter", flt_filters, "column=value filters");
  filter->add_option("--out", flt_out, "output CSV path");

  bool list_json = false, list_fns = false, list_emus = false;
  auto* list = app.add_subcommand("list", "list functions and emulators");
  list->add_flag("--json", list_json, "machine-readable manifest");
  list->add_flag("--functions", list_fns, "functions only");
  list->add_flag("--emulators", list_emus, "emulators only");

  std::string seed_fname, seed_design = "LHS", seed_dname,
              seed_cv = "cross_validation";
  int seed_n = 1000, seed_rep = 1, seed_fold_size = 0, seed_fold = 1;
  double seed_nsr = 0.0;
  auto* seed = app.add_subcommand("seed", "print a scenario's canonical string and seed");
  seed->add_option("--fname", seed_fname, "test function (synthetic)");
  seed->add_option("--n-train", seed_n, "training size");
  seed->add_option("--nsr", seed_nsr, "noise-to-signal ratio");
  seed->add_option("--design", seed_design, "design type");
  seed->add_option("--rep", seed_rep, "replication index");
  seed->add_option("--dname", seed_dname, "dataset (dataset scenario)");
  seed->add_option("--cv-type", seed_cv, "cross_validation | bootstrap");
  seed->add_option("--fold-size", seed_fold_size, "fold size");
  seed->add_option("--fold", seed_fold, "fold index");

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(run_flags);
    if (run_data->parsed()) {
      return cmd_run_data(rd_flags, rd_dataset, rd_csv, rd_response, rd_cv,
                          rd_folds);
    }
    if (analyze->parsed()) {
      return cmd_analyze(an_results, an_which, an_filters, an_out, an_axis,
                         an_floor, an_ceil, an_eps, an_cap);
    }
    if (join->parsed()) return cmd_join(join_results, join_out);
    if (filter->parsed()) return cmd_filter(flt_results, flt_filters, flt_out);
    if (list->parsed()) return cmd_list(list_json, list_fns, list_emus);
    if (seed->parsed()) {
      return cmd_seed(seed_fname, seed_n, seed_nsr, seed_design, seed_rep,
                      seed_dname, seed_cv, seed_fold_size, seed_fold);
    }
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return 2;
  } catch (const NotFoundError& e) {
    std::cerr << "not found: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
