#pragma once

#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "duqbench/emulator.hpp"
#include "duqbench/metrics.hpp"

namespace duqbench {

// Minimal TOML reader covering what study configs need: comments, [table]
// and [[array-of-table]] headers (dotted names allowed), and key = value
// lines with strings, numbers, booleans, and flat arrays.
struct TomlValue;
using TomlArray = std::vector<TomlValue>;
struct TomlTable;

struct TomlValue {
  std::variant<double, bool, std::string, TomlArray,
               std::shared_ptr<TomlTable>>
      v;

  bool is_number() const { return std::holds_alternative<double>(v); }
  bool is_bool() const { return std::holds_alternative<bool>(v); }
  bool is_string() const { return std::holds_alternative<std::string>(v); }
  bool is_array() const { return std::holds_alternative<TomlArray>(v); }
  bool is_table() const {
    return std::holds_alternative<std::shared_ptr<TomlTable>>(v);
  }
  double number() const;
  bool boolean() const;
  const std::string& string() const;
  const TomlArray& array() const;
  const TomlTable& table() const;
};

struct TomlTable {
  std::map<std::string, TomlValue> entries;
  std::map<std::string, std::vector<std::shared_ptr<TomlTable>>> arrays;

  bool has(const std::string& key) const { return entries.count(key) != 0; }
  const TomlValue& at(const std::string& key) const;
};

TomlTable parse_toml(const std::string& text);
TomlTable parse_toml_file(const std::string& path);

// Study configuration: [study] grid and execution settings, [score]
// overrides, one [[emulator]] block per spec (hyperparameters inline), and
// optional [[dataset]] blocks for run-data.
struct DatasetRef {
  std::string name;
  std::string path;
  std::string response;
  bool operator==(const DatasetRef&) const = default;
};

struct StudyConfig {
  // [study]
  std::vector<std::string> functions;
  std::vector<int> n_train{1000};
  std::vector<double> nsr{0.0};
  std::string design_type = "LHS";
  std::vector<int> replications{1};
  int m_draws = 100;
  int n_test = 1000;
  int workers = 0;  // 0 = unset; resolved against DUQBENCH_WORKERS, then 1
  double timeout_seconds = 0.0;
  std::string out_dir = "duqbench_out";

  // [score]
  double epsilon = 0.001;
  double cap = 100.0;
  double interval_alpha = 0.05;
  std::string crps_variant = "default";  // pairwise constant 1/(2M(M-1));
                                        // "fair" selects 1/(M(M-1))

  // [[emulator]]
  std::vector<EmulatorSpec> emulators;

  // [[dataset]] + run-data selection
  std::vector<DatasetRef> datasets;
  std::string dataset;  // which dataset run-data uses
  std::string cv_type = "cross_validation";
  int folds = 10;

  static StudyConfig from_toml(const TomlTable& t);
  static StudyConfig from_toml_file(const std::string& path);
  std::string to_toml_string() const;
  std::string to_json_string() const;  // for the run manifest

  ScoreConfig score_config() const;
  int resolved_workers() const;  // workers > 0, else $DUQBENCH_WORKERS, else 1

  bool operator==(const StudyConfig&) const;
};

bool operator==(const EmulatorSpec& a, const EmulatorSpec& b);

}  // namespace duqbench
