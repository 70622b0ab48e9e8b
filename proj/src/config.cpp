#include "duqbench/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "duqbench/errors.hpp"
#include "duqbench/seeding.hpp"

namespace duqbench {

double TomlValue::number() const {
  if (!is_number()) throw ConfigError("TOML value is not a number");
  return std::get<double>(v);
}
bool TomlValue::boolean() const {
  if (!is_bool()) throw ConfigError("TOML value is not a boolean");
  return std::get<bool>(v);
}
const std::string& TomlValue::string() const {
  if (!is_string()) throw ConfigError("TOML value is not a string");
  return std::get<std::string>(v);
}
const TomlArray& TomlValue::array() const {
  if (!is_array()) throw ConfigError("TOML value is not an array");
  return std::get<TomlArray>(v);
}
const TomlTable& TomlValue::table() const {
  if (!is_table()) throw ConfigError("TOML value is not a table");
  return *std::get<std::shared_ptr<TomlTable>>(v);
}

const TomlValue& TomlTable::at(const std::string& key) const {
  auto it = entries.find(key);
  if (it == entries.end()) throw ConfigError("missing TOML key '" + key + "'");
  return it->second;
}

namespace {

struct Cursor {
  const std::string& s;
  std::size_t i = 0;
  int line = 1;

  bool done() const { return i >= s.size(); }
  char peek() const { return s[i]; }
  char take() {
    const char c = s[i++];
    if (c == '\n') ++line;
    return c;
  }
  void skip_ws_inline() {
    while (!done() && (peek() == ' ' || peek() == '\t')) take();
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("TOML line " + std::to_string(line) + ": " + msg);
  }
};

std::string parse_bare_or_quoted_key(Cursor& c) {
  c.skip_ws_inline();
  std::string key;
  if (!c.done() && c.peek() == '"') {
    c.take();
    while (!c.done() && c.peek() != '"') key.push_back(c.take());
    if (c.done()) c.fail("unterminated quoted key");
    c.take();
    return key;
  }
  while (!c.done() &&
         (std::isalnum(static_cast<unsigned char>(c.peek())) ||
          c.peek() == '_' || c.peek() == '-')) {
    key.push_back(c.take());
  }
  if (key.empty()) c.fail("expected a key");
  return key;
}

TomlValue parse_value(Cursor& c);

TomlValue parse_array(Cursor& c) {
  c.take();  // '['
  TomlArray arr;
  for (;;) {
    c.skip_ws_inline();
    while (!c.done() && c.peek() == '\n') {  // arrays may span lines
      c.take();
      c.skip_ws_inline();
    }
    if (c.done()) c.fail("unterminated array");
    if (c.peek() == ']') {
      c.take();
      break;
    }
    arr.push_back(parse_value(c));
    c.skip_ws_inline();
    while (!c.done() && c.peek() == '\n') {
      c.take();
      c.skip_ws_inline();
    }
    if (!c.done() && c.peek() == ',') {
      c.take();
    } else if (!c.done() && c.peek() == ']') {
      c.take();
      break;
    } else if (c.done()) {
      c.fail("unterminated array");
    } else {
      c.fail("expected ',' or ']' in array");
    }
  }
  TomlValue v;
  v.v = std::move(arr);
  return v;
}

TomlValue parse_value(Cursor& c) {
  c.skip_ws_inline();
  if (c.done()) c.fail("expected a value");
  const char ch = c.peek();
  TomlValue out;
  if (ch == '"') {
    c.take();
    std::string s;
    while (!c.done() && c.peek() != '"') {
      char q = c.take();
      if (q == '\\' && !c.done()) {
        const char e = c.take();
        switch (e) {
          case 'n': s.push_back('\n'); break;
          case 't': s.push_back('\t'); break;
          case '"': s.push_back('"'); break;
          case '\\': s.push_back('\\'); break;
          default: c.fail(std::string("unsupported escape \\") + e);
        }
      } else {
        s.push_back(q);
      }
    }
    if (c.done()) c.fail("unterminated string");
    c.take();
    out.v = std::move(s);
    return out;
  }
  if (ch == '[') return parse_array(c);
  std::string tok;
  while (!c.done() && c.peek() != '\n' && c.peek() != ',' && c.peek() != ']' &&
         c.peek() != '#' && c.peek() != ' ' && c.peek() != '\t') {
    tok.push_back(c.take());
  }
  if (tok == "true") {
    out.v = true;
    return out;
  }
  if (tok == "false") {
    out.v = false;
    return out;
  }
  try {
    std::size_t used = 0;
    const double d = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    out.v = d;
    return out;
  } catch (...) {
    c.fail("cannot parse value '" + tok + "'");
  }
}

std::vector<std::string> parse_header_path(Cursor& c) {
  std::vector<std::string> path;
  for (;;) {
    path.push_back(parse_bare_or_quoted_key(c));
    c.skip_ws_inline();
    if (!c.done() && c.peek() == '.') {
      c.take();
      continue;
    }
    break;
  }
  return path;
}

TomlTable* descend(TomlTable* t, const std::vector<std::string>& path,
                   std::size_t upto) {
  for (std::size_t i = 0; i < upto; ++i) {
    const auto& key = path[i];
    if (!t->arrays[key].empty()) {
      t = t->arrays[key].back().get();
      continue;
    }
    auto it = t->entries.find(key);
    if (it == t->entries.end()) {
      auto sub = std::make_shared<TomlTable>();
      TomlValue v;
      v.v = sub;
      t->entries[key] = v;
      t = sub.get();
    } else {
      if (!it->second.is_table()) {
        throw ConfigError("TOML key '" + key + "' is not a table");
      }
      t = std::get<std::shared_ptr<TomlTable>>(it->second.v).get();
    }
  }
  return t;
}

}  // namespace

TomlTable parse_toml(const std::string& text) {
  TomlTable root;
  TomlTable* current = &root;
  Cursor c{text};
  while (!c.done()) {
    c.skip_ws_inline();
    if (c.done()) break;
    const char ch = c.peek();
    if (ch == '\n') {
      c.take();
      continue;
    }
    if (ch == '#') {
      while (!c.done() && c.peek() != '\n') c.take();
      continue;
    }
    if (ch == '[') {
      c.take();
      const bool is_array = !c.done() && c.peek() == '[';
      if (is_array) c.take();
      const auto path = parse_header_path(c);
      c.skip_ws_inline();
      if (c.done() || c.peek() != ']') c.fail("expected ']'");
      c.take();
      if (is_array) {
        if (c.done() || c.peek() != ']') c.fail("expected ']]'");
        c.take();
      }
      TomlTable* parent = descend(&root, path, path.size() - 1);
      const std::string& leaf = path.back();
      if (is_array) {
        parent->arrays[leaf].push_back(std::make_shared<TomlTable>());
        current = parent->arrays[leaf].back().get();
      } else {
        current = descend(parent, {leaf}, 1);
      }
      continue;
    }
    // key = value
    const std::string key = parse_bare_or_quoted_key(c);
    c.skip_ws_inline();
    if (c.done() || c.peek() != '=') c.fail("expected '=' after key");
    c.take();
    TomlValue value = parse_value(c);
    if (current->entries.count(key)) {
      c.fail("duplicate key '" + key + "'");
    }
    current->entries[key] = std::move(value);
    c.skip_ws_inline();
    if (!c.done() && c.peek() == '#') {
      while (!c.done() && c.peek() != '\n') c.take();
    }
    if (!c.done() && c.peek() != '\n') c.fail("trailing characters after value");
  }
  return root;
}

TomlTable parse_toml_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_toml(ss.str());
}

// --- StudyConfig ---------------------------------------------------------------

namespace {

std::vector<int> int_list(const TomlValue& v, const std::string& what) {
  std::vector<int> out;
  if (v.is_number()) {
    out.push_back(static_cast<int>(v.number()));
    return out;
  }
  for (const auto& e : v.array()) {
    if (!e.is_number()) throw ConfigError(what + " must be numeric");
    out.push_back(static_cast<int>(e.number()));
  }
  return out;
}

std::vector<double> double_list(const TomlValue& v, const std::string& what) {
  std::vector<double> out;
  if (v.is_number()) {
    out.push_back(v.number());
    return out;
  }
  for (const auto& e : v.array()) {
    if (!e.is_number()) throw ConfigError(what + " must be numeric");
    out.push_back(e.number());
  }
  return out;
}

std::vector<std::string> string_list(const TomlValue& v,
                                     const std::string& what) {
  std::vector<std::string> out;
  if (v.is_string()) {
    out.push_back(v.string());
    return out;
  }
  for (const auto& e : v.array()) {
    if (!e.is_string()) throw ConfigError(what + " must be strings");
    out.push_back(e.string());
  }
  return out;
}

std::string toml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace

StudyConfig StudyConfig::from_toml(const TomlTable& root) {
  StudyConfig cfg;
  if (root.has("study")) {
    const TomlTable& s = root.at("study").table();
    if (s.has("functions")) cfg.functions = string_list(s.at("functions"), "functions");
    if (s.has("n_train")) cfg.n_train = int_list(s.at("n_train"), "n_train");
    if (s.has("nsr")) cfg.nsr = double_list(s.at("nsr"), "nsr");
    if (s.has("design_type")) cfg.design_type = s.at("design_type").string();
    if (s.has("replications")) {
      const auto& r = s.at("replications");
      if (r.is_number()) {
        // a scalar n means replications 1..n
        const int n = static_cast<int>(r.number());
        if (n < 1) throw ConfigError("replications must be >= 1");
        cfg.replications.clear();
        for (int i = 1; i <= n; ++i) cfg.replications.push_back(i);
      } else {
        cfg.replications = int_list(r, "replications");
      }
    }
    if (s.has("m_draws")) cfg.m_draws = static_cast<int>(s.at("m_draws").number());
    if (s.has("n_test")) cfg.n_test = static_cast<int>(s.at("n_test").number());
    if (s.has("workers")) cfg.workers = static_cast<int>(s.at("workers").number());
    if (s.has("timeout_seconds")) cfg.timeout_seconds = s.at("timeout_seconds").number();
    if (s.has("out_dir")) cfg.out_dir = s.at("out_dir").string();
    if (s.has("dataset")) cfg.dataset = s.at("dataset").string();
    if (s.has("cv_type")) cfg.cv_type = s.at("cv_type").string();
    if (s.has("folds")) cfg.folds = static_cast<int>(s.at("folds").number());
  }
  if (root.has("score")) {
    const TomlTable& s = root.at("score").table();
    if (s.has("epsilon")) cfg.epsilon = s.at("epsilon").number();
    if (s.has("cap")) cfg.cap = s.at("cap").number();
    if (s.has("interval_alpha")) cfg.interval_alpha = s.at("interval_alpha").number();
    if (s.has("crps_variant")) cfg.crps_variant = s.at("crps_variant").string();
  }
  auto em_it = root.arrays.find("emulator");
  if (em_it != root.arrays.end()) {
    for (const auto& et : em_it->second) {
      EmulatorSpec spec;
      if (!et->has("method")) throw ConfigError("[[emulator]] needs a method");
      spec.method = et->at("method").string();
      if (et->has("variant")) spec.variant_label = et->at("variant").string();
      for (const auto& [k, v] : et->entries) {
        if (k == "method" || k == "variant") continue;
        if (v.is_number()) {
          spec.hyperparameters[k] = v.number();
        } else if (v.is_string()) {
          spec.hyperparameters[k] = v.string();
        } else {
          throw ConfigError("emulator hyperparameter '" + k +
                            "' must be a number or string");
        }
      }
      cfg.emulators.push_back(std::move(spec));
    }
  }
  auto ds_it = root.arrays.find("dataset");
  if (ds_it != root.arrays.end()) {
    for (const auto& dt : ds_it->second) {
      DatasetRef ref;
      if (!dt->has("name") || !dt->has("path") || !dt->has("response")) {
        throw ConfigError("[[dataset]] needs name, path, and response");
      }
      ref.name = dt->at("name").string();
      ref.path = dt->at("path").string();
      ref.response = dt->at("response").string();
      cfg.datasets.push_back(std::move(ref));
    }
  }
  if (cfg.crps_variant != "default" && cfg.crps_variant != "fair") {
    throw ConfigError("crps_variant must be 'default' or 'fair'");
  }
  return cfg;
}

StudyConfig StudyConfig::from_toml_file(const std::string& path) {
  return from_toml(parse_toml_file(path));
}

std::string StudyConfig::to_toml_string() const {
  std::ostringstream os;
  os << "[study]\n";
  os << "functions = [";
  for (std::size_t i = 0; i < functions.size(); ++i) {
    os << (i ? ", " : "") << '"' << toml_escape(functions[i]) << '"';
  }
  os << "]\n";
  os << "n_train = [";
  for (std::size_t i = 0; i < n_train.size(); ++i) os << (i ? ", " : "") << n_train[i];
  os << "]\n";
  os << "nsr = [";
  for (std::size_t i = 0; i < nsr.size(); ++i) os << (i ? ", " : "") << format_double(nsr[i]);
  os << "]\n";
  os << "design_type = \"" << design_type << "\"\n";
  os << "replications = [";
  for (std::size_t i = 0; i < replications.size(); ++i) os << (i ? ", " : "") << replications[i];
  os << "]\n";
  os << "m_draws = " << m_draws << "\n";
  os << "n_test = " << n_test << "\n";
  os << "workers = " << workers << "\n";
  os << "timeout_seconds = " << format_double(timeout_seconds) << "\n";
  os << "out_dir = \"" << toml_escape(out_dir) << "\"\n";
  if (!dataset.empty()) os << "dataset = \"" << toml_escape(dataset) << "\"\n";
  os << "cv_type = \"" << cv_type << "\"\n";
  os << "folds = " << folds << "\n";
  os << "\n[score]\n";
  os << "epsilon = " << format_double(epsilon) << "\n";
  os << "cap = " << format_double(cap) << "\n";
  os << "interval_alpha = " << format_double(interval_alpha) << "\n";
  os << "crps_variant = \"" << crps_variant << "\"\n";
  for (const auto& e : emulators) {
    os << "\n[[emulator]]\n";
    os << "method = \"" << toml_escape(e.method) << "\"\n";
    if (!e.variant_label.empty()) {
      os << "variant = \"" << toml_escape(e.variant_label) << "\"\n";
    }
    for (const auto& [k, v] : e.hyperparameters) {
      os << k << " = ";
      if (const double* d = std::get_if<double>(&v)) {
        os << format_double(*d);
      } else {
        os << '"' << toml_escape(std::get<std::string>(v)) << '"';
      }
      os << "\n";
    }
  }
  for (const auto& d : datasets) {
    os << "\n[[dataset]]\n";
    os << "name = \"" << toml_escape(d.name) << "\"\n";
    os << "path = \"" << toml_escape(d.path) << "\"\n";
    os << "response = \"" << toml_escape(d.response) << "\"\n";
  }
  return os.str();
}

std::string StudyConfig::to_json_string() const {
  nlohmann::json j;
  j["study"] = {{"functions", functions},
                {"n_train", n_train},
                {"nsr", nsr},
                {"design_type", design_type},
                {"replications", replications},
                {"m_draws", m_draws},
                {"n_test", n_test},
                {"workers", workers},
                {"timeout_seconds", timeout_seconds},
                {"out_dir", out_dir},
                {"dataset", dataset},
                {"cv_type", cv_type},
                {"folds", folds}};
  j["score"] = {{"epsilon", epsilon},
                {"cap", cap},
                {"interval_alpha", interval_alpha},
                {"crps_variant", crps_variant}};
  nlohmann::json ems = nlohmann::json::array();
  for (const auto& e : emulators) {
    nlohmann::json je;
    je["method"] = e.method;
    if (!e.variant_label.empty()) je["variant"] = e.variant_label;
    for (const auto& [k, v] : e.hyperparameters) {
      if (const double* d = std::get_if<double>(&v)) {
        je[k] = *d;
      } else {
        je[k] = std::get<std::string>(v);
      }
    }
    ems.push_back(je);
  }
  j["emulators"] = ems;
  nlohmann::json dss = nlohmann::json::array();
  for (const auto& d : datasets) {
    dss.push_back({{"name", d.name}, {"path", d.path}, {"response", d.response}});
  }
  j["datasets"] = dss;
  return j.dump(2);
}

ScoreConfig StudyConfig::score_config() const {
  ScoreConfig s;
  s.epsilon = epsilon;
  s.cap = cap;
  s.interval_alpha = interval_alpha;
  s.fair_crps = crps_variant == "fair";
  return s;
}

int StudyConfig::resolved_workers() const {
  if (workers > 0) return workers;
  if (const char* env = std::getenv("DUQBENCH_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w > 0) return w;
    } catch (...) {
      throw ConfigError("DUQBENCH_WORKERS is not a positive integer");
    }
  }
  return 1;
}

bool operator==(const EmulatorSpec& a, const EmulatorSpec& b) {
  return a.method == b.method && a.variant_label == b.variant_label &&
         a.hyperparameters == b.hyperparameters;
}

bool StudyConfig::operator==(const StudyConfig& o) const {
  return functions == o.functions && n_train == o.n_train && nsr == o.nsr &&
         design_type == o.design_type && replications == o.replications &&
         m_draws == o.m_draws && n_test == o.n_test && workers == o.workers &&
         timeout_seconds == o.timeout_seconds && out_dir == o.out_dir &&
         epsilon == o.epsilon && cap == o.cap &&
         interval_alpha == o.interval_alpha &&
         crps_variant == o.crps_variant && emulators == o.emulators &&
         datasets == o.datasets && dataset == o.dataset &&
         cv_type == o.cv_type && folds == o.folds;
}

}  // namespace duqbench
