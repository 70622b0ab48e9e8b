#include "duqbench/test_functions.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include <nlohmann/json.hpp>

#include "duqbench/errors.hpp"
#include "duqbench/seeding.hpp"

namespace duqbench {

namespace {

using std::numbers::pi;

constexpr const char* kTags[] = {"stationary",      "nonstationary",
                                 "smooth",          "discontinuous",
                                 "has-inert-inputs", "constant",
                                 "low-effective-dim"};

double borehole(std::span<const double> x) {
  const double rw = x[0], r = x[1], tu = x[2], hu = x[3];
  const double tl = x[4], hl = x[5], l = x[6], kw = x[7];
  const double lnr = std::log(r / rw);
  const double num = 2.0 * pi * tu * (hu - hl);
  const double den = lnr * (1.0 + 2.0 * l * tu / (lnr * rw * rw * kw) + tu / tl);
  return num / den;
}

double ishigami(std::span<const double> x) {
  return std::sin(x[0]) + 7.0 * std::pow(std::sin(x[1]), 2) +
         0.1 * std::pow(x[2], 4) * std::sin(x[0]);
}

double friedman(std::span<const double> x) {
  return 10.0 * std::sin(pi * x[0] * x[1]) + 20.0 * std::pow(x[2] - 0.5, 2) +
         10.0 * x[3] + 5.0 * x[4];
}

double piston(std::span<const double> x) {
  const double m = x[0], s = x[1], v0 = x[2], k = x[3];
  const double p0 = x[4], ta = x[5], t0 = x[6];
  const double a = p0 * s + 19.62 * m - k * v0 / s;
  const double pvt = p0 * v0 / t0;
  const double v = s / (2.0 * k) * (std::sqrt(a * a + 4.0 * k * pvt * ta) - a);
  return 2.0 * pi * std::sqrt(m / (k + s * s * pvt * ta / (v * v)));
}

double otl_circuit(std::span<const double> x) {
  const double rb1 = x[0], rb2 = x[1], rf = x[2];
  const double rc1 = x[3], rc2 = x[4], beta = x[5];
  const double vb1 = 12.0 * rb2 / (rb1 + rb2);
  const double den = beta * (rc2 + 9.0) + rf;
  return (vb1 + 0.74) * beta * (rc2 + 9.0) / den + 11.35 * rf / den +
         0.74 * rf * beta * (rc2 + 9.0) / (den * rc1);
}

double wing_weight(std::span<const double> x) {
  const double sw = x[0], wfw = x[1], a = x[2];
  const double lam_deg = x[3], q = x[4], taper = x[5];
  const double tc = x[6], nz = x[7], wdg = x[8], wp = x[9];
  const double lam = lam_deg * pi / 180.0;
  const double c = std::cos(lam);
  return 0.036 * std::pow(sw, 0.758) * std::pow(wfw, 0.0035) *
             std::pow(a / (c * c), 0.6) * std::pow(q, 0.006) *
             std::pow(taper, 0.04) * std::pow(100.0 * tc / c, -0.3) *
             std::pow(nz * wdg, 0.49) +
         sw * wp;
}

double robot_arm(std::span<const double> x) {
  double u = 0.0, v = 0.0, angle = 0.0;
  for (int i = 0; i < 4; ++i) {
    angle += x[i];
    u += x[4 + i] * std::cos(angle);
    v += x[4 + i] * std::sin(angle);
  }
  return std::sqrt(u * u + v * v);
}

double gramacy_lee(std::span<const double> x) {
  return std::sin(10.0 * pi * x[0]) / (2.0 * x[0]) + std::pow(x[0] - 1.0, 4);
}

double dette_pepelyshev(std::span<const double> x) {
  return 4.0 * std::pow(x[0] - 2.0 + 8.0 * x[1] - 8.0 * x[1] * x[1], 2) +
         std::pow(3.0 - 4.0 * x[1], 2) +
         16.0 * std::sqrt(x[2] + 1.0) * std::pow(2.0 * x[2] - 1.0, 2);
}

double michalewicz(std::span<const double> x) {
  double s = 0.0;
  for (int i = 0; i < 2; ++i) {
    s += std::sin(x[i]) *
         std::pow(std::sin((i + 1) * x[i] * x[i] / pi), 20.0);
  }
  return -s;
}

double damped_cosine(std::span<const double> x) {
  return std::exp(-1.4 * x[0]) * std::cos(3.5 * pi * x[0]);
}

std::vector<std::pair<double, double>> unit_box(int p) {
  return std::vector<std::pair<double, double>>(p, {0.0, 1.0});
}

TestFunction stub(std::string name, int p, std::set<std::string> tags) {
  TestFunction f;
  f.name = std::move(name);
  f.input_dim = p;
  f.domain = unit_box(p);
  f.evaluator = nullptr;
  f.tags = std::move(tags);
  return f;
}

void install_builtin_functions(FunctionRegistry& reg) {
  auto add = [&reg](std::string name, std::vector<std::pair<double, double>> dom,
                    std::function<double(std::span<const double>)> eval,
                    std::set<std::string> tags, std::vector<int> inert = {}) {
    TestFunction f;
    f.name = std::move(name);
    f.input_dim = static_cast<int>(dom.size());
    f.domain = std::move(dom);
    f.evaluator = std::move(eval);
    f.tags = std::move(tags);
    f.inert_dims = std::move(inert);
    reg.register_function(std::move(f));
  };

  add("borehole",
      {{0.05, 0.15}, {100.0, 50000.0}, {63070.0, 115600.0}, {990.0, 1110.0},
       {63.1, 116.0}, {700.0, 820.0}, {1120.0, 1680.0}, {9855.0, 12045.0}},
      borehole, {"stationary", "smooth", "low-effective-dim"});

  add("ishigami", {{-pi, pi}, {-pi, pi}, {-pi, pi}}, ishigami,
      {"stationary", "smooth"});

  add("friedman", unit_box(5), friedman, {"stationary", "smooth"});

  // Classic 10-input variant: the last five inputs do not enter the formula.
  add("friedman10", unit_box(10), friedman,
      {"stationary", "smooth", "has-inert-inputs"}, {5, 6, 7, 8, 9});

  add("piston",
      {{30.0, 60.0}, {0.005, 0.020}, {0.002, 0.010}, {1000.0, 5000.0},
       {90000.0, 110000.0}, {290.0, 296.0}, {340.0, 360.0}},
      piston, {"stationary", "smooth"});

  add("otl_circuit",
      {{50.0, 150.0}, {25.0, 70.0}, {0.5, 3.0}, {1.2, 2.5}, {0.25, 1.2},
       {50.0, 300.0}},
      otl_circuit, {"stationary", "smooth", "low-effective-dim"});

  add("wing_weight",
      {{150.0, 200.0}, {220.0, 300.0}, {6.0, 10.0}, {-10.0, 10.0},
       {16.0, 45.0}, {0.5, 1.0}, {0.08, 0.18}, {2.5, 6.0}, {1700.0, 2500.0},
       {0.025, 0.08}},
      wing_weight, {"stationary", "smooth"});

  add("robot_arm",
      {{0.0, 2.0 * pi}, {0.0, 2.0 * pi}, {0.0, 2.0 * pi}, {0.0, 2.0 * pi},
       {0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}},
      robot_arm, {"nonstationary", "smooth"});

  add("gramacy_lee", {{0.5, 2.5}}, gramacy_lee, {"nonstationary", "smooth"});

  add("dette_pepelyshev", unit_box(3), dette_pepelyshev,
      {"stationary", "smooth"});

  add("michalewicz", {{0.0, pi}, {0.0, pi}}, michalewicz,
      {"nonstationary", "smooth"});

  add("damped_cosine", {{0.0, 1.0}}, damped_cosine, {"stationary", "smooth"});

  add("const_fn", unit_box(2),
      [](std::span<const double>) { return 1.0; }, {"constant", "smooth"});

  // Zero signal everywhere; any observed response is injected noise.
  add("noise_only", unit_box(2),
      [](std::span<const double>) { return 0.0; }, {"constant"});

  add("ishigami_inert6",
      {{-pi, pi}, {-pi, pi}, {-pi, pi}, {0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}},
      ishigami, {"stationary", "smooth", "has-inert-inputs"}, {3, 4, 5});

  // Named in the source literature without a published closed form; evaluate
  // raises not-implemented until the user registers an evaluator.
  reg.register_function(stub("foursquare", 2, {"nonstationary"}));
  reg.register_function(stub("squiggle", 2, {"nonstationary"}));
  reg.register_function(stub("star2", 2, {"nonstationary"}));
  reg.register_function(stub("ignition", 10, {"nonstationary"}));
}

}  // namespace

const std::set<std::string>& allowed_function_tags() {
  static const std::set<std::string> tags(std::begin(kTags), std::end(kTags));
  return tags;
}

void FunctionRegistry::register_function(TestFunction fn) {
  if (!valid_identifier(fn.name)) {
    throw DomainError("function name is not a valid identifier: '" + fn.name +
                      "'");
  }
  if (fn.input_dim < 1) throw DomainError("input_dim must be >= 1");
  if (static_cast<int>(fn.domain.size()) != fn.input_dim) {
    throw DomainError("domain size must equal input_dim for '" + fn.name + "'");
  }
  for (const auto& [lo, hi] : fn.domain) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
      throw DomainError("domain bounds must be finite with lo < hi for '" +
                        fn.name + "'");
    }
  }
  for (const auto& t : fn.tags) {
    if (!allowed_function_tags().count(t)) {
      throw DomainError("unknown tag '" + t + "' for '" + fn.name + "'");
    }
  }
  for (int d : fn.inert_dims) {
    if (d < 0 || d >= fn.input_dim) {
      throw DomainError("inert dim out of range for '" + fn.name + "'");
    }
  }
  std::unique_lock lock(mu_);
  auto it = std::lower_bound(
      fns_.begin(), fns_.end(), fn.name,
      [](const TestFunction& a, const std::string& b) { return a.name < b; });
  if (it != fns_.end() && it->name == fn.name) {
    if (it->evaluator || !fn.evaluator) {
      throw ConflictError("function already registered: '" + fn.name + "'");
    }
    *it = std::move(fn);  // user supplied an evaluator for a stub
    return;
  }
  fns_.insert(it, std::move(fn));
}

bool FunctionRegistry::contains(const std::string& name) const {
  std::shared_lock lock(mu_);
  auto it = std::lower_bound(
      fns_.begin(), fns_.end(), name,
      [](const TestFunction& a, const std::string& b) { return a.name < b; });
  return it != fns_.end() && it->name == name;
}

TestFunction FunctionRegistry::get(const std::string& name) const {
  std::shared_lock lock(mu_);
  auto it = std::lower_bound(
      fns_.begin(), fns_.end(), name,
      [](const TestFunction& a, const std::string& b) { return a.name < b; });
  if (it == fns_.end() || it->name != name) {
    throw NotFoundError("unknown function: '" + name + "'");
  }
  return *it;
}

Eigen::VectorXd FunctionRegistry::evaluate(const std::string& name,
                                           const Eigen::MatrixXd& X) const {
  const TestFunction fn = get(name);
  if (static_cast<int>(X.cols()) != fn.input_dim) {
    throw DomainError("'" + name + "' expects " +
                      std::to_string(fn.input_dim) + " columns, got " +
                      std::to_string(X.cols()));
  }
  if (!fn.evaluator) {
    throw NotImplementedError("function '" + name +
                              "' has no evaluator; register one to use it");
  }
  const int n = static_cast<int>(X.rows());
  const int p = fn.input_dim;
  Eigen::VectorXd out(n);
  std::vector<double> native(p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) {
      const double u = X(i, j);
      if (!(u >= 0.0 && u <= 1.0)) {
        throw DomainError("'" + name + "' input outside [0,1] at row " +
                          std::to_string(i) + ", col " + std::to_string(j));
      }
      const auto& [lo, hi] = fn.domain[j];
      native[j] = lo + u * (hi - lo);
    }
    out(i) = fn.evaluator(native);
  }
  return out;
}

std::vector<std::string> FunctionRegistry::list(
    const FunctionFilter& filter) const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& f : fns_) {
    if (filter.input_dim && f.input_dim != *filter.input_dim) continue;
    bool ok = true;
    for (const auto& t : filter.required_tags) {
      if (!f.tags.count(t)) { ok = false; break; }
    }
    if (ok) out.push_back(f.name);
  }
  return out;  // fns_ is sorted by name
}

std::string FunctionRegistry::manifest_json() const {
  std::shared_lock lock(mu_);
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& f : fns_) {
    nlohmann::json j;
    j["name"] = f.name;
    j["input_dim"] = f.input_dim;
    nlohmann::json dom = nlohmann::json::array();
    for (const auto& [lo, hi] : f.domain) dom.push_back({lo, hi});
    j["domain"] = dom;
    j["tags"] = std::vector<std::string>(f.tags.begin(), f.tags.end());
    if (!f.inert_dims.empty()) j["inert_dims"] = f.inert_dims;
    j["has_evaluator"] = static_cast<bool>(f.evaluator);
    arr.push_back(j);
  }
  return arr.dump(2);
}

FunctionRegistry& default_registry() {
  static FunctionRegistry* reg = [] {
    auto* r = new FunctionRegistry();
    install_builtin_functions(*r);
    return r;
  }();
  return *reg;
}

}  // namespace duqbench
