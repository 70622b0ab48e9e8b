#include "duqbench/emulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "duqbench/errors.hpp"
#include "duqbench/external_emulator.hpp"
#include "duqbench/gp_core.hpp"
#include "duqbench/rng.hpp"

namespace duqbench {

double EmulatorSpec::num(const std::string& key, double fallback) const {
  auto it = hyperparameters.find(key);
  if (it == hyperparameters.end()) return fallback;
  if (const double* v = std::get_if<double>(&it->second)) return *v;
  throw ConfigError("hyperparameter '" + key + "' of '" + method +
                    "' must be numeric");
}

std::string EmulatorSpec::str(const std::string& key,
                              const std::string& fallback) const {
  auto it = hyperparameters.find(key);
  if (it == hyperparameters.end()) return fallback;
  if (const std::string* v = std::get_if<std::string>(&it->second)) return *v;
  throw ConfigError("hyperparameter '" + key + "' of '" + method +
                    "' must be a string");
}

void Emulator::moments(const FittedModel&, const Eigen::MatrixXd&,
                       Eigen::VectorXd*, Eigen::VectorXd*) const {
  throw NotImplementedError("moments not available for '" + name() + "'");
}

int isqrt(int n) {
  if (n < 0) throw DomainError("isqrt of negative");
  int r = static_cast<int>(std::sqrt(static_cast<double>(n)));
  while (r > 0 && static_cast<long long>(r) * r > n) --r;
  while (static_cast<long long>(r + 1) * (r + 1) <= n) ++r;
  return r;
}

int local_gp_neighborhood(int n) { return std::min(std::max(30, isqrt(n)), 100); }

int sod_subset_size(int n) {
  return std::min({std::max(100, 2 * isqrt(n)), 300, n - 1});
}

int rff_feature_count(int n) { return std::min(512, 2 * isqrt(n)); }

int bcm_partition_count(int n) { return std::max(1, isqrt(n) / 2); }

void check_training_data(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         int min_rows) {
  if (X.rows() != y.size()) throw DomainError("X rows must match y length");
  if (X.cols() < 1) throw DomainError("X needs at least one column");
  if (X.rows() < min_rows) {
    throw DomainError("need at least " + std::to_string(min_rows) +
                      " training rows");
  }
  if (!X.allFinite() || !y.allFinite()) {
    throw DomainError("training data must be finite");
  }
}

namespace {

// ---------------------------------------------------------------------------
// baseline_t: location-scale Student-t fit to the marginal training
// responses, df by maximum likelihood over {3, 5, 10, 30, inf}. This is also
// the harness fallback model, so it must succeed for any finite y (n >= 1).
// ---------------------------------------------------------------------------

struct BaselineState {
  double mu = 0.0;
  double sigma = 0.0;
  double df = kInfinity;
};

double t_loglik(const Eigen::VectorXd& y, double mu, double sigma, double df) {
  const int n = static_cast<int>(y.size());
  if (sigma <= 0.0) return -kInfinity;
  if (!std::isfinite(df)) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = (y(i) - mu) / sigma;
      s += -0.5 * std::log(2.0 * M_PI) - std::log(sigma) - 0.5 * r * r;
    }
    return s;
  }
  const double c = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                   0.5 * std::log(df * M_PI) - std::log(sigma);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = (y(i) - mu) / sigma;
    s += c - 0.5 * (df + 1.0) * std::log1p(r * r / df);
  }
  return s;
}

// EM updates for fixed df (standard scale-mixture weights).
void t_ml_fit(const Eigen::VectorXd& y, double df, double* mu, double* sigma) {
  const int n = static_cast<int>(y.size());
  double m = y.mean();
  double s2 = (y.array() - m).square().sum() / n;
  for (int iter = 0; iter < 200; ++iter) {
    double wsum = 0.0, wy = 0.0;
    const double s2_safe = std::max(s2, 1e-300);
    for (int i = 0; i < n; ++i) {
      const double r2 = (y(i) - m) * (y(i) - m) / s2_safe;
      const double w = (df + 1.0) / (df + r2);
      wsum += w;
      wy += w * y(i);
    }
    const double m_new = wy / wsum;
    double s2_new = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r2 = (y(i) - m_new) * (y(i) - m_new) / s2_safe;
      const double w = (df + 1.0) / (df + r2);
      s2_new += w * (y(i) - m_new) * (y(i) - m_new);
    }
    s2_new /= n;
    const bool done =
        std::fabs(m_new - m) < 1e-12 * (1.0 + std::fabs(m)) &&
        std::fabs(s2_new - s2) < 1e-12 * (1.0 + s2);
    m = m_new;
    s2 = s2_new;
    if (done) break;
  }
  *mu = m;
  *sigma = std::sqrt(std::max(s2, 0.0));
}

class BaselineTEmulator final : public Emulator {
 public:
  std::string name() const override { return "baseline_t"; }

  FittedModel fit(const EmulatorSpec&, const Eigen::MatrixXd& X,
                  const Eigen::VectorXd& y, std::uint64_t seed) const override {
    check_training_data(X, y, 1);
    auto st = std::make_shared<BaselineState>();
    const double sd = population_sd(y);
    if (sd < 1e-15) {
      st->mu = y.mean();
      st->sigma = 0.0;
      st->df = kInfinity;
    } else {
      double best = -kInfinity;
      for (double df : {3.0, 5.0, 10.0, 30.0, kInfinity}) {
        double mu, sigma;
        if (std::isfinite(df)) {
          t_ml_fit(y, df, &mu, &sigma);
        } else {
          mu = y.mean();
          sigma = sd;
        }
        const double ll = t_loglik(y, mu, sigma, df);
        if (ll > best) {
          best = ll;
          st->mu = mu;
          st->sigma = sigma;
          st->df = df;
        }
      }
    }
    return FittedModel{name(), st, seed, 0.0};
  }

  PredictiveEnsemble predict(const FittedModel& model,
                             const Eigen::MatrixXd& X_test, int M,
                             std::uint64_t seed) const override {
    if (M < 2) throw DomainError("predict requires M >= 2");
    const auto st = std::static_pointer_cast<const BaselineState>(model.state);
    const int m = static_cast<int>(X_test.rows());
    Rng rng(seed);
    PredictiveEnsemble out;
    out.draws.resize(M, m);
    for (int j = 0; j < M; ++j) {
      // input-independent marginal model: one draw shared by all test points
      const double v = st->mu + st->sigma * rng.student_t(st->df);
      out.draws.row(j).setConstant(v);
    }
    return out;
  }

  void moments(const FittedModel& model, const Eigen::MatrixXd& X_test,
               Eigen::VectorXd* mean, Eigen::VectorXd* var) const override {
    const auto st = std::static_pointer_cast<const BaselineState>(model.state);
    mean->setConstant(X_test.rows(), st->mu);
    var->setConstant(X_test.rows(), st->sigma * st->sigma);
  }
};

// ---------------------------------------------------------------------------
// blm: conjugate Bayesian linear regression (normal-inverse-gamma, vague
// proper prior). Predictive draws from the closed-form multivariate t via
// sampling (sigma^2, beta) and adding observation noise.
// ---------------------------------------------------------------------------

struct BlmState {
  Eigen::VectorXd coef_mean;       // m_n
  Eigen::MatrixXd chol_precision;  // L with A = L L^T, A = V0^-1 + Phi^T Phi
  double a_n = 0.0;
  double b_n = 0.0;
};

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd phi(X.rows(), X.cols() + 1);
  phi.col(0).setOnes();
  phi.rightCols(X.cols()) = X;
  return phi;
}

class BlmEmulator final : public Emulator {
 public:
  std::string name() const override { return "blm"; }

  FittedModel fit(const EmulatorSpec& spec, const Eigen::MatrixXd& X,
                  const Eigen::VectorXd& y, std::uint64_t seed) const override {
    check_training_data(X, y, 2);
    const double prior_precision = spec.num("prior_precision", 1e-6);
    const double a0 = spec.num("prior_shape", 1e-3);
    const double b0 = spec.num("prior_scale", 1e-3);

    const Eigen::MatrixXd phi = with_intercept(X);
    Eigen::MatrixXd A = phi.transpose() * phi;
    A.diagonal().array() += prior_precision;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) throw FitFailure("blm: singular system");

    auto st = std::make_shared<BlmState>();
    st->coef_mean = llt.solve(phi.transpose() * y);
    st->chol_precision = llt.matrixL();
    st->a_n = a0 + 0.5 * static_cast<double>(y.size());
    const double quad = y.squaredNorm() - st->coef_mean.dot(A * st->coef_mean);
    st->b_n = b0 + 0.5 * std::max(quad, 0.0);
    if (st->b_n <= 0.0) st->b_n = b0;
    return FittedModel{name(), st, seed, 0.0};
  }

  PredictiveEnsemble predict(const FittedModel& model,
                             const Eigen::MatrixXd& X_test, int M,
                             std::uint64_t seed) const override {
    if (M < 2) throw DomainError("predict requires M >= 2");
    const auto st = std::static_pointer_cast<const BlmState>(model.state);
    const Eigen::MatrixXd phi = with_intercept(X_test);
    if (phi.cols() != st->coef_mean.size()) {
      throw DomainError("blm: test dimension mismatch");
    }
    const int m = static_cast<int>(X_test.rows());
    const int k = static_cast<int>(st->coef_mean.size());
    Rng rng(seed);
    PredictiveEnsemble out;
    out.draws.resize(M, m);
    Eigen::VectorXd z(k);
    for (int j = 0; j < M; ++j) {
      const double sigma2 = st->b_n / rng.gamma(st->a_n);
      const double sigma = std::sqrt(sigma2);
      for (int i = 0; i < k; ++i) z(i) = rng.normal();
      // beta = m_n + sigma * L^-T z
      const Eigen::VectorXd beta =
          st->coef_mean +
          sigma * st->chol_precision.transpose()
                      .triangularView<Eigen::Upper>()
                      .solve(z);
      const Eigen::VectorXd mean = phi * beta;
      for (int i = 0; i < m; ++i) {
        out.draws(j, i) = mean(i) + sigma * rng.normal();
      }
    }
    return out;
  }

  void moments(const FittedModel& model, const Eigen::MatrixXd& X_test,
               Eigen::VectorXd* mean, Eigen::VectorXd* var) const override {
    const auto st = std::static_pointer_cast<const BlmState>(model.state);
    const Eigen::MatrixXd phi = with_intercept(X_test);
    *mean = phi * st->coef_mean;
    const Eigen::MatrixXd half = st->chol_precision
                                     .triangularView<Eigen::Lower>()
                                     .solve(phi.transpose());
    const double s2 = st->b_n / st->a_n;
    *var = (s2 * (1.0 + half.colwise().squaredNorm().array()))
               .matrix()
               .transpose();
  }
};

// ---------------------------------------------------------------------------
// rffgp: random Fourier feature regression. Frequencies from the Gaussian
// spectral density with a shared lengthscale chosen on a small grid by the
// conjugate model evidence; feature-weight posterior as in blm.
// ---------------------------------------------------------------------------

struct RffState {
  Eigen::MatrixXd freq;   // m_feat x p, already scaled by 1/lengthscale
  Eigen::VectorXd phase;  // m_feat
  Eigen::VectorXd coef_mean;
  Eigen::MatrixXd chol_precision;
  double a_n = 0.0, b_n = 0.0;
  double y_mean = 0.0, y_sd = 1.0;
  bool degenerate = false;  // constant training response
};

Eigen::MatrixXd rff_features(const Eigen::MatrixXd& X,
                             const Eigen::MatrixXd& freq,
                             const Eigen::VectorXd& phase) {
  const int mf = static_cast<int>(freq.rows());
  Eigen::MatrixXd phi = X * freq.transpose();
  phi.rowwise() += phase.transpose();
  phi = phi.array().cos().matrix() * std::sqrt(2.0 / mf);
  return phi;
}

class RffGpEmulator final : public Emulator {
 public:
  std::string name() const override { return "rffgp"; }

  FittedModel fit(const EmulatorSpec& spec, const Eigen::MatrixXd& X,
                  const Eigen::VectorXd& y, std::uint64_t seed) const override {
    check_training_data(X, y, 2);
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    const int mf = static_cast<int>(
        spec.num("n_features", rff_feature_count(n)));
    if (mf < 1) throw ConfigError("rffgp: n_features must be >= 1");

    auto st = std::make_shared<RffState>();
    st->y_mean = y.mean();
    st->y_sd = population_sd(y);
    if (st->y_sd < 1e-15) {
      st->degenerate = true;
      return FittedModel{name(), st, seed, 0.0};
    }
    const Eigen::VectorXd ys = (y.array() - st->y_mean) / st->y_sd;

    Rng rng(seed);
    Eigen::MatrixXd base(mf, p);
    for (int i = 0; i < mf; ++i)
      for (int j = 0; j < p; ++j) base(i, j) = rng.normal();
    Eigen::VectorXd phase(mf);
    for (int i = 0; i < mf; ++i) phase(i) = 2.0 * M_PI * rng.uniform();

    const double a0 = 1e-3, b0 = 1e-3;
    const double a_n = a0 + 0.5 * n;
    double best_evidence = -kInfinity;
    for (double ls : {0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2}) {
      const Eigen::MatrixXd freq = base / ls;
      const Eigen::MatrixXd phi = rff_features(X, freq, phase);
      Eigen::MatrixXd A = phi.transpose() * phi;
      A.diagonal().array() += 1.0;  // unit prior precision on weights
      Eigen::LLT<Eigen::MatrixXd> llt(A);
      if (llt.info() != Eigen::Success) continue;
      const Eigen::VectorXd mn = llt.solve(phi.transpose() * ys);
      const double quad = ys.squaredNorm() - mn.dot(A * mn);
      const double b_n = b0 + 0.5 * std::max(quad, 0.0);
      double half_logdet = 0.0;
      const Eigen::MatrixXd& lfac = llt.matrixLLT();
      for (int i = 0; i < mf; ++i) half_logdet += std::log(lfac(i, i));
      const double evidence = -0.5 * n * std::log(2.0 * M_PI) - half_logdet +
                              a0 * std::log(b0) - a_n * std::log(b_n) +
                              std::lgamma(a_n) - std::lgamma(a0);
      if (evidence > best_evidence) {
        best_evidence = evidence;
        st->freq = freq;
        st->phase = phase;
        st->coef_mean = mn;
        st->chol_precision = llt.matrixL();
        st->a_n = a_n;
        st->b_n = b_n;
      }
    }
    if (!std::isfinite(best_evidence)) {
      throw FitFailure("rffgp: no lengthscale produced a usable fit");
    }
    return FittedModel{name(), st, seed, 0.0};
  }

  PredictiveEnsemble predict(const FittedModel& model,
                             const Eigen::MatrixXd& X_test, int M,
                             std::uint64_t seed) const override {
    if (M < 2) throw DomainError("predict requires M >= 2");
    const auto st = std::static_pointer_cast<const RffState>(model.state);
    const int m = static_cast<int>(X_test.rows());
    Rng rng(seed);
    PredictiveEnsemble out;
    out.draws.resize(M, m);
    if (st->degenerate) {
      out.draws.setConstant(st->y_mean);
      return out;
    }
    const Eigen::MatrixXd phi = rff_features(X_test, st->freq, st->phase);
    const int k = static_cast<int>(st->coef_mean.size());
    Eigen::VectorXd z(k);
    for (int j = 0; j < M; ++j) {
      const double sigma2 = st->b_n / rng.gamma(st->a_n);
      const double sigma = std::sqrt(sigma2);
      for (int i = 0; i < k; ++i) z(i) = rng.normal();
      const Eigen::VectorXd beta =
          st->coef_mean +
          sigma * st->chol_precision.transpose()
                      .triangularView<Eigen::Upper>()
                      .solve(z);
      const Eigen::VectorXd mean = phi * beta;
      for (int i = 0; i < m; ++i) {
        out.draws(j, i) =
            st->y_mean + st->y_sd * (mean(i) + sigma * rng.normal());
      }
    }
    return out;
  }

  void moments(const FittedModel& model, const Eigen::MatrixXd& X_test,
               Eigen::VectorXd* mean, Eigen::VectorXd* var) const override {
    const auto st = std::static_pointer_cast<const RffState>(model.state);
    if (st->degenerate) {
      mean->setConstant(X_test.rows(), st->y_mean);
      var->setConstant(X_test.rows(), 0.0);
      return;
    }
    const Eigen::MatrixXd phi = rff_features(X_test, st->freq, st->phase);
    *mean = (st->y_mean + (st->y_sd * (phi * st->coef_mean)).array()).matrix();
    const Eigen::MatrixXd half = st->chol_precision
                                     .triangularView<Eigen::Lower>()
                                     .solve(phi.transpose());
    const double s2 = st->b_n / st->a_n * st->y_sd * st->y_sd;
    *var = (s2 * (1.0 + half.colwise().squaredNorm().array()))
               .matrix()
               .transpose();
  }
};

}  // namespace

// Defined in emulators_gp.cpp.
const Emulator& gp_emulator_instance();
const Emulator& sod_gp_emulator_instance();
const Emulator& local_nn_gp_emulator_instance();
const Emulator& rbcm_emulator_instance();

const std::vector<std::string>& builtin_emulators() {
  static const std::vector<std::string> names{
      "baseline_t", "blm", "gp", "local_nn_gp", "rbcm", "rffgp", "sod_gp"};
  return names;
}

const Emulator& find_emulator(const std::string& method) {
  static const BaselineTEmulator baseline;
  static const BlmEmulator blm;
  static const RffGpEmulator rff;
  if (method == "baseline_t") return baseline;
  if (method == "blm") return blm;
  if (method == "rffgp") return rff;
  if (method == "gp") return gp_emulator_instance();
  if (method == "sod_gp") return sod_gp_emulator_instance();
  if (method == "local_nn_gp") return local_nn_gp_emulator_instance();
  if (method == "rbcm") return rbcm_emulator_instance();
  if (method == "external") return external_emulator_instance();
  throw NotFoundError("unknown emulator: '" + method + "'");
}

bool emulator_exists(const std::string& method) {
  try {
    find_emulator(method);
    return true;
  } catch (const NotFoundError&) {
    return false;
  }
}

FittedModel fit(const EmulatorSpec& spec, const Eigen::MatrixXd& X,
                const Eigen::VectorXd& y, std::uint64_t seed) {
  const Emulator& emu = find_emulator(spec.method);
  const auto t0 = std::chrono::steady_clock::now();
  FittedModel model = emu.fit(spec, X, y, seed);
  const auto t1 = std::chrono::steady_clock::now();
  model.fit_seconds = std::chrono::duration<double>(t1 - t0).count();
  return model;
}

PredictiveEnsemble predict(const FittedModel& model,
                           const Eigen::MatrixXd& X_test, int M,
                           std::uint64_t seed) {
  return find_emulator(model.method).predict(model, X_test, M, seed);
}

void predictive_moments(const FittedModel& model,
                        const Eigen::MatrixXd& X_test, Eigen::VectorXd* mean,
                        Eigen::VectorXd* var) {
  find_emulator(model.method).moments(model, X_test, mean, var);
}

}  // namespace duqbench
