#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "duqbench/emulator.hpp"
#include "duqbench/errors.hpp"
#include "duqbench/gp_core.hpp"
#include "duqbench/rng.hpp"

namespace duqbench {

namespace {

GpOptions gp_options_from_spec(const EmulatorSpec& spec) {
  GpOptions opts;
  opts.multistarts = static_cast<int>(spec.num("multistarts", 5));
  opts.max_iters = static_cast<int>(spec.num("max_opt_iters", 60));
  if (opts.multistarts < 1 || opts.max_iters < 1) {
    throw ConfigError("gp: multistarts and max_opt_iters must be >= 1");
  }
  return opts;
}

void marginal_normal_draws(const Eigen::VectorXd& mean,
                           const Eigen::VectorXd& var, int M,
                           std::uint64_t seed, PredictiveEnsemble* out) {
  const int m = static_cast<int>(mean.size());
  Rng rng(seed);
  out->draws.resize(M, m);
  for (int j = 0; j < M; ++j) {
    for (int i = 0; i < m; ++i) {
      out->draws(j, i) = mean(i) + std::sqrt(var(i)) * rng.normal();
    }
  }
}

// Shared state for the plain/subset GP emulators.
struct GpState {
  GpPosterior post;
  GpHyper hyper;
  double nugget = 0.0;
  double y_mean = 0.0;
  bool degenerate = false;  // constant training response
};

GpState fit_gp_state(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     std::uint64_t seed, const GpOptions& opts) {
  GpState st;
  st.y_mean = y.mean();
  const Eigen::VectorXd yc = y.array() - st.y_mean;
  const double var_y = population_variance(y);
  if (var_y < 1e-24) {
    st.degenerate = true;
    return st;
  }
  const auto fitres = gp_fit_hyper({&X}, {&yc}, var_y, seed, opts);
  st.hyper = fitres.hyper;
  st.nugget = fitres.nugget;
  st.post = gp_posterior(X, yc, st.hyper, st.nugget);
  return st;
}

void gp_state_moments(const GpState& st, const Eigen::MatrixXd& X_test,
                      Eigen::VectorXd* mean, Eigen::VectorXd* var) {
  if (st.degenerate) {
    mean->setConstant(X_test.rows(), st.y_mean);
    var->setConstant(X_test.rows(), 0.0);
    return;
  }
  if (X_test.cols() != st.post.X.cols()) {
    throw DomainError("gp: test dimension mismatch");
  }
  gp_predict_latent(st.post, st.hyper, X_test, mean, var);
  mean->array() += st.y_mean;
}

PredictiveEnsemble gp_state_predict(const GpState& st,
                                    const Eigen::MatrixXd& X_test, int M,
                                    std::uint64_t seed) {
  if (M < 2) throw DomainError("predict requires M >= 2");
  PredictiveEnsemble out;
  if (st.degenerate) {
    out.draws.resize(M, static_cast<int>(X_test.rows()));
    out.draws.setConstant(st.y_mean);
    return out;
  }
  Eigen::VectorXd mean, var;
  gp_state_moments(st, X_test, &mean, &var);
  marginal_normal_draws(mean, var, M, seed, &out);
  return out;
}

// ---------------------------------------------------------------------------
// gp: constant-mean anisotropic GP on the full training set.
// ---------------------------------------------------------------------------

class GpEmulator final : public Emulator {
 public:
  std::string name() const override { return "gp"; }

  FittedModel fit(const EmulatorSpec& spec, const Eigen::MatrixXd& X,
                  const Eigen::VectorXd& y, std::uint64_t seed) const override {
    check_training_data(X, y, 2);
    auto st = std::make_shared<GpState>(
        fit_gp_state(X, y, seed, gp_options_from_spec(spec)));
    return FittedModel{name(), st, seed, 0.0};
  }

  PredictiveEnsemble predict(const FittedModel& model,
                             const Eigen::MatrixXd& X_test, int M,
                             std::uint64_t seed) const override {
    const auto st = std::static_pointer_cast<const GpState>(model.state);
    return gp_state_predict(*st, X_test, M, seed);
  }

  void moments(const FittedModel& model, const Eigen::MatrixXd& X_test,
               Eigen::VectorXd* mean, Eigen::VectorXd* var) const override {
    const auto st = std::static_pointer_cast<const GpState>(model.state);
    gp_state_moments(*st, X_test, mean, var);
  }
};

// ---------------------------------------------------------------------------
// sod_gp: GP on a greedy maximin-coverage subset of the training inputs.
// ---------------------------------------------------------------------------

std::vector<int> greedy_maximin_subset(const Eigen::MatrixXd& X, int size) {
  const int n = static_cast<int>(X.rows());
  size = std::min(size, n);
  std::vector<int> chosen;
  chosen.reserve(size);
  const Eigen::RowVectorXd centroid = X.colwise().mean();
  int first = 0;
  double best = kInfinity;
  for (int i = 0; i < n; ++i) {
    const double d = (X.row(i) - centroid).squaredNorm();
    if (d < best) { best = d; first = i; }
  }
  chosen.push_back(first);
  Eigen::VectorXd mind(n);
  for (int i = 0; i < n; ++i) mind(i) = (X.row(i) - X.row(first)).squaredNorm();
  while (static_cast<int>(chosen.size()) < size) {
    int next = 0;
    double far = -1.0;
    for (int i = 0; i < n; ++i) {
      if (mind(i) > far) { far = mind(i); next = i; }
    }
    chosen.push_back(next);
    for (int i = 0; i < n; ++i) {
      mind(i) = std::min(mind(i), (X.row(i) - X.row(next)).squaredNorm());
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

class SodGpEmulator final : public Emulator {
 public:
  std::string name() const override { return "sod_gp"; }

  FittedModel fit(const EmulatorSpec& spec, const Eigen::MatrixXd& X,
                  const Eigen::VectorXd& y, std::uint64_t seed) const override {
    check_training_data(X, y, 2);
    const int n = static_cast<int>(X.rows());
    const int size = std::max(
        1, static_cast<int>(spec.num("subset", sod_subset_size(n))));
    const auto idx = greedy_maximin_subset(X, size);
    Eigen::MatrixXd Xs(idx.size(), X.cols());
    Eigen::VectorXd ys(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      Xs.row(i) = X.row(idx[i]);
      ys(i) = y(idx[i]);
    }
    auto st = std::make_shared<GpState>(
        fit_gp_state(Xs, ys, seed, gp_options_from_spec(spec)));
    return FittedModel{name(), st, seed, 0.0};
  }

  PredictiveEnsemble predict(const FittedModel& model,
                             const Eigen::MatrixXd& X_test, int M,
                             std::uint64_t seed) const override {
    const auto st = std::static_pointer_cast<const GpState>(model.state);
    return gp_state_predict(*st, X_test, M, seed);
  }

  void moments(const FittedModel& model, const Eigen::MatrixXd& X_test,
               Eigen::VectorXd* mean, Eigen::VectorXd* var) const override {
    const auto st = std::static_pointer_cast<const GpState>(model.state);
    gp_state_moments(*st, X_test, mean, var);
  }
};

// ---------------------------------------------------------------------------
// local_nn_gp: per-test-point nearest-neighbor GP with hyperparameters shared
// from a single fit on a random subset of up to 300 training points.
// ---------------------------------------------------------------------------

struct LocalNnState {
  Eigen::MatrixXd X;
  Eigen::VectorXd yc;
  double y_mean = 0.0;
  int neighborhood = 0;
  GpHyper hyper;
  double nugget = 0.0;
  bool degenerate = false;
};

class LocalNnGpEmulator final : public Emulator {
 public:
  std::string name() const override { return "local_nn_gp"; }

  FittedModel fit(const EmulatorSpec& spec, const Eigen::MatrixXd& X,
                  const Eigen::VectorXd& y, std::uint64_t seed) const override {
    check_training_data(X, y, 2);
    const int n = static_cast<int>(X.rows());
    auto st = std::make_shared<LocalNnState>();
    st->X = X;
    st->y_mean = y.mean();
    st->yc = y.array() - st->y_mean;
    st->neighborhood = std::min(
        n, std::max(2, static_cast<int>(
                           spec.num("neighborhood", local_gp_neighborhood(n)))));
    const double var_y = population_variance(y);
    if (var_y < 1e-24) {
      st->degenerate = true;
      return FittedModel{name(), st, seed, 0.0};
    }

    Rng stage(seed);
    const std::uint64_t subset_seed = stage.next_u64();
    const std::uint64_t hyper_seed = stage.next_u64();

    const int subset_n = std::min(
        n, static_cast<int>(spec.num("shared_subset", 300)));
    Eigen::MatrixXd Xs;
    Eigen::VectorXd ys;
    if (subset_n == n) {
      Xs = X;
      ys = st->yc;
    } else {
      // partial Fisher-Yates for a seed-determined distinct subset
      std::vector<int> idx(n);
      std::iota(idx.begin(), idx.end(), 0);
      Rng rng(subset_seed);
      for (int i = 0; i < subset_n; ++i) {
        const int j =
            i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(idx[i], idx[j]);
      }
      idx.resize(subset_n);
      std::sort(idx.begin(), idx.end());
      Xs.resize(subset_n, X.cols());
      ys.resize(subset_n);
      for (int i = 0; i < subset_n; ++i) {
        Xs.row(i) = X.row(idx[i]);
        ys(i) = st->yc(idx[i]);
      }
    }
    const auto fitres = gp_fit_hyper({&Xs}, {&ys}, population_variance(ys),
                                     hyper_seed, gp_options_from_spec(spec));
    st->hyper = fitres.hyper;
    st->nugget = fitres.nugget;
    return FittedModel{name(), st, seed, 0.0};
  }

  PredictiveEnsemble predict(const FittedModel& model,
                             const Eigen::MatrixXd& X_test, int M,
                             std::uint64_t seed) const override {
    if (M < 2) throw DomainError("predict requires M >= 2");
    const auto st = std::static_pointer_cast<const LocalNnState>(model.state);
    PredictiveEnsemble out;
    if (st->degenerate) {
      out.draws.resize(M, static_cast<int>(X_test.rows()));
      out.draws.setConstant(st->y_mean);
      return out;
    }
    Eigen::VectorXd mean, var;
    local_nn_moments(*st, X_test, &mean, &var);
    marginal_normal_draws(mean, var, M, seed, &out);
    return out;
  }

  void moments(const FittedModel& model, const Eigen::MatrixXd& X_test,
               Eigen::VectorXd* mean, Eigen::VectorXd* var) const override {
    const auto st = std::static_pointer_cast<const LocalNnState>(model.state);
    if (st->degenerate) {
      mean->setConstant(X_test.rows(), st->y_mean);
      var->setConstant(X_test.rows(), 0.0);
      return;
    }
    local_nn_moments(*st, X_test, mean, var);
  }

 private:
  static void local_nn_moments(const LocalNnState& st,
                               const Eigen::MatrixXd& X_test,
                               Eigen::VectorXd* mean, Eigen::VectorXd* var) {
    if (X_test.cols() != st.X.cols()) {
      throw DomainError("local_nn_gp: test dimension mismatch");
    }
    const int m = static_cast<int>(X_test.rows());
    const int n = static_cast<int>(st.X.rows());
    const int k = st.neighborhood;
    mean->resize(m);
    var->resize(m);
    std::vector<std::pair<double, int>> dist(n);
    Eigen::MatrixXd Xn(k, st.X.cols());
    Eigen::VectorXd yn(k);
    for (int t = 0; t < m; ++t) {
      for (int i = 0; i < n; ++i) {
        dist[i] = {(st.X.row(i) - X_test.row(t)).squaredNorm(), i};
      }
      // total order (distance, index) keeps neighbor sets reproducible
      std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
      for (int i = 0; i < k; ++i) {
        Xn.row(i) = st.X.row(dist[i].second);
        yn(i) = st.yc(dist[i].second);
      }
      GpPosterior post;
      try {
        post = gp_posterior(Xn, yn, st.hyper, st.nugget);
      } catch (const FitFailure& e) {
        throw PredFailure(e.what());
      }
      Eigen::VectorXd mu1, var1;
      gp_predict_latent(post, st.hyper, X_test.row(t), &mu1, &var1);
      (*mean)(t) = st.y_mean + mu1(0);
      (*var)(t) = var1(0);
    }
  }
};

// ---------------------------------------------------------------------------
// rbcm: robust Bayesian committee machine over k-medoids partitions with
// shared hyperparameters maximizing the summed expert likelihoods.
// Differential-entropy weights, normalized per test point so the single-
// partition case reduces exactly to the full GP.
// ---------------------------------------------------------------------------

struct RbcmState {
  std::vector<GpPosterior> experts;
  GpHyper hyper;
  double nugget = 0.0;
  double y_mean = 0.0;
  bool degenerate = false;
};

// PAM (build + swap passes) on Euclidean distances, deterministic with ties
// broken by index.
std::vector<int> pam_assignments(const Eigen::MatrixXd& X, int k) {
  const int n = static_cast<int>(X.rows());
  k = std::min(k, n);
  auto dist = [&X](int a, int b) { return (X.row(a) - X.row(b)).norm(); };

  std::vector<int> medoids;
  medoids.reserve(k);
  // BUILD: first medoid minimizes total distance
  {
    int best_i = 0;
    double best = kInfinity;
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += dist(i, j);
      if (s < best) { best = s; best_i = i; }
    }
    medoids.push_back(best_i);
  }
  std::vector<double> d1(n);
  for (int i = 0; i < n; ++i) d1[i] = dist(i, medoids[0]);
  while (static_cast<int>(medoids.size()) < k) {
    int best_c = -1;
    double best_gain = -kInfinity;
    for (int c = 0; c < n; ++c) {
      if (std::find(medoids.begin(), medoids.end(), c) != medoids.end())
        continue;
      double gain = 0.0;
      for (int j = 0; j < n; ++j) gain += std::max(0.0, d1[j] - dist(j, c));
      if (gain > best_gain) { best_gain = gain; best_c = c; }
    }
    medoids.push_back(best_c);
    for (int j = 0; j < n; ++j) d1[j] = std::min(d1[j], dist(j, best_c));
  }

  // SWAP passes
  for (int pass = 0; pass < 10; ++pass) {
    // nearest and second-nearest medoid distances
    std::vector<double> near(n, kInfinity), second(n, kInfinity);
    std::vector<int> near_id(n, -1);
    for (int i = 0; i < n; ++i) {
      for (int mi = 0; mi < static_cast<int>(medoids.size()); ++mi) {
        const double d = dist(i, medoids[mi]);
        if (d < near[i]) {
          second[i] = near[i];
          near[i] = d;
          near_id[i] = mi;
        } else if (d < second[i]) {
          second[i] = d;
        }
      }
    }
    double best_delta = -1e-12;
    int best_m = -1, best_h = -1;
    for (int mi = 0; mi < static_cast<int>(medoids.size()); ++mi) {
      for (int h = 0; h < n; ++h) {
        if (std::find(medoids.begin(), medoids.end(), h) != medoids.end())
          continue;
        double delta = 0.0;
        for (int j = 0; j < n; ++j) {
          const double djh = dist(j, h);
          if (near_id[j] == mi) {
            delta += std::min(djh, second[j]) - near[j];
          } else if (djh < near[j]) {
            delta += djh - near[j];
          }
        }
        if (delta < best_delta) {
          best_delta = delta;
          best_m = mi;
          best_h = h;
        }
      }
    }
    if (best_m < 0) break;
    medoids[best_m] = best_h;
  }

  std::sort(medoids.begin(), medoids.end());
  std::vector<int> assign(n, 0);
  for (int i = 0; i < n; ++i) {
    double best = kInfinity;
    for (int mi = 0; mi < static_cast<int>(medoids.size()); ++mi) {
      const double d = dist(i, medoids[mi]);
      if (d < best) { best = d; assign[i] = mi; }
    }
  }
  return assign;
}

class RbcmEmulator final : public Emulator {
 public:
  std::string name() const override { return "rbcm"; }

  FittedModel fit(const EmulatorSpec& spec, const Eigen::MatrixXd& X,
                  const Eigen::VectorXd& y, std::uint64_t seed) const override {
    check_training_data(X, y, 2);
    const int n = static_cast<int>(X.rows());
    auto st = std::make_shared<RbcmState>();
    st->y_mean = y.mean();
    const Eigen::VectorXd yc = y.array() - st->y_mean;
    const double var_y = population_variance(y);
    if (var_y < 1e-24) {
      st->degenerate = true;
      return FittedModel{name(), st, seed, 0.0};
    }

    const int k = std::min(
        n, std::max(1, static_cast<int>(
                           spec.num("partitions", bcm_partition_count(n)))));
    const auto assign = pam_assignments(X, k);
    const int k_eff = *std::max_element(assign.begin(), assign.end()) + 1;
    std::vector<Eigen::MatrixXd> Xe(k_eff);
    std::vector<Eigen::VectorXd> ye(k_eff);
    for (int e = 0; e < k_eff; ++e) {
      const int ne = static_cast<int>(std::count(assign.begin(), assign.end(), e));
      Xe[e].resize(ne, X.cols());
      ye[e].resize(ne);
      int r = 0;
      for (int i = 0; i < n; ++i) {
        if (assign[i] == e) {
          Xe[e].row(r) = X.row(i);
          ye[e](r) = yc(i);
          ++r;
        }
      }
    }
    std::vector<const Eigen::MatrixXd*> Xp;
    std::vector<const Eigen::VectorXd*> yp;
    for (int e = 0; e < k_eff; ++e) {
      Xp.push_back(&Xe[e]);
      yp.push_back(&ye[e]);
    }
    const auto fitres =
        gp_fit_hyper(Xp, yp, var_y, seed, gp_options_from_spec(spec));
    st->hyper = fitres.hyper;
    st->nugget = fitres.nugget;
    st->experts.reserve(k_eff);
    for (int e = 0; e < k_eff; ++e) {
      st->experts.push_back(gp_posterior(Xe[e], ye[e], st->hyper, st->nugget));
    }
    return FittedModel{name(), st, seed, 0.0};
  }

  PredictiveEnsemble predict(const FittedModel& model,
                             const Eigen::MatrixXd& X_test, int M,
                             std::uint64_t seed) const override {
    if (M < 2) throw DomainError("predict requires M >= 2");
    const auto st = std::static_pointer_cast<const RbcmState>(model.state);
    PredictiveEnsemble out;
    if (st->degenerate) {
      out.draws.resize(M, static_cast<int>(X_test.rows()));
      out.draws.setConstant(st->y_mean);
      return out;
    }
    Eigen::VectorXd mean, var;
    rbcm_moments(*st, X_test, &mean, &var);
    marginal_normal_draws(mean, var, M, seed, &out);
    return out;
  }

  void moments(const FittedModel& model, const Eigen::MatrixXd& X_test,
               Eigen::VectorXd* mean, Eigen::VectorXd* var) const override {
    const auto st = std::static_pointer_cast<const RbcmState>(model.state);
    if (st->degenerate) {
      mean->setConstant(X_test.rows(), st->y_mean);
      var->setConstant(X_test.rows(), 0.0);
      return;
    }
    rbcm_moments(*st, X_test, mean, var);
  }

 private:
  static void rbcm_moments(const RbcmState& st, const Eigen::MatrixXd& X_test,
                           Eigen::VectorXd* mean_out, Eigen::VectorXd* var_out) {
    const int m = static_cast<int>(X_test.rows());
    const int k = static_cast<int>(st.experts.size());
    const double prior_var = std::exp(st.hyper.log_variance);
    const double tiny = 1e-15 * prior_var;

    Eigen::MatrixXd mu(k, m), v(k, m);
    for (int e = 0; e < k; ++e) {
      Eigen::VectorXd me, ve;
      gp_predict_latent(st.experts[e], st.hyper, X_test, &me, &ve);
      mu.row(e) = me.transpose();
      v.row(e) = ve.transpose();
    }

    mean_out->resize(m);
    var_out->resize(m);
    std::vector<double> beta(k);
    for (int t = 0; t < m; ++t) {
      int exact = -1;
      for (int e = 0; e < k; ++e) {
        if (v(e, t) <= tiny) { exact = e; break; }
      }
      if (exact >= 0) {
        (*mean_out)(t) = st.y_mean + mu(exact, t);
        (*var_out)(t) = std::max(v(exact, t), 0.0);
        continue;
      }
      double sum = 0.0;
      for (int e = 0; e < k; ++e) {
        beta[e] = std::max(0.0, 0.5 * (std::log(prior_var) - std::log(v(e, t))));
        sum += beta[e];
      }
      if (sum <= 1e-12) {
        std::fill(beta.begin(), beta.end(), 1.0);
        sum = static_cast<double>(k);
      }
      double prec = 0.0, wmean = 0.0;
      for (int e = 0; e < k; ++e) {
        const double w = beta[e] / sum;
        prec += w / v(e, t);
        wmean += w * mu(e, t) / v(e, t);
      }
      (*var_out)(t) = 1.0 / prec;
      (*mean_out)(t) = st.y_mean + wmean / prec;
    }
  }
};

}  // namespace

const Emulator& gp_emulator_instance() {
  static const GpEmulator e;
  return e;
}
const Emulator& sod_gp_emulator_instance() {
  static const SodGpEmulator e;
  return e;
}
const Emulator& local_nn_gp_emulator_instance() {
  static const LocalNnGpEmulator e;
  return e;
}
const Emulator& rbcm_emulator_instance() {
  static const RbcmEmulator e;
  return e;
}

}  // namespace duqbench
