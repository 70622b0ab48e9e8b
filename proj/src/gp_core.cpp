#include "duqbench/gp_core.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "duqbench/errors.hpp"
#include "duqbench/rng.hpp"

namespace duqbench {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;
}  // namespace

Eigen::VectorXd GpHyper::to_vector() const {
  Eigen::VectorXd v(log_lengthscales.size() + 1);
  v.head(log_lengthscales.size()) = log_lengthscales;
  v(v.size() - 1) = log_variance;
  return v;
}

GpHyper GpHyper::from_vector(const Eigen::VectorXd& theta, int p) {
  GpHyper h;
  h.log_lengthscales = theta.head(p);
  h.log_variance = theta(p);
  return h;
}

Eigen::MatrixXd gp_kernel(const Eigen::MatrixXd& X, const GpHyper& h,
                          double nugget) {
  const int p = static_cast<int>(X.cols());
  const Eigen::VectorXd inv_ls2 =
      (-2.0 * h.log_lengthscales.array()).exp().matrix();
  const double var = std::exp(h.log_variance);
  // scale columns so that squared distances in scaled space give the kernel
  Eigen::MatrixXd Xs = X;
  for (int d = 0; d < p; ++d) Xs.col(d) *= std::sqrt(inv_ls2(d));
  const Eigen::VectorXd sq = Xs.rowwise().squaredNorm();
  Eigen::MatrixXd K = -2.0 * (Xs * Xs.transpose());
  K.colwise() += sq;
  K.rowwise() += sq.transpose();
  K = (-0.5 * K.cwiseMax(0.0).array()).exp().matrix() * var;
  K.diagonal().array() += nugget;
  return K;
}

Eigen::MatrixXd gp_cross_kernel(const Eigen::MatrixXd& A,
                                const Eigen::MatrixXd& B, const GpHyper& h) {
  const int p = static_cast<int>(A.cols());
  const Eigen::VectorXd inv_ls2 =
      (-2.0 * h.log_lengthscales.array()).exp().matrix();
  const double var = std::exp(h.log_variance);
  Eigen::MatrixXd As = A, Bs = B;
  for (int d = 0; d < p; ++d) {
    const double s = std::sqrt(inv_ls2(d));
    As.col(d) *= s;
    Bs.col(d) *= s;
  }
  const Eigen::VectorXd sa = As.rowwise().squaredNorm();
  const Eigen::VectorXd sb = Bs.rowwise().squaredNorm();
  Eigen::MatrixXd K = -2.0 * (As * Bs.transpose());
  K.colwise() += sa;
  K.rowwise() += sb.transpose();
  return (-0.5 * K.cwiseMax(0.0).array()).exp().matrix() * var;
}

double gp_log_marginal_likelihood(
    const std::vector<const Eigen::MatrixXd*>& Xs,
    const std::vector<const Eigen::VectorXd*>& ycs, const GpHyper& h,
    double nugget, Eigen::VectorXd* grad, GpLikelihoodCache* cache) {
  const int p = static_cast<int>(h.log_lengthscales.size());
  if (grad) grad->setZero(p + 1);
  const Eigen::VectorXd theta = h.to_vector();
  const bool hit = cache && cache->valid && cache->nugget == nugget &&
                   cache->theta.size() == theta.size() &&
                   cache->theta == theta;

  double total = 0.0;
  const Eigen::VectorXd ls2 = (2.0 * h.log_lengthscales.array()).exp().matrix();
  if (cache && !hit) {
    cache->valid = false;
    cache->llts.assign(Xs.size(), {});
    cache->alphas.assign(Xs.size(), {});
    cache->kernels_no_nugget.assign(Xs.size(), {});
  }

  for (std::size_t e = 0; e < Xs.size(); ++e) {
    const Eigen::MatrixXd& X = *Xs[e];
    const Eigen::VectorXd& yc = *ycs[e];
    const int n = static_cast<int>(X.rows());

    const Eigen::LLT<Eigen::MatrixXd>* llt;
    const Eigen::VectorXd* alpha;
    Eigen::LLT<Eigen::MatrixXd> local_llt;
    Eigen::VectorXd local_alpha;
    Eigen::MatrixXd local_kr;
    const Eigen::MatrixXd* kr = nullptr;
    if (hit) {
      llt = &cache->llts[e];
      alpha = &cache->alphas[e];
      if (grad) kr = &cache->kernels_no_nugget[e];
    } else {
      Eigen::MatrixXd K = gp_kernel(X, h, nugget);
      local_llt.compute(K);
      if (local_llt.info() != Eigen::Success) return kNegInf;
      local_alpha = local_llt.solve(yc);
      K.diagonal().array() -= nugget;
      if (cache) {
        cache->llts[e] = local_llt;
        cache->alphas[e] = local_alpha;
        cache->kernels_no_nugget[e] = std::move(K);
        llt = &cache->llts[e];
        alpha = &cache->alphas[e];
        kr = &cache->kernels_no_nugget[e];
      } else {
        llt = &local_llt;
        alpha = &local_alpha;
        local_kr = std::move(K);
        kr = &local_kr;
      }
    }
    if (!hit) {
      const Eigen::MatrixXd& lfac = llt->matrixLLT();
      double logdet = 0.0;
      for (int i = 0; i < n; ++i) logdet += std::log(lfac(i, i));
      total += -0.5 * yc.dot(*alpha) - logdet - 0.5 * n * kLog2Pi;
    }

    if (grad) {
      // W = alpha alpha^T - K^-1; dLML/dtheta = 1/2 tr(W dK/dtheta)
      Eigen::MatrixXd W = -llt->solve(Eigen::MatrixXd::Identity(n, n));
      W.noalias() += (*alpha) * alpha->transpose();
      // sum_ij A_ij (x_id - x_jd)^2 = 2 (x_d^2)' A1 - 2 x_d' A x_d for the
      // symmetric A = W o Kr, batched over dimensions with one GEMM
      const Eigen::MatrixXd A = W.cwiseProduct(*kr);
      const Eigen::VectorXd a1 = A.rowwise().sum();
      const Eigen::MatrixXd AX = A * X;
      for (int d = 0; d < p; ++d) {
        const double acc = 2.0 * X.col(d).cwiseAbs2().dot(a1) -
                           2.0 * X.col(d).dot(AX.col(d));
        (*grad)(d) += 0.5 * acc / ls2(d);
      }
      (*grad)(p) += 0.5 * A.sum();
    }
  }
  if (hit) {
    total = cache->value;
  } else if (cache) {
    cache->theta = theta;
    cache->nugget = nugget;
    cache->value = total;
    cache->valid = true;
  }
  return total;
}

BoundedMinimizeResult bounded_minimize(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>& f,
    const Eigen::VectorXd& x0, const Eigen::VectorXd& lo,
    const Eigen::VectorXd& hi, int max_iters, double grad_tol) {
  const int dim = static_cast<int>(x0.size());
  auto clamp = [&](Eigen::VectorXd v) {
    for (int i = 0; i < dim; ++i) v(i) = std::min(hi(i), std::max(lo(i), v(i)));
    return v;
  };

  Eigen::VectorXd x = clamp(x0);
  Eigen::VectorXd g(dim);
  double fx = f(x, &g);
  BoundedMinimizeResult res{x, fx, 0};
  if (!std::isfinite(fx)) return res;

  const int hist = 8;
  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  double last_step = 1.0;

  for (int iter = 0; iter < max_iters; ++iter) {
    // projected gradient for the convergence check
    Eigen::VectorXd pg = g;
    for (int i = 0; i < dim; ++i) {
      if (x(i) <= lo(i) && pg(i) > 0.0) pg(i) = 0.0;
      if (x(i) >= hi(i) && pg(i) < 0.0) pg(i) = 0.0;
    }
    if (pg.lpNorm<Eigen::Infinity>() < grad_tol * (1.0 + std::fabs(fx))) break;

    // two-loop recursion on the projected gradient, so active bounds do not
    // pollute the direction
    Eigen::VectorXd q = pg;
    std::vector<double> alphas(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alphas[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alphas[i] * y_hist[i];
    }
    if (!s_hist.empty()) {
      const double gamma =
          s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      q *= gamma;
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alphas[i] - beta) * s_hist[i];
    }
    Eigen::VectorXd dir = -q;
    if (dir.dot(g) >= 0.0) dir = -g;  // fall back to steepest descent

    // Armijo backtracking on the projected step; trial points use cheap
    // function-only evaluations, the gradient is computed once on acceptance.
    // The initial trial reuses the scale of the previously accepted step
    // (doubled, capped at 1), which saves most halvings when the likelihood
    // is extremely curved along some directions.
    double step = std::min(1.0, 2.0 * last_step);
    step = std::min(step, 8.0 / std::max(1e-12, dir.lpNorm<Eigen::Infinity>()));
    const double c1 = 1e-4;
    bool moved = false;
    Eigen::VectorXd x_new, g_new(dim);
    double f_new = 0.0;
    for (int bt = 0; bt < 40; ++bt) {
      x_new = clamp(x + step * dir);
      const Eigen::VectorXd delta = x_new - x;
      if (delta.lpNorm<Eigen::Infinity>() < 1e-15) break;
      f_new = f(x_new, nullptr);
      if (std::isfinite(f_new) && f_new <= fx + c1 * g.dot(delta)) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
    last_step = step;
    f_new = f(x_new, &g_new);

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(yv);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > hist) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    x = x_new;
    fx = f_new;
    g = g_new;
    res.iterations = iter + 1;
    if (fx < res.value) {
      res.x = x;
      res.value = fx;
    }
  }
  if (fx < res.value) {
    res.x = x;
    res.value = fx;
  }
  return res;
}

GpFitResult gp_fit_hyper(const std::vector<const Eigen::MatrixXd*>& Xs,
                         const std::vector<const Eigen::VectorXd*>& ycs,
                         double var_y, std::uint64_t seed,
                         const GpOptions& opts) {
  if (Xs.empty() || Xs.size() != ycs.size()) {
    throw DomainError("gp_fit_hyper: mismatched expert lists");
  }
  const int p = static_cast<int>(Xs[0]->cols());
  const double vy = std::max(var_y, 1e-300);

  Eigen::VectorXd lo(p + 1), hi(p + 1);
  lo.head(p).setConstant(opts.log_ls_lo);
  hi.head(p).setConstant(opts.log_ls_hi);
  lo(p) = std::log(vy) - 18.0;  // log-variance effectively free
  hi(p) = std::log(vy) + 9.0;

  for (double rel = opts.nugget_rel_init; rel <= opts.nugget_rel_max * 1.0001;
       rel *= 10.0) {
    const double nugget = rel * vy;
    GpLikelihoodCache cache;
    auto objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
      const GpHyper h = GpHyper::from_vector(theta, p);
      const double lml =
          gp_log_marginal_likelihood(Xs, ycs, h, nugget, grad, &cache);
      if (grad) *grad = -*grad;
      return -lml;
    };

    Rng rng(seed);
    bool any_finite = false;
    double best_val = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_theta;
    for (int s = 0; s < opts.multistarts; ++s) {
      Eigen::VectorXd theta0(p + 1);
      if (s == 0) {
        theta0.head(p).setConstant(std::log(0.5));
        theta0(p) = std::log(vy);
      } else {
        for (int d = 0; d < p; ++d) {
          theta0(d) = std::log(0.05) + rng.uniform() * std::log(2.0 / 0.05);
        }
        theta0(p) = std::log(vy) + 2.0 * (rng.uniform() - 0.5);
      }
      const auto r = bounded_minimize(objective, theta0, lo, hi,
                                      opts.max_iters, opts.grad_tol);
      if (std::isfinite(r.value)) {
        any_finite = true;
        if (r.value < best_val) {
          best_val = r.value;
          best_theta = r.x;
        }
      }
    }
    if (any_finite) {
      GpFitResult out;
      out.hyper = GpHyper::from_vector(best_theta, p);
      out.nugget = nugget;
      return out;
    }
  }
  throw FitFailure("gp: kernel factorization failed at every nugget level");
}

GpPosterior gp_posterior(const Eigen::MatrixXd& X, const Eigen::VectorXd& yc,
                         const GpHyper& h, double nugget) {
  GpPosterior post;
  post.X = X;
  Eigen::MatrixXd K = gp_kernel(X, h, nugget);
  post.llt.compute(K);
  if (post.llt.info() != Eigen::Success) {
    throw FitFailure("gp: posterior factorization failed");
  }
  post.alpha = post.llt.solve(yc);
  return post;
}

void gp_predict_latent(const GpPosterior& post, const GpHyper& h,
                       const Eigen::MatrixXd& X_test, Eigen::VectorXd* mean,
                       Eigen::VectorXd* var) {
  const Eigen::MatrixXd Ks = gp_cross_kernel(post.X, X_test, h);
  *mean = Ks.transpose() * post.alpha;
  const double prior_var = std::exp(h.log_variance);
  const Eigen::MatrixXd v = post.llt.matrixL().solve(Ks);
  *var = (prior_var - v.colwise().squaredNorm().array())
             .max(0.0)
             .matrix()
             .transpose();
}

}  // namespace duqbench
