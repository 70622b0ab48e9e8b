#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

namespace duqbench {

// Shared machinery for the GP-family emulators: separable squared-exponential
// kernel with per-dimension lengthscales, marginal likelihood with analytic
// gradient, and a bounded multistart quasi-Newton fit.
//
// Hyperparameters are optimized as theta = (log ls_1..log ls_p, log var).
// The nugget is not optimized; it starts at nugget_rel_init * var(y) and is
// grown by 10x on factorization failure up to nugget_rel_max * var(y).

struct GpHyper {
  Eigen::VectorXd log_lengthscales;  // size p
  double log_variance = 0.0;

  Eigen::VectorXd to_vector() const;
  static GpHyper from_vector(const Eigen::VectorXd& theta, int p);
};

struct GpOptions {
  int multistarts = 5;
  int max_iters = 30;
  double grad_tol = 3e-5;           // on the projected gradient
  double log_ls_lo = std::log(0.01);
  double log_ls_hi = std::log(10.0);
  double nugget_rel_init = 1e-6;
  double nugget_rel_max = 1e-2;
};

// K = exp(log_var) * R + nugget * I with
// R_ij = exp(-1/2 sum_d (x_id - x_jd)^2 / ls_d^2).
Eigen::MatrixXd gp_kernel(const Eigen::MatrixXd& X, const GpHyper& h,
                          double nugget);

// Cross-kernel between rows of A and rows of B (no nugget).
Eigen::MatrixXd gp_cross_kernel(const Eigen::MatrixXd& A,
                                const Eigen::MatrixXd& B, const GpHyper& h);

// Factorization cache so a line search's accepted point does not pay for a
// second Cholesky when the gradient is requested right after.
struct GpLikelihoodCache {
  Eigen::VectorXd theta;
  double nugget = 0.0;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> llts;
  std::vector<Eigen::VectorXd> alphas;
  std::vector<Eigen::MatrixXd> kernels_no_nugget;
  double value = 0.0;
  bool valid = false;
};

// Log marginal likelihood of centered responses under one or more experts
// sharing theta; grad (if non-null) receives d LML / d theta. Returns -inf
// when any expert's kernel fails to factorize at this nugget.
double gp_log_marginal_likelihood(
    const std::vector<const Eigen::MatrixXd*>& Xs,
    const std::vector<const Eigen::VectorXd*>& ycs, const GpHyper& h,
    double nugget, Eigen::VectorXd* grad,
    GpLikelihoodCache* cache = nullptr);

// Bounded minimization of f via projected L-BFGS with Armijo backtracking.
// Deterministic for a deterministic f. Returns the best point found.
struct BoundedMinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
};
BoundedMinimizeResult bounded_minimize(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>& f,
    const Eigen::VectorXd& x0, const Eigen::VectorXd& lo,
    const Eigen::VectorXd& hi, int max_iters, double grad_tol);

// Multistart hyperparameter fit over experts sharing theta (one expert for a
// plain GP). Centered responses. Throws FitFailure if no nugget level in the
// retry ladder yields a finite objective. Returns the chosen hyperparameters
// and the nugget actually used.
struct GpFitResult {
  GpHyper hyper;
  double nugget = 0.0;
};
GpFitResult gp_fit_hyper(const std::vector<const Eigen::MatrixXd*>& Xs,
                         const std::vector<const Eigen::VectorXd*>& ycs,
                         double var_y, std::uint64_t seed,
                         const GpOptions& opts);

// Posterior pieces for one expert: Cholesky factor of K and alpha = K^-1 yc.
struct GpPosterior {
  Eigen::MatrixXd X;
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::VectorXd alpha;
};

// Factorizes K(X) at the given hyper/nugget. Throws FitFailure on failure.
GpPosterior gp_posterior(const Eigen::MatrixXd& X, const Eigen::VectorXd& yc,
                         const GpHyper& h, double nugget);

// Latent predictive mean and variance at each row of X_test.
void gp_predict_latent(const GpPosterior& post, const GpHyper& h,
                       const Eigen::MatrixXd& X_test, Eigen::VectorXd* mean,
                       Eigen::VectorXd* var);

}  // namespace duqbench
