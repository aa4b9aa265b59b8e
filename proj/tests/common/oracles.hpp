#pragma once

// Reference computations written without the library's numerical kernels.
// They favour plain loops over speed and share no code with src/.

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

struct EigenPairs {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns, Euclidean unit norm
};

/// Cyclic Jacobi rotations on a symmetric matrix.
EigenPairs jacobi_eigen(Eigen::MatrixXd a, double tol = 1e-15, int max_sweeps = 100);

/// Composite Simpson rule for f on [lo, hi] with an even number of panels.
template <class F>
double simpson(F f, double lo, double hi, int panels) {
  const double h = (hi - lo) / panels;
  double s = f(lo) + f(hi);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return s * h / 3.0;
}

/// Trapezoid weights on arbitrary points.
Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& t);

/// Leading eigenpairs of the quadrature-weighted covariance operator of the
/// rows of `curves`, returned as functions with unit quadrature norm.
struct Fpca {
  Eigen::VectorXd mean;
  Eigen::VectorXd values;
  Eigen::MatrixXd functions;  // m x m
};
Fpca fpca(const Eigen::MatrixXd& curves, const Eigen::VectorXd& w);

/// Maximizes (1/sum w) sum_j w_j rho(eta^T nu_j) - eta^T target with
/// rho(v) = -exp(-v-1) by plain gradient ascent with backtracking.
Eigen::VectorXd dual_gradient_ascent(const Eigen::MatrixXd& nu, const Eigen::VectorXd& w,
                                     const Eigen::VectorXd& target, double grad_tol = 1e-12,
                                     int max_iter = 2000000);

/// Exponential-tilting dual by Newton steps written with explicit loops.
Eigen::VectorXd dual_newton(const Eigen::MatrixXd& nu, const Eigen::VectorXd& w,
                            const Eigen::VectorXd& target);

/// Inputs of the small hand-enumerated cross-validation checks.
struct SmallInstance {
  Eigen::VectorXd t;        // grid
  Eigen::MatrixXd z;        // n x m
  Eigen::MatrixXd x;        // n x p
  Eigen::VectorXd y;
  std::vector<int> folds;   // labels
};

/// Deterministic n = 12 instance on an 11-point grid with one covariate.
SmallInstance handcrafted12();

/// Cross-validation losses recomputed term by term.
/// FSW with k = 1 (all weights one).
double cv_fsw_k1(const SmallInstance& s, int q);
/// OR: the backfitting fixed point is the joint least-squares fit of Y on
/// (1, scores, X).
double cv_or(const SmallInstance& s, int q);
/// DR with a (1, x) sieve and Gaussian kernel bandwidth h.
double cv_dr_linear_sieve(const SmallInstance& s, int q, double h);

}  // namespace oracle
