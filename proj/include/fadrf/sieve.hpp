#pragma once

#include <Eigen/Dense>

namespace fadrf {

/// Affine map of each covariate onto [-1, 1] using training extremes.
class Standardizer {
 public:
  Standardizer(Eigen::VectorXd min, Eigen::VectorXd max);

  const Eigen::VectorXd& min() const noexcept { return min_; }
  const Eigen::VectorXd& max() const noexcept { return max_; }
  int dimension() const noexcept { return static_cast<int>(min_.size()); }

  /// Maps rows of `x`; results are clipped to [-1.5, 1.5] so held-out points
  /// beyond the training range stay bounded.
  Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& x) const;

  static constexpr double kClip = 1.5;

 private:
  Eigen::VectorXd min_;
  Eigen::VectorXd max_;
};

struct Standardized {
  Eigen::MatrixXd values;
  Standardizer standardizer;
};

Standardized standardize(const Eigen::Ref<const Eigen::MatrixXd>& x);

/// P_0..P_degree at `x` via the three-term recurrence.
Eigen::VectorXd legendre_values(double x, int degree);

/// Raw Legendre sieve rows: 1, then P_l(x_j) for l = 1..(k-1)/p, j = 1..p.
Eigen::MatrixXd raw_legendre_design(const Eigen::Ref<const Eigen::MatrixXd>& x_st, int k);

/// Orthonormalized Legendre sieve on standardized covariates.
///
/// `matrix` satisfies (1/n) matrix^T matrix = I and equals
/// raw_legendre_design(x_st, k) * transform, where `transform` is upper
/// triangular with a positive diagonal, so the first column stays the
/// constant 1.
struct SieveDesign {
  int k = 0;
  int p = 0;
  Eigen::MatrixXd matrix;
  Eigen::MatrixXd transform;

  /// nu_k at new standardized points using the stored training transform.
  Eigen::MatrixXd evaluate(const Eigen::Ref<const Eigen::MatrixXd>& x_st) const;
};

/// k must satisfy k = 1 + p * L for an integer L >= 0 and k <= n / 2.
bool valid_sieve_size(int k, int p) noexcept;

SieveDesign sieve_design(const Eigen::Ref<const Eigen::MatrixXd>& x_st, int k);

}  // namespace fadrf
