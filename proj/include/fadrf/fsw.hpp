#pragma once

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fadrf/dataset.hpp"
#include "fadrf/fda_core.hpp"
#include "fadrf/sieve.hpp"

namespace fadrf {

enum class RhoKind { exponential_tilting, empirical_likelihood, continuous_updating };

/// Strictly concave generator of the balancing dual together with its first
/// two derivatives. Weights are rho'(eta^T nu).
class RhoFamily {
 public:
  constexpr explicit RhoFamily(RhoKind kind = RhoKind::exponential_tilting) : kind_(kind) {}

  static RhoFamily parse(std::string_view name);

  RhoKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept;

  double value(double v) const noexcept;
  double first(double v) const noexcept;
  double second(double v) const noexcept;
  bool in_domain(double v) const noexcept;
  /// The argument at which rho' equals 1 (uniform weight).
  double unit_weight_argument() const noexcept;

  friend bool operator==(RhoFamily a, RhoFamily b) noexcept { return a.kind_ == b.kind_; }

 private:
  RhoKind kind_;
};

/// Quadrature L2 distances between every pair of curves.
Eigen::MatrixXd pairwise_distances(const CurveSet& curves);
Eigen::MatrixXd pairwise_distances(std::span<const FunctionalSample> samples);
/// Distances from each row of `a` to each row of `b` (a.count() x b.count()).
Eigen::MatrixXd cross_distances(const CurveSet& a, const CurveSet& b);

/// Gaussian kernel weights exp{-(d/h)^2} normalized to sum to one. Entry
/// `exclude` (if >= 0) gets weight zero.
Eigen::VectorXd kernel_weights(const Eigen::Ref<const Eigen::VectorXd>& distances, double h,
                               int exclude = -1);

struct SolverOptions {
  double tolerance = 1e-8;
  int max_iterations = 100;
  double initial_damping = 1e-10;
  double max_damping = 1e10;
};

struct LocalDualSolution {
  Eigen::VectorXd eta;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// H(eta) = sum_j w_j rho(eta^T nu_j) - eta^T target, skipping rows with w_j == 0.
double local_dual_objective(const Eigen::Ref<const Eigen::VectorXd>& eta,
                            const Eigen::Ref<const Eigen::MatrixXd>& nu,
                            const Eigen::Ref<const Eigen::VectorXd>& w,
                            const Eigen::Ref<const Eigen::VectorXd>& target, RhoFamily rho);

/// Gradient of local_dual_objective: the kernel-weighted sieve moment residual.
Eigen::VectorXd local_dual_gradient(const Eigen::Ref<const Eigen::VectorXd>& eta,
                                    const Eigen::Ref<const Eigen::MatrixXd>& nu,
                                    const Eigen::Ref<const Eigen::VectorXd>& w,
                                    const Eigen::Ref<const Eigen::VectorXd>& target,
                                    RhoFamily rho);

/// Maximizes the local dual by damped Newton with backtracking. Never throws
/// on non-convergence; the caller inspects `converged`.
LocalDualSolution solve_local_dual(const Eigen::Ref<const Eigen::MatrixXd>& nu,
                                   const Eigen::Ref<const Eigen::VectorXd>& w,
                                   const Eigen::Ref<const Eigen::VectorXd>& target, RhoFamily rho,
                                   const SolverOptions& options = {});

/// Leave-one-out dual at observation i: neighbors j != i weighted by the
/// kernel on d(Z_j, Z_i)/h, target the mean of nu over j != i.
/// Throws ConvergenceError when the gradient tolerance is not met.
LocalDualSolution fit_local_weight(int i, const Eigen::Ref<const Eigen::MatrixXd>& distances,
                                   const SieveDesign& design, double h, RhoFamily rho,
                                   const SolverOptions& options = {});

struct WeightFit {
  Eigen::VectorXd pi;      // clipped into [kMinWeight, kMaxWeight]
  Eigen::VectorXd raw_pi;  // rho'(eta_i^T nu_i) before clipping
  Eigen::MatrixXd eta;     // n x k
  double h = 0.0;
  int k = 0;
  RhoFamily rho;
  Eigen::VectorXd gradient_norm;
  Eigen::VectorXi iterations;
  std::vector<char> converged;
  std::vector<char> clipped;

  int size() const noexcept { return static_cast<int>(pi.size()); }
  int failures() const noexcept;

  static constexpr double kMinWeight = 1e-3;
  static constexpr double kMaxWeight = 1e3;
};

/// Weights at every sample point from precomputed distances and sieve.
WeightFit estimate_weights(const Eigen::Ref<const Eigen::MatrixXd>& distances,
                           const SieveDesign& design, double h, RhoFamily rho,
                           const SolverOptions& options = {});

/// Convenience overload: standardizes X, builds the k-term sieve and the
/// distance matrix from the dataset.
WeightFit estimate_weights(const Dataset& data, double h, int k,
                           RhoFamily rho = RhoFamily(), const SolverOptions& options = {});

struct HeldOutWeights {
  Eigen::VectorXd pi;
  Eigen::VectorXd raw_pi;
  std::vector<char> converged;
};

/// Weights at points outside the training sample. Row r of `distances`
/// holds d(Z_train_j, z_r); each dual uses all training neighbors and the
/// training mean of nu as target, and the weight is rho'(eta^T nu_r).
HeldOutWeights held_out_weights(const Eigen::Ref<const Eigen::MatrixXd>& distances,
                                const SieveDesign& train_design,
                                const Eigen::Ref<const Eigen::MatrixXd>& test_nu, double h,
                                RhoFamily rho, const SolverOptions& options = {});

}  // namespace fadrf
