#pragma once

#include <memory>
#include <optional>
#include <string_view>

#include <Eigen/Dense>

#include "fadrf/dataset.hpp"
#include "fadrf/fda_core.hpp"
#include "fadrf/fsw.hpp"

namespace fadrf {

enum class Method { naive, fsw, outcome_regression, doubly_robust };

std::string_view method_name(Method m) noexcept;
Method parse_method(std::string_view name);

/// Intercept and slope coefficients of a truncated functional linear fit.
struct FlrCoefficients {
  double a_hat = 0.0;
  Eigen::VectorXd b_coeffs;
};

struct TuningRecord {
  int q = 0;
  std::optional<double> h;
  std::optional<int> k;
  std::optional<RhoFamily> rho;
};

/// Fitted ADRF E{Y*(z)} = a + <b, z>.
struct AdrfFit {
  Method method = Method::naive;
  double a_hat = 0.0;
  Eigen::VectorXd b_coeffs;
  FunctionalSample b_curve;
  std::optional<Eigen::VectorXd> theta_hat;
  TuningRecord tuning;
  std::shared_ptr<const FpcaModel> fpca;
  /// Backfitting sweeps used (outcome regression only).
  int iterations = 0;
  /// False when backfitting stopped at its sweep cap without stabilizing
  /// (only possible with BackfitOptions::accept_at_cap). Carried over to DR
  /// fits built on such an outcome regression.
  bool converged = true;
};

/// b_j = e_j / lambda_j with e_j = (1/n) sum_i (r_i - rbar) xi_ij, and
/// a = rbar - sum_j b_j <phi_j, mean>.
FlrCoefficients truncated_flr(const Eigen::Ref<const Eigen::VectorXd>& responses,
                              const FpcaModel& fpca, int q);

/// b_curve = sum_j b_j phi_j on the model grid.
FunctionalSample slope_curve(const FpcaModel& fpca, const Eigen::Ref<const Eigen::VectorXd>& b);

/// <b, Z_i> for every sample curve, computed through the stored scores.
Eigen::VectorXd slope_projections(const FpcaModel& fpca,
                                  const Eigen::Ref<const Eigen::VectorXd>& b);

AdrfFit fit_naive(const Dataset& data, std::shared_ptr<const FpcaModel> fpca, int q);

AdrfFit fit_fsw(const Dataset& data, std::shared_ptr<const FpcaModel> fpca,
                const WeightFit& weights, int q);

struct BackfitOptions {
  double tolerance = 1e-8;
  int max_iterations = 50;
  /// Return the last sweep instead of throwing when the cap is reached.
  bool accept_at_cap = false;
};

/// Partially linear outcome model Y = a + <b, Z> + theta^T X fitted by
/// backfitting from theta = 0.
AdrfFit fit_or(const Dataset& data, std::shared_ptr<const FpcaModel> fpca, int q,
               const BackfitOptions& options = {});

/// Doubly robust fit on the pseudo-outcome
/// r_i = (Y_i - E(Y|X_i,Z_i)) pi_i + a_OR + <b_OR, Z_i> + theta_OR^T Xbar.
AdrfFit fit_dr(const Dataset& data, std::shared_ptr<const FpcaModel> fpca, const AdrfFit& or_fit,
               const WeightFit& weights, int q);

/// Same as fit_dr with weights supplied as a plain vector.
AdrfFit fit_dr(const Dataset& data, std::shared_ptr<const FpcaModel> fpca, const AdrfFit& or_fit,
               const Eigen::Ref<const Eigen::VectorXd>& pi, int q);

/// The DR pseudo-outcome vector itself.
Eigen::VectorXd dr_pseudo_outcome(const Dataset& data, const FpcaModel& fpca,
                                  const AdrfFit& or_fit,
                                  const Eigen::Ref<const Eigen::VectorXd>& pi);

double adrf_eval(const AdrfFit& fit, const FunctionalSample& z);
double ate(const AdrfFit& fit, const FunctionalSample& z1, const FunctionalSample& z2);

}  // namespace fadrf
