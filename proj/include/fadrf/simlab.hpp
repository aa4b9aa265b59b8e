#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fadrf/dataset.hpp"
#include "fadrf/estimators.hpp"
#include "fadrf/tuning.hpp"

namespace fadrf {

enum class SimModelId { i, ii, iii, iv };

std::string_view model_name(SimModelId id) noexcept;
SimModelId parse_model(std::string_view name);

/// One draw from the simulation design. Curves are
/// Z_i = sum_{j<=6} A_ij phi_j with phi_{2m-1} = sqrt2 sin(2 m pi t),
/// phi_{2m} = sqrt2 cos(2 m pi t) and A_ij = sd_j U_ij.
struct SimModel {
  SimModelId id = SimModelId::i;
  int n = 200;
  std::uint64_t seed = 1;
  int grid_points = 101;
  /// Standard deviations of the covariate and outcome noise (1 and 5).
  double covariate_noise_sd = 1.0;
  double outcome_noise_sd = 5.0;
  /// Draw X independently of Z (U1 for X comes from a separate stream).
  bool independent_covariates = false;
};

struct SimulatedData {
  Dataset data;
  FunctionalSample b_true;
  double a_true = 1.0;
  /// Linear covariate effect when the outcome model is linear in X.
  std::optional<Eigen::VectorXd> theta_true;
  /// KL coefficients A (n x 6).
  Eigen::MatrixXd coefficients;
};

/// Standard deviations of the six KL coefficients.
Eigen::VectorXd kl_coefficient_sds();

/// The six Fourier basis functions on `grid` (m x 6).
Eigen::MatrixXd fourier_basis(const Grid& grid);

/// b(t) = 2 phi_1 + phi_2 + phi_3 / 2 + phi_4 / 2.
FunctionalSample true_slope(const GridPtr& grid);

SimulatedData generate(const SimModel& model);

double ise(const FunctionalSample& b_hat, const FunctionalSample& b_true);

struct BenchmarkConfig {
  std::vector<SimModelId> models{SimModelId::i, SimModelId::ii, SimModelId::iii, SimModelId::iv};
  std::vector<int> sizes{200, 500};
  std::vector<Method> methods{Method::fsw, Method::outcome_regression, Method::doubly_robust,
                              Method::naive};
  int replications = 200;
  std::uint64_t base_seed = 20240601;
  CvConfig cv;
  /// Backfitting settings for the outcome-regression fits. Designs whose
  /// covariates lie (nearly) in the span of the PC scores never stabilize,
  /// so the benchmark keeps the capped sweep and counts it.
  BackfitOptions backfit{1e-8, 50, true};
  int grid_points = 101;
};

/// Outcome of one method in one replication; `ise` is NaN when the fit failed.
struct ReplicationFit {
  double ise = 0.0;
  double a_hat = 0.0;
  std::optional<Eigen::VectorXd> theta_hat;
  bool converged = true;
  std::string error;
};

struct Replication {
  std::uint64_t seed = 0;
  double h = 0.0;
  int k = 0;
  int q = 0;
  std::string error;  // set when tuning itself failed
  std::vector<ReplicationFit> fits;  // aligned with BenchmarkConfig::methods
};

struct BenchmarkCell {
  SimModelId model;
  int n = 0;
  Method method;
  double mean_ise100 = 0.0;
  double sd_ise100 = 0.0;
  int replications = 0;
  int failures = 0;
  /// Fits whose backfitting stopped at the sweep cap.
  int unconverged = 0;
};

struct BenchmarkRun {
  SimModelId model;
  int n = 0;
  std::vector<Replication> replications;
};

struct BenchmarkReport {
  std::vector<Method> methods;
  std::vector<BenchmarkCell> cells;
  std::vector<BenchmarkRun> runs;

  const BenchmarkCell& cell(SimModelId model, int n, Method method) const;
};

/// Runs every (model, n) design for the configured replications; replication
/// r uses seed base_seed + r. Throws a benchmark error when more than 5% of
/// the fits of any (model, n, method) cell fail.
BenchmarkReport run_benchmark(const BenchmarkConfig& config);

/// One row per (model, n, method) with mean and sd of ISE x 100.
std::string format_report(const BenchmarkReport& report);
std::string format_report_csv(const BenchmarkReport& report);

}  // namespace fadrf
