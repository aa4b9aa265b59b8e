#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fadrf/dataset.hpp"
#include "fadrf/estimators.hpp"
#include "fadrf/fsw.hpp"

namespace fadrf {

/// L-fold cross-validation settings. Empty grids are filled by
/// resolve_cv_config: h = {0.25, 0.5, 1, 2} x median pairwise distance,
/// k = {p+1, 2p+1, 3p+1}, q = {1..8}.
struct CvConfig {
  int folds = 10;
  std::vector<double> h_grid;
  std::vector<int> k_grid;
  std::vector<int> q_grid;
  std::uint64_t seed = 1;
  RhoFamily rho;
  SolverOptions solver;
  BackfitOptions backfit;
};

/// Fold label in [0, L) for each of n observations: a seeded shuffle dealt
/// round-robin, so fold sizes differ by at most one.
std::vector<int> make_folds(int n, int folds, std::uint64_t seed);

double median_pairwise_distance(const Eigen::Ref<const Eigen::MatrixXd>& distances);

CvConfig resolve_cv_config(const Dataset& data, CvConfig config);

/// CV_FSW losses for several truncation levels at once (entries are +inf
/// where q exceeds a training fold's covariance rank).
std::vector<double> cv_losses_fsw(const Dataset& data, double h, int k, std::span<const int> qs,
                                  std::span<const int> folds, RhoFamily rho = RhoFamily(),
                                  const SolverOptions& solver = {});

double cv_loss_fsw(const Dataset& data, double h, int k, int q, std::span<const int> folds,
                   RhoFamily rho = RhoFamily(), const SolverOptions& solver = {});

double cv_loss_or(const Dataset& data, int q, std::span<const int> folds,
                  const BackfitOptions& backfit = {});

std::vector<double> cv_losses_dr(const Dataset& data, double h, int k, std::span<const int> qs,
                                 std::span<const int> folds, RhoFamily rho = RhoFamily(),
                                 const SolverOptions& solver = {},
                                 const BackfitOptions& backfit = {});

double cv_loss_dr(const Dataset& data, double h, int k, int q, std::span<const int> folds,
                  RhoFamily rho = RhoFamily(), const SolverOptions& solver = {},
                  const BackfitOptions& backfit = {});

struct TuningCandidate {
  double h = 0.0;  // 0 when the criterion has no bandwidth
  int k = 0;       // 0 when the criterion has no sieve
  int q = 0;
  double loss = 0.0;  // +inf on failure
  std::string error;
};

struct TuningResult {
  double h = 0.0;
  int k = 0;
  int q = 0;
  double loss = 0.0;
  std::vector<TuningCandidate> table;
};

/// Exhaustive grid search. Naive and FSW use CV_FSW over (h, k, q); OR uses
/// CV_OR over q; DR uses CV_DR over (h, k, q). Ties go to the smallest q,
/// then k, then h.
TuningResult select_tuning(const Dataset& data, const CvConfig& config, Method method);

}  // namespace fadrf
