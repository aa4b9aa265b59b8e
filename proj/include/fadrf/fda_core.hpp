#pragma once

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace fadrf {

/// Evaluation points t_1 < ... < t_m on a compact interval, with trapezoidal
/// quadrature weights summing to t_m - t_1.
class Grid {
 public:
  explicit Grid(Eigen::VectorXd points);

  static std::shared_ptr<const Grid> uniform(double lo, double hi, int m);

  int size() const noexcept { return static_cast<int>(points_.size()); }
  const Eigen::VectorXd& points() const noexcept { return points_; }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  double lower() const noexcept { return points_[0]; }
  double upper() const noexcept { return points_[points_.size() - 1]; }

  bool same_as(const Grid& other) const noexcept;

 private:
  Eigen::VectorXd points_;
  Eigen::VectorXd weights_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// One curve evaluated on a shared grid.
class FunctionalSample {
 public:
  FunctionalSample(GridPtr grid, Eigen::VectorXd values);

  const GridPtr& grid() const noexcept { return grid_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  int size() const noexcept { return static_cast<int>(values_.size()); }

 private:
  GridPtr grid_;
  Eigen::VectorXd values_;
};

/// n curves on one grid, stored row-wise (n x m).
class CurveSet {
 public:
  CurveSet(GridPtr grid, Eigen::MatrixXd values);
  explicit CurveSet(std::span<const FunctionalSample> samples);

  const GridPtr& grid() const noexcept { return grid_; }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  int count() const noexcept { return static_cast<int>(values_.rows()); }
  FunctionalSample curve(int i) const;
  CurveSet subset(std::span<const int> rows) const;

 private:
  GridPtr grid_;
  Eigen::MatrixXd values_;
};

void require_same_grid(const Grid& a, const Grid& b);

double inner_product(const FunctionalSample& f, const FunctionalSample& g);

/// Quadrature inner product of raw value vectors on `grid`.
double inner_product(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& f,
                     const Eigen::Ref<const Eigen::VectorXd>& g);

double l2_norm(const FunctionalSample& f);

FunctionalSample mean_function(std::span<const FunctionalSample> samples);
FunctionalSample mean_function(const CurveSet& curves);

/// Empirical PC basis of a sample of curves.
///
/// `eigenfunctions` holds phi_j as columns (m x J), orthonormal under grid
/// quadrature. `scores(i, j)` is <Z_i - mean, phi_j>. Eigenvalues below
/// 1e-10 * lambda_1, or below 1e-13 times the mean squared norm of the raw
/// curves, are stored as exactly zero.
struct FpcaModel {
  FunctionalSample mean;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenfunctions;
  Eigen::MatrixXd scores;

  int components() const noexcept { return static_cast<int>(eigenvalues.size()); }
  /// Number of leading components with strictly positive eigenvalue.
  int positive_rank() const noexcept;
  FunctionalSample eigenfunction(int j) const;
  /// <phi_j, mean> for every retained component.
  Eigen::VectorXd mean_projections() const;
  const GridPtr& grid() const noexcept { return mean.grid(); }
};

FpcaModel fpca(const CurveSet& curves, int max_components);
FpcaModel fpca(std::span<const FunctionalSample> samples, int max_components);

Eigen::VectorXd pc_scores(const FpcaModel& model, const FunctionalSample& z);
/// Scores for every row of `curves` (rows x J).
Eigen::MatrixXd pc_scores(const FpcaModel& model, const CurveSet& curves);

}  // namespace fadrf
