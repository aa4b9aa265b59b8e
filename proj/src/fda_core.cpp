#include "fadrf/fda_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fadrf/errors.hpp"

namespace fadrf {

namespace {

constexpr double kEigenClampRatio = 1e-10;

void require_finite(const Eigen::Ref<const Eigen::MatrixXd>& values, const char* what) {
  if (!values.allFinite()) {
    throw Error(ErrorCategory::data, std::string(what) + " contains non-finite values");
  }
}

}  // namespace

Grid::Grid(Eigen::VectorXd points) : points_(std::move(points)) {
  const auto m = points_.size();
  if (m < 3) {
    throw Error(ErrorCategory::grid, "grid needs at least 3 points, got " + std::to_string(m));
  }
  if (!points_.allFinite()) {
    throw Error(ErrorCategory::grid, "grid points must be finite");
  }
  for (Eigen::Index i = 1; i < m; ++i) {
    if (!(points_[i] > points_[i - 1])) {
      throw Error(ErrorCategory::grid,
                  "grid points must be strictly increasing (position " + std::to_string(i) + ")");
    }
  }
  weights_.resize(m);
  weights_[0] = 0.5 * (points_[1] - points_[0]);
  weights_[m - 1] = 0.5 * (points_[m - 1] - points_[m - 2]);
  for (Eigen::Index i = 1; i + 1 < m; ++i) {
    weights_[i] = 0.5 * (points_[i + 1] - points_[i - 1]);
  }
}

std::shared_ptr<const Grid> Grid::uniform(double lo, double hi, int m) {
  if (m < 3 || !(hi > lo)) {
    throw Error(ErrorCategory::grid, "uniform grid needs m >= 3 and hi > lo");
  }
  Eigen::VectorXd pts(m);
  const double step = (hi - lo) / (m - 1);
  for (int i = 0; i < m; ++i) pts[i] = lo + step * i;
  pts[m - 1] = hi;
  return std::make_shared<const Grid>(std::move(pts));
}

bool Grid::same_as(const Grid& other) const noexcept {
  if (this == &other) return true;
  return points_.size() == other.points_.size() && points_ == other.points_;
}

void require_same_grid(const Grid& a, const Grid& b) {
  if (!a.same_as(b)) {
    throw Error(ErrorCategory::grid_mismatch, "functional samples live on different grids");
  }
}

FunctionalSample::FunctionalSample(GridPtr grid, Eigen::VectorXd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) throw Error(ErrorCategory::grid, "functional sample without a grid");
  if (values_.size() != grid_->size()) {
    throw Error(ErrorCategory::grid_mismatch,
                "curve has " + std::to_string(values_.size()) + " values but grid has " +
                    std::to_string(grid_->size()) + " points");
  }
  require_finite(values_, "curve");
}

CurveSet::CurveSet(GridPtr grid, Eigen::MatrixXd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) throw Error(ErrorCategory::grid, "curve set without a grid");
  if (values_.cols() != grid_->size()) {
    throw Error(ErrorCategory::grid_mismatch,
                "curve matrix has " + std::to_string(values_.cols()) + " columns but grid has " +
                    std::to_string(grid_->size()) + " points");
  }
  require_finite(values_, "curve set");
}

CurveSet::CurveSet(std::span<const FunctionalSample> samples) {
  if (samples.empty()) throw Error(ErrorCategory::empty_input, "no curves supplied");
  grid_ = samples.front().grid();
  values_.resize(static_cast<Eigen::Index>(samples.size()), grid_->size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    require_same_grid(*grid_, *samples[i].grid());
    values_.row(static_cast<Eigen::Index>(i)) = samples[i].values().transpose();
  }
}

FunctionalSample CurveSet::curve(int i) const {
  return FunctionalSample(grid_, values_.row(i).transpose());
}

CurveSet CurveSet::subset(std::span<const int> rows) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), values_.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = values_.row(rows[r]);
  }
  return CurveSet(grid_, std::move(out));
}

double inner_product(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& f,
                     const Eigen::Ref<const Eigen::VectorXd>& g) {
  const auto& w = grid.weights();
  double s = 0.0;
  for (Eigen::Index t = 0; t < w.size(); ++t) s += w[t] * (f[t] * g[t]);
  return s;
}

double inner_product(const FunctionalSample& f, const FunctionalSample& g) {
  require_same_grid(*f.grid(), *g.grid());
  return inner_product(*f.grid(), f.values(), g.values());
}

double l2_norm(const FunctionalSample& f) { return std::sqrt(inner_product(f, f)); }

FunctionalSample mean_function(const CurveSet& curves) {
  if (curves.count() == 0) throw Error(ErrorCategory::empty_input, "mean of zero curves");
  return FunctionalSample(curves.grid(), curves.values().colwise().mean().transpose());
}

FunctionalSample mean_function(std::span<const FunctionalSample> samples) {
  if (samples.empty()) throw Error(ErrorCategory::empty_input, "mean of zero curves");
  return mean_function(CurveSet(samples));
}

int FpcaModel::positive_rank() const noexcept {
  int r = 0;
  while (r < eigenvalues.size() && eigenvalues[r] > 0.0) ++r;
  return r;
}

FunctionalSample FpcaModel::eigenfunction(int j) const {
  return FunctionalSample(grid(), eigenfunctions.col(j));
}

Eigen::VectorXd FpcaModel::mean_projections() const {
  const auto& w = grid()->weights();
  return eigenfunctions.transpose() * w.cwiseProduct(mean.values());
}

FpcaModel fpca(const CurveSet& curves, int max_components) {
  const int n = curves.count();
  const int m = curves.grid()->size();
  if (n < 2) throw Error(ErrorCategory::parameter, "fpca needs at least 2 curves");
  if (max_components < 1 || max_components > std::min(n, m)) {
    throw Error(ErrorCategory::parameter,
                "max_components must lie in [1, " + std::to_string(std::min(n, m)) + "], got " +
                    std::to_string(max_components));
  }
  require_finite(curves.values(), "fpca input");

  FunctionalSample mean = mean_function(curves);
  const Eigen::MatrixXd centered = curves.values().rowwise() - mean.values().transpose();
  const Eigen::VectorXd& w = curves.grid()->weights();
  const Eigen::VectorXd sw = w.cwiseSqrt();

  // Symmetric form W^{1/2} G W^{1/2} of the discretized covariance operator.
  const Eigen::MatrixXd scaled = centered * sw.asDiagonal();
  const Eigen::MatrixXd op = (scaled.transpose() * scaled) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(op);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCategory::data, "eigen-decomposition of the covariance operator failed");
  }

  const int J = max_components;
  Eigen::VectorXd values(J);
  Eigen::MatrixXd funcs(m, J);
  for (int j = 0; j < J; ++j) {
    const int src = m - 1 - j;  // solver sorts ascending
    values[j] = solver.eigenvalues()[src];
    Eigen::VectorXd phi = solver.eigenvectors().col(src).cwiseQuotient(sw);
    phi /= std::sqrt(w.dot(phi.cwiseProduct(phi)));
    Eigen::Index arg = 0;
    phi.cwiseAbs().maxCoeff(&arg);
    if (phi[arg] < 0.0) phi = -phi;
    funcs.col(j) = phi;
  }
  // Rounding in the centred curves leaves eigenvalues of order eps times
  // their raw magnitude even when every curve is the same.
  const double raw_scale = (curves.values() * sw.asDiagonal()).squaredNorm() / n;
  const double floor = std::max(kEigenClampRatio * std::max(values[0], 0.0), 1e-13 * raw_scale);
  for (int j = 0; j < J; ++j) {
    if (!(values[j] > floor)) values[j] = 0.0;
  }

  Eigen::MatrixXd scores = centered * w.asDiagonal() * funcs;
  return FpcaModel{std::move(mean), std::move(values), std::move(funcs), std::move(scores)};
}

FpcaModel fpca(std::span<const FunctionalSample> samples, int max_components) {
  if (samples.empty()) throw Error(ErrorCategory::empty_input, "fpca of zero curves");
  return fpca(CurveSet(samples), max_components);
}

Eigen::VectorXd pc_scores(const FpcaModel& model, const FunctionalSample& z) {
  require_same_grid(*model.grid(), *z.grid());
  const Eigen::VectorXd& w = model.grid()->weights();
  return model.eigenfunctions.transpose() * w.cwiseProduct(z.values() - model.mean.values());
}

Eigen::MatrixXd pc_scores(const FpcaModel& model, const CurveSet& curves) {
  require_same_grid(*model.grid(), *curves.grid());
  const Eigen::VectorXd& w = model.grid()->weights();
  const Eigen::MatrixXd centered = curves.values().rowwise() - model.mean.values().transpose();
  return centered * w.asDiagonal() * model.eigenfunctions;
}

}  // namespace fadrf
