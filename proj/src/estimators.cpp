#include "fadrf/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fadrf/errors.hpp"

namespace fadrf {

namespace {

void require_aligned(const Dataset& data, const FpcaModel& fpca) {
  if (fpca.scores.rows() != data.size()) {
    throw Error(ErrorCategory::alignment, "FPCA model has " + std::to_string(fpca.scores.rows()) +
                                              " score rows but dataset has " +
                                              std::to_string(data.size()) + " observations");
  }
  require_same_grid(*fpca.grid(), *data.grid());
}

AdrfFit make_fit(Method method, const FlrCoefficients& coef, std::shared_ptr<const FpcaModel> fpca,
                 int q) {
  FunctionalSample curve = slope_curve(*fpca, coef.b_coeffs);
  AdrfFit fit{method, coef.a_hat, coef.b_coeffs, std::move(curve), std::nullopt, {}, std::move(fpca), 0};
  fit.tuning.q = q;
  return fit;
}

}  // namespace

std::string_view method_name(Method m) noexcept {
  switch (m) {
    case Method::naive: return "naive";
    case Method::fsw: return "fsw";
    case Method::outcome_regression: return "or";
    case Method::doubly_robust: return "dr";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "naive") return Method::naive;
  if (name == "fsw") return Method::fsw;
  if (name == "or") return Method::outcome_regression;
  if (name == "dr") return Method::doubly_robust;
  throw Error(ErrorCategory::parameter, "unknown method '" + std::string(name) + "'");
}

FlrCoefficients truncated_flr(const Eigen::Ref<const Eigen::VectorXd>& responses,
                              const FpcaModel& fpca, int q) {
  const auto n = fpca.scores.rows();
  if (responses.size() != n) {
    throw Error(ErrorCategory::alignment, "response length does not match the FPCA sample");
  }
  if (q < 1 || q > fpca.components()) {
    throw Error(ErrorCategory::parameter, "truncation q = " + std::to_string(q) +
                                              " outside [1, " +
                                              std::to_string(fpca.components()) + "]");
  }
  if (!(fpca.eigenvalues[q - 1] > 0.0)) {
    throw Error(ErrorCategory::rank, "eigenvalue " + std::to_string(q) +
                                         " is zero; truncation exceeds the covariance rank");
  }
  const double rbar = responses.mean();
  const Eigen::VectorXd centered = responses.array() - rbar;
  // One dot product per component, so coefficient j does not depend on q.
  FlrCoefficients out;
  out.b_coeffs.resize(q);
  for (int j = 0; j < q; ++j) {
    out.b_coeffs[j] = fpca.scores.col(j).dot(centered) / static_cast<double>(n) / fpca.eigenvalues[j];
  }
  out.a_hat = rbar - out.b_coeffs.dot(fpca.mean_projections().head(q));
  return out;
}

FunctionalSample slope_curve(const FpcaModel& fpca, const Eigen::Ref<const Eigen::VectorXd>& b) {
  return FunctionalSample(fpca.grid(), fpca.eigenfunctions.leftCols(b.size()) * b);
}

Eigen::VectorXd slope_projections(const FpcaModel& fpca,
                                  const Eigen::Ref<const Eigen::VectorXd>& b) {
  const auto q = b.size();
  const double centre = b.dot(fpca.mean_projections().head(q));
  return (fpca.scores.leftCols(q) * b).array() + centre;
}

AdrfFit fit_naive(const Dataset& data, std::shared_ptr<const FpcaModel> fpca, int q) {
  require_aligned(data, *fpca);
  const FlrCoefficients coef = truncated_flr(data.y(), *fpca, q);
  return make_fit(Method::naive, coef, std::move(fpca), q);
}

AdrfFit fit_fsw(const Dataset& data, std::shared_ptr<const FpcaModel> fpca,
                const WeightFit& weights, int q) {
  require_aligned(data, *fpca);
  if (weights.size() != data.size()) {
    throw Error(ErrorCategory::alignment, "weights have " + std::to_string(weights.size()) +
                                              " entries for " + std::to_string(data.size()) +
                                              " observations");
  }
  const Eigen::VectorXd r = data.y().cwiseProduct(weights.pi);
  const FlrCoefficients coef = truncated_flr(r, *fpca, q);
  AdrfFit fit = make_fit(Method::fsw, coef, std::move(fpca), q);
  fit.tuning.h = weights.h;
  fit.tuning.k = weights.k;
  fit.tuning.rho = weights.rho;
  return fit;
}

AdrfFit fit_or(const Dataset& data, std::shared_ptr<const FpcaModel> fpca, int q,
               const BackfitOptions& options) {
  require_aligned(data, *fpca);
  const Eigen::MatrixXd& x = data.x();
  const Eigen::VectorXd& y = data.y();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < x.cols()) {
    throw Error(ErrorCategory::collinearity,
                "covariate matrix has rank " + std::to_string(qr.rank()) + " < " +
                    std::to_string(x.cols()));
  }

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(x.cols());
  FlrCoefficients coef;
  double last_delta = std::numeric_limits<double>::infinity();
  int iter = 1;
  for (; iter <= options.max_iterations; ++iter) {
    const FlrCoefficients next = truncated_flr(y - x * theta, *fpca, q);
    const Eigen::VectorXd residual =
        y - (slope_projections(*fpca, next.b_coeffs).array() + next.a_hat).matrix();
    const Eigen::VectorXd theta_next = qr.solve(residual);
    double delta = (theta_next - theta).lpNorm<Eigen::Infinity>();
    if (iter > 1) {
      delta = std::max({delta, (next.b_coeffs - coef.b_coeffs).lpNorm<Eigen::Infinity>(),
                        std::abs(next.a_hat - coef.a_hat)});
    } else {
      delta = std::numeric_limits<double>::infinity();
    }
    coef = next;
    theta = theta_next;
    last_delta = delta;
    if (delta < options.tolerance) break;
  }
  const bool converged = last_delta < options.tolerance;
  if (!converged && !options.accept_at_cap) {
    throw ConvergenceError("backfitting did not stabilize within " +
                               std::to_string(options.max_iterations) +
                               " iterations (last parameter change " +
                               std::to_string(last_delta) + ")",
                           last_delta);
  }
  coef = truncated_flr(y - x * theta, *fpca, q);
  AdrfFit fit = make_fit(Method::outcome_regression, coef, std::move(fpca), q);
  fit.theta_hat = std::move(theta);
  fit.iterations = std::min(iter, options.max_iterations);
  fit.converged = converged;
  return fit;
}

Eigen::VectorXd dr_pseudo_outcome(const Dataset& data, const FpcaModel& fpca,
                                  const AdrfFit& or_fit,
                                  const Eigen::Ref<const Eigen::VectorXd>& pi) {
  if (!or_fit.theta_hat) {
    throw Error(ErrorCategory::precondition, "doubly robust fit needs an outcome-regression fit");
  }
  if (pi.size() != data.size()) {
    throw Error(ErrorCategory::alignment, "weights do not align with the dataset");
  }
  require_same_grid(*fpca.grid(), *or_fit.b_curve.grid());
  const Eigen::VectorXd& theta = *or_fit.theta_hat;
  if (theta.size() != data.covariates()) {
    throw Error(ErrorCategory::alignment, "outcome model covariate count differs from dataset");
  }
  const Eigen::VectorXd& w = data.grid()->weights();
  const Eigen::VectorXd bz =
      (data.z().values() * w.cwiseProduct(or_fit.b_curve.values())).array() + or_fit.a_hat;
  const Eigen::VectorXd xt = data.x() * theta;
  const double xbar_t = theta.dot(data.x().colwise().mean());
  const Eigen::VectorXd fitted = bz + xt;
  return (data.y() - fitted).cwiseProduct(pi) + (bz.array() + xbar_t).matrix();
}

AdrfFit fit_dr(const Dataset& data, std::shared_ptr<const FpcaModel> fpca, const AdrfFit& or_fit,
               const Eigen::Ref<const Eigen::VectorXd>& pi, int q) {
  require_aligned(data, *fpca);
  const Eigen::VectorXd r = dr_pseudo_outcome(data, *fpca, or_fit, pi);
  const FlrCoefficients coef = truncated_flr(r, *fpca, q);
  AdrfFit fit = make_fit(Method::doubly_robust, coef, std::move(fpca), q);
  fit.converged = or_fit.converged;
  return fit;
}

AdrfFit fit_dr(const Dataset& data, std::shared_ptr<const FpcaModel> fpca, const AdrfFit& or_fit,
               const WeightFit& weights, int q) {
  AdrfFit fit = fit_dr(data, std::move(fpca), or_fit, weights.pi, q);
  fit.tuning.h = weights.h;
  fit.tuning.k = weights.k;
  fit.tuning.rho = weights.rho;
  return fit;
}

double adrf_eval(const AdrfFit& fit, const FunctionalSample& z) {
  return fit.a_hat + inner_product(fit.b_curve, z);
}

double ate(const AdrfFit& fit, const FunctionalSample& z1, const FunctionalSample& z2) {
  require_same_grid(*z1.grid(), *z2.grid());
  require_same_grid(*fit.b_curve.grid(), *z1.grid());
  const Eigen::VectorXd diff = z1.values() - z2.values();
  return inner_product(*z1.grid(), fit.b_curve.values(), diff);
}

}  // namespace fadrf
