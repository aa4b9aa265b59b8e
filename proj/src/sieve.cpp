#include "fadrf/sieve.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fadrf/errors.hpp"

namespace fadrf {

Standardizer::Standardizer(Eigen::VectorXd min, Eigen::VectorXd max)
    : min_(std::move(min)), max_(std::move(max)) {
  if (min_.size() != max_.size()) {
    throw Error(ErrorCategory::parameter, "standardizer min/max length mismatch");
  }
  for (Eigen::Index j = 0; j < min_.size(); ++j) {
    if (!(max_[j] > min_[j])) {
      throw Error(ErrorCategory::degenerate_covariate,
                  "covariate column " + std::to_string(j) + " is constant");
    }
  }
}

Eigen::MatrixXd Standardizer::apply(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  if (x.cols() != min_.size()) {
    throw Error(ErrorCategory::alignment, "covariate matrix has " + std::to_string(x.cols()) +
                                              " columns, standardizer expects " +
                                              std::to_string(min_.size()));
  }
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double span = max_[j] - min_[j];
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double v = 2.0 * (x(i, j) - min_[j]) / span - 1.0;
      out(i, j) = std::clamp(v, -kClip, kClip);
    }
  }
  return out;
}

Standardized standardize(const Eigen::Ref<const Eigen::MatrixXd>& x) {
  if (x.rows() < 2) throw Error(ErrorCategory::parameter, "standardize needs n >= 2");
  if (!x.allFinite()) throw Error(ErrorCategory::data, "covariates contain non-finite values");
  Standardizer s(x.colwise().minCoeff().transpose(), x.colwise().maxCoeff().transpose());
  Eigen::MatrixXd values = s.apply(x);
  return Standardized{std::move(values), std::move(s)};
}

Eigen::VectorXd legendre_values(double x, int degree) {
  Eigen::VectorXd out(degree + 1);
  out[0] = 1.0;
  if (degree >= 1) out[1] = x;
  for (int l = 1; l < degree; ++l) {
    out[l + 1] = ((2.0 * l + 1.0) * x * out[l] - l * out[l - 1]) / (l + 1.0);
  }
  return out;
}

bool valid_sieve_size(int k, int p) noexcept {
  return p >= 1 && k >= 1 && (k - 1) % p == 0;
}

Eigen::MatrixXd raw_legendre_design(const Eigen::Ref<const Eigen::MatrixXd>& x_st, int k) {
  const int p = static_cast<int>(x_st.cols());
  if (!valid_sieve_size(k, p)) {
    throw Error(ErrorCategory::parameter, "sieve size k = " + std::to_string(k) +
                                              " is not of the form 1 + p*L with p = " +
                                              std::to_string(p));
  }
  const int degree = (k - 1) / p;
  Eigen::MatrixXd raw(x_st.rows(), k);
  for (Eigen::Index i = 0; i < x_st.rows(); ++i) {
    raw(i, 0) = 1.0;
    for (int j = 0; j < p; ++j) {
      const Eigen::VectorXd poly = legendre_values(x_st(i, j), degree);
      for (int l = 1; l <= degree; ++l) raw(i, p * (l - 1) + j + 1) = poly[l];
    }
  }
  return raw;
}

Eigen::MatrixXd SieveDesign::evaluate(const Eigen::Ref<const Eigen::MatrixXd>& x_st) const {
  return raw_legendre_design(x_st, k) * transform;
}

SieveDesign sieve_design(const Eigen::Ref<const Eigen::MatrixXd>& x_st, int k) {
  const auto n = x_st.rows();
  const int p = static_cast<int>(x_st.cols());
  if (!valid_sieve_size(k, p)) {
    throw Error(ErrorCategory::parameter, "sieve size k = " + std::to_string(k) +
                                              " is not of the form 1 + p*L with p = " +
                                              std::to_string(p));
  }
  if (2 * k > n) {
    throw Error(ErrorCategory::parameter, "sieve size k = " + std::to_string(k) +
                                              " exceeds n/2 with n = " + std::to_string(n));
  }
  const Eigen::MatrixXd raw = raw_legendre_design(x_st, k);
  const double root_n = std::sqrt(static_cast<double>(n));

  // raw / sqrt(n) = Q R, so raw * R^{-1} has empirical Gram matrix I.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw / root_n);
  Eigen::MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (int j = 0; j < k; ++j) {
    const double scale = raw.col(j).norm() / root_n;
    if (!(std::abs(r(j, j)) > 1e-10 * std::max(scale, 1e-300))) {
      const int degree = j == 0 ? 0 : (j - 1) / p + 1;
      const int coord = j == 0 ? -1 : (j - 1) % p;
      throw Error(ErrorCategory::collinearity,
                  "sieve column " + std::to_string(j) +
                      (j == 0 ? std::string(" (constant)")
                              : " (P_" + std::to_string(degree) + " of covariate " +
                                    std::to_string(coord) + ")") +
                      " is linearly dependent on earlier columns");
    }
    if (r(j, j) < 0.0) r.row(j) *= -1.0;
  }
  Eigen::MatrixXd transform =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  SieveDesign d;
  d.k = k;
  d.p = p;
  d.matrix = raw * transform;
  d.transform = std::move(transform);
  return d;
}

}  // namespace fadrf
