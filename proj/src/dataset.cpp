#include "fadrf/dataset.hpp"

#include "fadrf/errors.hpp"

namespace fadrf {

Dataset::Dataset(CurveSet z, Eigen::MatrixXd x, Eigen::VectorXd y,
                 std::vector<std::string> covariate_names, std::string outcome_name)
    : z_(std::move(z)),
      x_(std::move(x)),
      y_(std::move(y)),
      covariate_names_(std::move(covariate_names)),
      outcome_name_(std::move(outcome_name)) {
  const auto n = y_.size();
  if (n == 0) throw Error(ErrorCategory::empty_input, "dataset has no observations");
  if (z_.count() != n || x_.rows() != n) {
    throw Error(ErrorCategory::alignment,
                "row counts disagree: " + std::to_string(z_.count()) + " curves, " +
                    std::to_string(x_.rows()) + " covariate rows, " + std::to_string(n) +
                    " outcomes");
  }
  if (x_.cols() < 1) throw Error(ErrorCategory::data, "dataset needs at least one covariate");
  if (!x_.allFinite()) throw Error(ErrorCategory::data, "covariates contain non-finite values");
  if (!y_.allFinite()) throw Error(ErrorCategory::data, "outcomes contain non-finite values");
  if (covariate_names_.empty()) {
    for (Eigen::Index j = 0; j < x_.cols(); ++j) covariate_names_.push_back("x" + std::to_string(j + 1));
  }
  if (static_cast<Eigen::Index>(covariate_names_.size()) != x_.cols()) {
    throw Error(ErrorCategory::alignment, "covariate name count does not match covariate columns");
  }
}

Dataset Dataset::subset(std::span<const int> rows) const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), x_.cols());
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    x.row(static_cast<Eigen::Index>(r)) = x_.row(rows[r]);
    y[static_cast<Eigen::Index>(r)] = y_[rows[r]];
  }
  return Dataset(z_.subset(rows), std::move(x), std::move(y), covariate_names_, outcome_name_);
}

Dataset Dataset::with_outcome(Eigen::VectorXd y) const {
  return Dataset(z_, x_, std::move(y), covariate_names_, outcome_name_);
}

}  // namespace fadrf
