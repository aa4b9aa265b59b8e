#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fadrf/fda_core.hpp"

namespace fadrf {

/// n observations of (covariates X, scalar outcome Y, treatment curve Z).
class Dataset {
 public:
  Dataset(CurveSet z, Eigen::MatrixXd x, Eigen::VectorXd y,
          std::vector<std::string> covariate_names = {}, std::string outcome_name = "y");

  int size() const noexcept { return static_cast<int>(y_.size()); }
  int covariates() const noexcept { return static_cast<int>(x_.cols()); }
  const CurveSet& z() const noexcept { return z_; }
  const Eigen::MatrixXd& x() const noexcept { return x_; }
  const Eigen::VectorXd& y() const noexcept { return y_; }
  const GridPtr& grid() const noexcept { return z_.grid(); }
  const std::vector<std::string>& covariate_names() const noexcept { return covariate_names_; }
  const std::string& outcome_name() const noexcept { return outcome_name_; }

  Dataset subset(std::span<const int> rows) const;
  Dataset with_outcome(Eigen::VectorXd y) const;

 private:
  CurveSet z_;
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  std::vector<std::string> covariate_names_;
  std::string outcome_name_;
};

}  // namespace fadrf
