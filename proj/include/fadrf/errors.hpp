#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fadrf {

enum class ErrorCategory {
  grid_mismatch,
  grid,
  empty_input,
  parameter,
  data,
  degenerate_covariate,
  collinearity,
  convergence,
  rank,
  alignment,
  precondition,
  fold_size,
  tuning,
  benchmark,
  parse,
  io,
};

std::string_view category_name(ErrorCategory c) noexcept;

/// Base exception for every failure raised by the library. The category is a
/// stable machine-readable tag; the CLI prints it as the first token of its
/// single-line error report.
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

/// Raised when an iterative solver stops without meeting its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, double last_residual)
      : Error(ErrorCategory::convergence, message), last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

}  // namespace fadrf
