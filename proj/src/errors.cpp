#include "fadrf/errors.hpp"

namespace fadrf {

std::string_view category_name(ErrorCategory c) noexcept {
  switch (c) {
    case ErrorCategory::grid_mismatch: return "grid-mismatch";
    case ErrorCategory::grid: return "grid";
    case ErrorCategory::empty_input: return "empty-input";
    case ErrorCategory::parameter: return "parameter";
    case ErrorCategory::data: return "data";
    case ErrorCategory::degenerate_covariate: return "degenerate-covariate";
    case ErrorCategory::collinearity: return "collinearity";
    case ErrorCategory::convergence: return "convergence";
    case ErrorCategory::rank: return "rank";
    case ErrorCategory::alignment: return "alignment";
    case ErrorCategory::precondition: return "precondition";
    case ErrorCategory::fold_size: return "fold-size";
    case ErrorCategory::tuning: return "tuning";
    case ErrorCategory::benchmark: return "benchmark";
    case ErrorCategory::parse: return "parse";
    case ErrorCategory::io: return "io";
  }
  return "unknown";
}

}  // namespace fadrf
