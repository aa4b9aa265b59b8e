#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fadrf/dataset.hpp"
#include "fadrf/estimators.hpp"

namespace fadrf {

/// Paths and column mapping for a dataset stored as two CSV files.
///
/// The functional file has the grid points on its first row and one curve per
/// following row. The tabular file has a header and one row per subject in
/// the same order. An empty `covariates` list selects every column except the
/// outcome.
struct DatasetFiles {
  std::string functional_path;
  std::string tabular_path;
  std::string outcome = "y";
  std::vector<std::string> covariates;
};

CurveSet read_curves(const std::string& path);
CurveSet read_curves(std::istream& in, const std::string& source = "<stream>");
void write_curves(const CurveSet& curves, const std::string& path);
void write_curves(const CurveSet& curves, std::ostream& out);

Dataset load_dataset(const DatasetFiles& files);
void write_dataset(const Dataset& data, const std::string& functional_path,
                   const std::string& tabular_path);

/// Plain-text fit document. Numbers use 17 significant digits, so a reload
/// reproduces every stored double exactly.
std::string format_fit(const AdrfFit& fit);
void write_fit(const AdrfFit& fit, const std::string& path);
/// The reloaded fit carries no FPCA model; everything needed by adrf_eval and
/// ate is restored.
AdrfFit parse_fit(const std::string& text, const std::string& source = "<string>");
AdrfFit read_fit(const std::string& path);

}  // namespace fadrf
