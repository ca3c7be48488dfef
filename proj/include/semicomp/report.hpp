#pragma once

// Fit reports: a fixed-layout text table and a JSON result document that
// reads back bit-exactly.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "semicomp/dataio.hpp"
#include "semicomp/estimation.hpp"

namespace semicomp {

// Published estimates for the 12-parameter layout, keyed by parameter name.
std::optional<double> reference_value(const std::string& name);
ModelParams reference_params();

struct FitReport {
  // Run configuration, echoed in full.
  std::string data_path;
  std::string mismatch_column = "mismatch";
  FitConfig config;

  std::size_t rows_read = 0;
  std::vector<ParseIssue> issues;
  std::vector<Exclusion> excluded;
  CaseSummary summary;

  FitResult result;
  // Log-likelihood at the published estimates; only for the 12-parameter layout.
  std::optional<double> reference_log_likelihood;
};

// One row per parameter in vector order, with estimate, 95% interval,
// reference value and absolute deviation.
void write_fit_table(std::ostream& out, const FitReport& report);

std::string fit_to_json(const FitReport& report);
// Throws InputError on malformed documents.
FitReport fit_from_json(const std::string& text);

}  // namespace semicomp
