#pragma once

// Heart-transplant study records: delimited-text ingestion, exclusion
// filters and construction of the four-case analysis dataset.
//
// Input is comma-separated with a header row naming at least
//   id, accept_date, last_seen_date, transplant_date, dead, age, surgery
// and the selected mismatch column.  Empty fields are missing; dates are
// ISO-8601; dead is 0/1.  Unknown columns are ignored.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "semicomp/likelihood.hpp"
#include "semicomp/subject.hpp"

namespace semicomp {

struct ParseOptions {
  std::string mismatch_column = "mismatch";
};

struct ParseIssue {
  std::size_t line = 0;
  std::string message;
};

struct ParseResult {
  std::vector<SubjectRecord> records;
  std::vector<ParseIssue> issues;
  std::size_t rows_read = 0;
  std::string mismatch_column;
};

ParseResult parse_records(std::istream& in, const ParseOptions& options = {});
// Throws InputError if the file cannot be opened.
ParseResult parse_records_file(const std::string& path, const ParseOptions& options = {});

enum class ExclusionRule { ZeroDuration, MissingMismatch };
const char* rule_name(ExclusionRule rule);

struct Exclusion {
  long id = 0;
  ExclusionRule rule = ExclusionRule::ZeroDuration;
};

struct FilterResult {
  std::vector<SubjectRecord> kept;
  std::vector<Exclusion> excluded;
};

// Drops records with a zero-day X duration, then transplanted records without
// a mismatch score.  Each exclusion carries exactly one rule.
FilterResult filter_records(const std::vector<SubjectRecord>& records);

// How untransplanted subjects get the mismatch covariate their X2/X3 links need.
enum class Imputation { Zero, Mean };
const char* imputation_name(Imputation rule);
Imputation parse_imputation(const std::string& name);

struct CaseSummary {
  std::array<std::size_t, 4> counts{};
  std::size_t total = 0;
  double age_min = 0.0;
  double age_max = 0.0;
  double mismatch_min = 0.0;
  double mismatch_max = 0.0;
  std::size_t imputed = 0;
  double imputed_value = 0.0;
};

struct Dataset {
  std::vector<ObservationCase> cases;
  CaseSummary summary;
};

Dataset build_dataset(const std::vector<SubjectRecord>& kept, Imputation imputation = Imputation::Zero);
CaseSummary summarize(const std::vector<ObservationCase>& cases);

// Records in the input layout followed by case, x1, x2, x3.
void write_dataset(std::ostream& out, const std::vector<SubjectRecord>& records,
                   const std::vector<ObservationCase>& cases);
void write_records(std::ostream& out, const std::vector<SubjectRecord>& records);
// One line per exclusion: "id<TAB>rule".
void write_exclusion_log(std::ostream& out, const std::vector<Exclusion>& excluded);

// Shortest text that round-trips the double exactly.
std::string format_double(double v);

}  // namespace semicomp
