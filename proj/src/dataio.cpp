#include "semicomp/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "semicomp/errors.hpp"

namespace semicomp {

Date parse_iso_date(const std::string& text) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  char tail = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' ||
      std::sscanf(text.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3)
    throw InputError("not an ISO-8601 date: '" + text + "'");
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw InputError("invalid calendar date: '" + text + "'");
  return std::chrono::sys_days{ymd};
}

std::string format_iso_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& s, const char* what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
    throw InputError(std::string(what) + ": not a number: '" + s + "'");
  return v;
}

long parse_integer(const std::string& s, const char* what) {
  long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InputError(std::string(what) + ": not an integer: '" + s + "'");
  return v;
}

}  // namespace

ParseResult parse_records(std::istream& in, const ParseOptions& options) {
  ParseResult out;
  out.mismatch_column = options.mismatch_column;
  std::string line;
  std::size_t line_no = 0;

  std::map<std::string, std::size_t> column;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw InputError("input has no header row");
  {
    const auto header = split_fields(line);
    for (std::size_t i = 0; i < header.size(); ++i) column[header[i]] = i;
  }
  const std::vector<std::string> required = {"id",  "accept_date", "last_seen_date",         "transplant_date",
                                             "dead", "age",        "surgery", options.mismatch_column};
  for (const auto& name : required)
    if (!column.count(name)) throw InputError("header is missing required column '" + name + "'");

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++out.rows_read;
    const auto fields = split_fields(line);
    auto get = [&](const std::string& name) -> const std::string& {
      const std::size_t idx = column.at(name);
      static const std::string empty;
      return idx < fields.size() ? fields[idx] : empty;
    };
    try {
      SubjectRecord r;
      if (get("id").empty()) throw InputError("missing id");
      r.id = parse_integer(get("id"), "id");
      if (get("accept_date").empty() || get("last_seen_date").empty())
        throw InputError("acceptance and last-seen dates are required");
      r.accept_date = parse_iso_date(get("accept_date"));
      r.last_seen_date = parse_iso_date(get("last_seen_date"));
      if (!get("transplant_date").empty()) r.transplant_date = parse_iso_date(get("transplant_date"));
      const long dead = parse_integer(get("dead"), "dead");
      if (dead != 0 && dead != 1) throw InputError("dead must be 0 or 1");
      r.dead = dead == 1;
      r.age = parse_number(get("age"), "age");
      const long surgery = parse_integer(get("surgery"), "surgery");
      if (surgery != 0 && surgery != 1) throw InputError("surgery must be 0 or 1");
      r.surgery = static_cast<int>(surgery);
      if (!get(options.mismatch_column).empty())
        r.mismatch = parse_number(get(options.mismatch_column), options.mismatch_column.c_str());

      if (r.last_seen_date < r.accept_date) throw InputError("last-seen date precedes acceptance date");
      if (r.transplant_date && *r.transplant_date < r.accept_date)
        throw InputError("transplant date precedes acceptance date");
      if (r.transplant_date && *r.transplant_date > r.last_seen_date)
        throw InputError("transplant date follows last-seen date");
      if (r.last_seen_date > kStudyEnd) throw InputError("last-seen date is after the study end 1974-04-01");
      out.records.push_back(std::move(r));
    } catch (const InputError& e) {
      std::string id = get("id").empty() ? "?" : get("id");
      out.issues.push_back({line_no, "row id " + id + ": " + e.what()});
    }
  }
  return out;
}

ParseResult parse_records_file(const std::string& path, const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open data file '" + path + "'");
  return parse_records(in, options);
}

const char* rule_name(ExclusionRule rule) {
  switch (rule) {
    case ExclusionRule::ZeroDuration: return "zero_duration";
    case ExclusionRule::MissingMismatch: return "transplant_without_mismatch";
  }
  return "unknown";
}

FilterResult filter_records(const std::vector<SubjectRecord>& records) {
  FilterResult out;
  for (const auto& r : records) {
    const long followup = days_between(r.accept_date, r.last_seen_date);
    const bool zero = followup == 0 || (r.transplant_date && days_between(r.accept_date, *r.transplant_date) == 0);
    if (zero) {
      out.excluded.push_back({r.id, ExclusionRule::ZeroDuration});
    } else if (r.transplanted() && !r.mismatch) {
      out.excluded.push_back({r.id, ExclusionRule::MissingMismatch});
    } else {
      out.kept.push_back(r);
    }
  }
  return out;
}

const char* imputation_name(Imputation rule) { return rule == Imputation::Zero ? "zero" : "mean"; }

Imputation parse_imputation(const std::string& name) {
  if (name == "zero") return Imputation::Zero;
  if (name == "mean") return Imputation::Mean;
  throw InputError("unknown imputation rule '" + name + "' (expected zero or mean)");
}

CaseSummary summarize(const std::vector<ObservationCase>& cases) {
  CaseSummary s;
  s.total = cases.size();
  s.age_min = s.mismatch_min = std::numeric_limits<double>::infinity();
  s.age_max = s.mismatch_max = -std::numeric_limits<double>::infinity();
  for (const auto& c : cases) {
    ++s.counts[case_index(c.label)];
    s.age_min = std::min(s.age_min, c.covariates.age);
    s.age_max = std::max(s.age_max, c.covariates.age);
    if (c.mismatch_imputed) {
      ++s.imputed;
      s.imputed_value = *c.covariates.mismatch;
    } else if (c.covariates.mismatch) {
      s.mismatch_min = std::min(s.mismatch_min, *c.covariates.mismatch);
      s.mismatch_max = std::max(s.mismatch_max, *c.covariates.mismatch);
    }
  }
  return s;
}

Dataset build_dataset(const std::vector<SubjectRecord>& kept, Imputation imputation) {
  double fill = 0.0;
  if (imputation == Imputation::Mean) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : kept)
      if (r.mismatch) {
        sum += *r.mismatch;
        ++n;
      }
    fill = n > 0 ? sum / static_cast<double>(n) : 0.0;
  }
  Dataset out;
  out.cases.reserve(kept.size());
  for (const auto& r : kept) {
    ObservationCase c = classify(r);
    if (!c.covariates.mismatch) {
      c.covariates.mismatch = fill;
      c.mismatch_imputed = true;
    }
    out.cases.push_back(std::move(c));
  }
  out.summary = summarize(out.cases);
  return out;
}

namespace {

void write_record_fields(std::ostream& out, const SubjectRecord& r) {
  out << r.id << ',' << format_iso_date(r.accept_date) << ',' << format_iso_date(r.last_seen_date) << ','
      << (r.transplant_date ? format_iso_date(*r.transplant_date) : std::string()) << ',' << (r.dead ? 1 : 0) << ','
      << format_double(r.age) << ',' << r.surgery << ',' << (r.mismatch ? format_double(*r.mismatch) : std::string());
}

constexpr const char* kRecordHeader = "id,accept_date,last_seen_date,transplant_date,dead,age,surgery,mismatch";

std::string optional_text(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

void write_records(std::ostream& out, const std::vector<SubjectRecord>& records) {
  out << kRecordHeader << '\n';
  for (const auto& r : records) {
    write_record_fields(out, r);
    out << '\n';
  }
}

void write_dataset(std::ostream& out, const std::vector<SubjectRecord>& records,
                   const std::vector<ObservationCase>& cases) {
  if (records.size() != cases.size()) throw DomainError("write_dataset: records and cases differ in length");
  out << kRecordHeader << ",case,x1,x2,x3\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    write_record_fields(out, records[i]);
    const auto& c = cases[i];
    out << ',' << static_cast<int>(c.label) << ',' << optional_text(c.x1) << ',' << optional_text(c.x2) << ','
        << optional_text(c.x3) << '\n';
  }
}

void write_exclusion_log(std::ostream& out, const std::vector<Exclusion>& excluded) {
  for (const auto& e : excluded) out << e.id << '\t' << rule_name(e.rule) << '\n';
}

}  // namespace semicomp
