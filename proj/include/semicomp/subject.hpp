#pragma once

#include <chrono>
#include <optional>
#include <string>

namespace semicomp {

using Date = std::chrono::sys_days;

// Parses YYYY-MM-DD; throws InputError on anything else.
Date parse_iso_date(const std::string& text);
std::string format_iso_date(Date d);

// Whole days from `from` to `to`.
inline long days_between(Date from, Date to) { return (to - from).count(); }

inline const Date kStudyEnd = std::chrono::sys_days{std::chrono::year{1974} / 4 / 1};

// One study record: acceptance (T1), last seen (T2), optional transplant (T3).
struct SubjectRecord {
  long id = 0;
  Date accept_date{};
  Date last_seen_date{};
  std::optional<Date> transplant_date;
  bool dead = false;
  double age = 0.0;
  int surgery = 0;
  std::optional<double> mismatch;

  bool transplanted() const { return transplant_date.has_value(); }
};

}  // namespace semicomp
