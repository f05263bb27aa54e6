#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace urisk {

// Calendar month, stored as year*12 + (month-1). Day-of-month in inputs is
// ignored; everything here is monthly.
struct Month {
  int index = 0;

  Month() = default;
  Month(int year, int month) : index(year * 12 + (month - 1)) {}
  int year() const { return index >= 0 ? index / 12 : (index - 11) / 12; }
  int month() const { return index - year() * 12 + 1; }

  Month operator+(int m) const {
    Month r;
    r.index = index + m;
    return r;
  }
  int operator-(Month o) const { return index - o.index; }
  auto operator<=>(const Month&) const = default;

  std::string str() const;                       // "YYYY-MM"
  static Month parse(const std::string& text);   // YYYY-MM or YYYY-MM-DD
};

// Missing observations are NaN; use is_missing to test.
inline bool is_missing(double v) { return std::isnan(v); }
inline double missing_value() { return std::nan(""); }

// Date-indexed table of named monthly series. Months run contiguously from
// the first to the last month seen in the source; cells with no observation
// are missing. Every series vector has the same length as dates.
struct TimeSeriesPanel {
  std::vector<Month> dates;
  std::vector<std::string> series_names;                // file column order
  std::map<std::string, std::vector<double>> series;

  std::size_t n_months() const { return dates.size(); }
  bool has_series(const std::string& name) const { return series.count(name) > 0; }
  const std::vector<double>& at(const std::string& name) const;

  // Index of a month in `dates`, or -1 if outside the panel range.
  int month_index(Month m) const;
};

struct SeriesSummary {
  std::string name;
  Month first, last;   // first/last non-missing month
  int obs = 0;
  double mean = 0, sd = 0, min = 0, max = 0;
  bool empty = false;  // all observations missing
};

// Reads a CSV whose first column is the date (header required) and all other
// columns are numeric series. Empty cells become missing values.
TimeSeriesPanel load_csv(const std::string& path, const std::string& date_column = "");

// out[t] = v[t+h] - v[t]; missing whenever either endpoint is missing.
std::vector<double> diff_horizon(const std::vector<double>& v, int h);

enum class YoyMode { rate_difference, percent_change };

// Year-over-year change: v[t]-v[t-12], or 100*(v[t]/v[t-12]-1) for index
// levels. `name` is only used in error messages.
std::vector<double> yoy_change(const std::vector<double>& v, YoyMode mode,
                               const std::vector<Month>& dates, const std::string& name = "");

// Per-series statistics over non-missing entries, in file column order.
std::vector<SeriesSummary> summarize(const TimeSeriesPanel& panel);

}  // namespace urisk
