#include "urisk/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "urisk/error.hpp"

namespace urisk {

std::string Month::str() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", year(), month());
  return buf;
}

Month Month::parse(const std::string& text) {
  // Accepts YYYY-MM and YYYY-MM-DD; the day is ignored.
  int y = 0, m = 0;
  if (text.size() < 7 || text[4] != '-')
    throw InputError("unparseable date '" + text + "' (expected YYYY-MM or YYYY-MM-DD)");
  auto r1 = std::from_chars(text.data(), text.data() + 4, y);
  auto r2 = std::from_chars(text.data() + 5, text.data() + 7, m);
  if (r1.ec != std::errc() || r2.ec != std::errc() || m < 1 || m > 12)
    throw InputError("unparseable date '" + text + "' (expected YYYY-MM or YYYY-MM-DD)");
  if (text.size() > 7 && text[7] != '-')
    throw InputError("unparseable date '" + text + "' (expected YYYY-MM or YYYY-MM-DD)");
  return Month(y, m);
}

const std::vector<double>& TimeSeriesPanel::at(const std::string& name) const {
  auto it = series.find(name);
  if (it == series.end()) throw InputError("panel has no series named '" + name + "'");
  return it->second;
}

int TimeSeriesPanel::month_index(Month m) const {
  if (dates.empty() || m < dates.front() || m > dates.back()) return -1;
  return m - dates.front();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

TimeSeriesPanel load_csv(const std::string& path, const std::string& date_column) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open CSV file '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw InputError("CSV file '" + path + "' is empty");
  auto header = split_csv_line(line);
  for (auto& h : header) h = trim(h);
  if (header.size() < 2) throw InputError("CSV needs a date column and at least one series");

  std::size_t date_col = 0;
  if (!date_column.empty()) {
    auto it = std::find(header.begin(), header.end(), date_column);
    if (it == header.end())
      throw InputError("date column '" + date_column + "' not found in CSV header");
    date_col = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<std::string> names;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (j != date_col) names.push_back(header[j]);

  struct Row {
    Month m;
    std::vector<double> values;
  };
  std::vector<Row> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw InputError("CSV row " + std::to_string(line_no) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(header.size()));
    Row row;
    try {
      row.m = Month::parse(trim(cells[date_col]));
    } catch (const InputError& e) {
      throw InputError("CSV row " + std::to_string(line_no) + ": " + e.what());
    }
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j == date_col) continue;
      const std::string cell = trim(cells[j]);
      if (cell.empty()) {
        row.values.push_back(missing_value());
        continue;
      }
      double v;
      auto rc = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (rc.ec != std::errc() || rc.ptr != cell.data() + cell.size())
        throw InputError("CSV row " + std::to_string(line_no) + ": cell '" + cell +
                         "' in column '" + header[j] + "' is not numeric");
      row.values.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("CSV file '" + path + "' has no data rows");

  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.m < b.m; });
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].m == rows[i - 1].m)
      throw InputError("duplicate month " + rows[i].m.str() + " in CSV '" + path + "'");

  TimeSeriesPanel panel;
  const Month first = rows.front().m, last = rows.back().m;
  const int span = last - first + 1;
  panel.dates.reserve(static_cast<std::size_t>(span));
  for (int t = 0; t < span; ++t) panel.dates.push_back(first + t);
  panel.series_names = names;
  for (const auto& name : names)
    panel.series[name].assign(static_cast<std::size_t>(span), missing_value());
  for (const auto& row : rows) {
    const int t = row.m - first;
    for (std::size_t j = 0; j < names.size(); ++j)
      panel.series[names[j]][static_cast<std::size_t>(t)] = row.values[j];
  }
  return panel;
}

std::vector<double> diff_horizon(const std::vector<double>& v, int h) {
  if (h < 1) throw InputError("diff_horizon: horizon must be >= 1");
  const std::size_t n = v.size();
  std::vector<double> out(n, missing_value());
  for (std::size_t t = 0; t + static_cast<std::size_t>(h) < n; ++t) {
    const double a = v[t], b = v[t + static_cast<std::size_t>(h)];
    if (!is_missing(a) && !is_missing(b)) out[t] = b - a;
  }
  return out;
}

std::vector<double> yoy_change(const std::vector<double>& v, YoyMode mode,
                               const std::vector<Month>& dates, const std::string& name) {
  const std::size_t n = v.size();
  std::vector<double> out(n, missing_value());
  for (std::size_t t = 12; t < n; ++t) {
    const double prev = v[t - 12], cur = v[t];
    if (is_missing(prev) || is_missing(cur)) continue;
    if (mode == YoyMode::rate_difference) {
      out[t] = cur - prev;
    } else {
      if (prev <= 0.0) {
        const std::string when = t < dates.size() ? dates[t - 12].str() : std::to_string(t - 12);
        throw InputError("yoy_change: nonpositive index level in series '" + name + "' at " + when);
      }
      out[t] = 100.0 * (cur / prev - 1.0);
    }
  }
  return out;
}

std::vector<SeriesSummary> summarize(const TimeSeriesPanel& panel) {
  std::vector<SeriesSummary> out;
  for (const auto& name : panel.series_names) {
    const auto& v = panel.at(name);
    SeriesSummary s;
    s.name = name;
    double sum = 0.0;
    double mn = std::numeric_limits<double>::infinity();
    double mx = -std::numeric_limits<double>::infinity();
    int first = -1, last = -1;
    for (std::size_t t = 0; t < v.size(); ++t) {
      if (is_missing(v[t])) continue;
      if (first < 0) first = static_cast<int>(t);
      last = static_cast<int>(t);
      ++s.obs;
      sum += v[t];
      mn = std::min(mn, v[t]);
      mx = std::max(mx, v[t]);
    }
    if (s.obs == 0) {
      s.empty = true;
      out.push_back(s);
      continue;
    }
    s.first = panel.dates[static_cast<std::size_t>(first)];
    s.last = panel.dates[static_cast<std::size_t>(last)];
    s.mean = sum / s.obs;
    s.min = mn;
    s.max = mx;
    if (s.obs > 1) {
      double ss = 0.0;
      for (double x : v)
        if (!is_missing(x)) ss += (x - s.mean) * (x - s.mean);
      s.sd = std::sqrt(ss / (s.obs - 1));
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace urisk
