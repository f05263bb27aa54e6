#include "urisk/dataset.hpp"

#include <sstream>

#include "urisk/error.hpp"

namespace urisk {

void DatasetSpec::validate() const {
  if (dependent_series.empty()) throw InputError("dataset spec: dependent series not set");
  if (endogenous_series.empty()) throw InputError("dataset spec: endogenous series not set");
  if (horizon_months < 1) throw InputError("dataset spec: horizon_months must be >= 1");
}

namespace {

std::string availability_report(const TimeSeriesPanel& panel,
                                const std::vector<std::string>& names) {
  std::ostringstream os;
  os << "per-series availability:";
  auto stats = summarize(panel);
  for (const auto& name : names) {
    os << "\n  " << name << ": ";
    bool found = false;
    for (const auto& s : stats) {
      if (s.name != name) continue;
      found = true;
      if (s.empty)
        os << "all missing";
      else
        os << s.first.str() << " .. " << s.last.str() << " (" << s.obs << " obs)";
    }
    if (!found) os << "not in panel";
  }
  return os.str();
}

}  // namespace

EstimationDataset build_design(const TimeSeriesPanel& panel, const DatasetSpec& spec) {
  spec.validate();

  std::vector<std::string> needed = {spec.dependent_series, spec.endogenous_series};
  needed.insert(needed.end(), spec.control_series.begin(), spec.control_series.end());
  needed.insert(needed.end(), spec.instrument_series.begin(), spec.instrument_series.end());
  for (const auto& name : needed)
    if (!panel.has_series(name)) throw InputError("panel has no series named '" + name + "'");

  const auto y_all = diff_horizon(panel.at(spec.dependent_series), spec.horizon_months);
  const auto& d_all = panel.at(spec.endogenous_series);

  std::vector<const std::vector<double>*> x_cols, z_cols;
  for (const auto& name : spec.control_series) x_cols.push_back(&panel.at(name));
  for (const auto& name : spec.instrument_series) z_cols.push_back(&panel.at(name));

  std::vector<int> rows;
  for (std::size_t t = 0; t < panel.n_months(); ++t) {
    const Month m = panel.dates[t];
    if (spec.sample_start && m < *spec.sample_start) continue;
    if (spec.sample_end && m > *spec.sample_end) continue;
    if (is_missing(y_all[t]) || is_missing(d_all[t])) continue;
    bool ok = true;
    for (const auto* col : x_cols)
      if (is_missing((*col)[t])) {
        ok = false;
        break;
      }
    if (ok)
      for (const auto* col : z_cols)
        if (is_missing((*col)[t])) {
          ok = false;
          break;
        }
    if (ok) rows.push_back(static_cast<int>(t));
  }

  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  if (n == 0)
    throw InputError("no usable rows for '" + spec.dependent_series + "' h=" +
                     std::to_string(spec.horizon_months) + "; " +
                     availability_report(panel, needed));

  const Eigen::Index px = static_cast<Eigen::Index>(spec.control_series.size()) + 1;
  if (n < px + 1 + 2)
    throw InputError("dataset underdetermined: n=" + std::to_string(n) + " rows for " +
                     std::to_string(px + 1) + " coefficients");

  EstimationDataset ds;
  ds.y.resize(n);
  ds.d.resize(n);
  ds.X.resize(n, px);
  ds.Z.resize(n, static_cast<Eigen::Index>(z_cols.size()));
  ds.t_index.reserve(rows.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t t = static_cast<std::size_t>(rows[static_cast<std::size_t>(i)]);
    ds.y(i) = y_all[t];
    ds.d(i) = d_all[t];
    for (std::size_t j = 0; j < x_cols.size(); ++j)
      ds.X(i, static_cast<Eigen::Index>(j)) = (*x_cols[j])[t];
    ds.X(i, px - 1) = 1.0;
    for (std::size_t j = 0; j < z_cols.size(); ++j)
      ds.Z(i, static_cast<Eigen::Index>(j)) = (*z_cols[j])[t];
    ds.t_index.push_back(panel.dates[t]);
  }
  ds.x_names = spec.control_series;
  ds.x_names.push_back("const");
  ds.z_names = spec.instrument_series;
  ds.endogenous_name = spec.endogenous_series;
  ds.label = spec.dependent_series + "/h" + std::to_string(spec.horizon_months);
  return ds;
}

}  // namespace urisk
