#include "urisk/config.hpp"

#include <fstream>

#include "urisk/error.hpp"

namespace urisk {

namespace {

Month parse_month_field(const json& j, const std::string& what) {
  if (!j.is_string()) throw InputError("config: " + what + " must be a YYYY-MM string");
  return Month::parse(j.get<std::string>());
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InputError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

RunConfig parse_config(const json& doc) {
  // A manifest embeds the original config under "config".
  const json& root = doc.contains("config") ? doc.at("config") : doc;
  if (!root.is_object() || root.empty())
    throw InputError("config: empty or non-object document");

  RunConfig cfg;
  cfg.raw = root;

  if (root.contains("data")) {
    const auto& data = root.at("data");
    cfg.csv_path = get_or<std::string>(data, "csv", "");
    cfg.date_column = get_or<std::string>(data, "date_column", "");
    if (data.contains("derive")) {
      for (const auto& d : data.at("derive")) {
        DeriveSpec ds;
        ds.name = d.at("name").get<std::string>();
        ds.source = d.at("source").get<std::string>();
        const std::string mode = get_or<std::string>(d, "mode", "percent_change");
        if (mode == "percent_change")
          ds.mode = YoyMode::percent_change;
        else if (mode == "rate_difference")
          ds.mode = YoyMode::rate_difference;
        else
          throw InputError("config: derive mode '" + mode + "' unknown");
        cfg.derive.push_back(ds);
      }
    }
  }

  if (root.contains("groups")) {
    for (const auto& [label, g] : root.at("groups").items()) {
      GroupSpec spec;
      spec.dependent_series = g.at("dependent").get<std::string>();
      spec.endogenous_series = g.at("endogenous").get<std::string>();
      if (g.contains("controls"))
        spec.control_series = g.at("controls").get<std::vector<std::string>>();
      if (g.contains("sample_start"))
        spec.sample_start = parse_month_field(g.at("sample_start"), "sample_start");
      if (g.contains("sample_end"))
        spec.sample_end = parse_month_field(g.at("sample_end"), "sample_end");
      spec.category = get_or<std::string>(g, "category", "");
      cfg.groups[label] = spec;
    }
  }

  if (root.contains("instruments")) {
    for (const auto& [label, arr] : root.at("instruments").items()) {
      if (arr.is_string())
        cfg.instruments[label] = {arr.get<std::string>()};
      else
        cfg.instruments[label] = arr.get<std::vector<std::string>>();
    }
  }

  if (root.contains("horizons")) cfg.horizons = root.at("horizons").get<std::vector<int>>();

  if (root.contains("estimator")) {
    const auto& e = root.at("estimator");
    if (e.contains("method")) cfg.estimator.method = estimator_from_string(e.at("method"));
    cfg.estimator.tau = get_or<double>(e, "tau", 0.80);
    if (e.contains("taus")) cfg.estimator.taus = e.at("taus").get<std::vector<double>>();
    if (e.contains("grid")) {
      const auto& g = e.at("grid");
      AlphaGrid grid;
      grid.lower = g.at("lower").get<double>();
      grid.upper = g.at("upper").get<double>();
      grid.step = g.at("step").get<double>();
      grid.refinement_rounds = get_or<int>(g, "refinement_rounds", 2);
      grid.validate();
      cfg.estimator.grid = grid;
    }
    if (e.contains("bandwidth")) {
      const auto& b = e.at("bandwidth");
      const std::string rule = get_or<std::string>(b, "rule", "plug_in");
      if (rule == "plug_in")
        cfg.estimator.bandwidth.rule = SmoothingBandwidth::Rule::plug_in;
      else if (rule == "fixed")
        cfg.estimator.bandwidth.rule = SmoothingBandwidth::Rule::fixed;
      else
        throw InputError("config: bandwidth rule '" + rule + "' unknown");
      cfg.estimator.bandwidth.value = get_or<double>(b, "value", 1.0);
      if (!(cfg.estimator.bandwidth.value > 0))
        throw InputError("config: bandwidth value must be positive");
    }
    if (e.contains("covariance")) {
      const auto& c = e.at("covariance");
      const std::string type = get_or<std::string>(c, "type", "robust");
      if (type == "robust")
        cfg.estimator.covariance.type = CovType::robust;
      else if (type == "hac")
        cfg.estimator.covariance.type = CovType::hac;
      else
        throw InputError("config: covariance type '" + type + "' unknown");
      cfg.estimator.covariance.hac_lags = get_or<int>(c, "hac_lags", 0);
      cfg.estimator.hac_lag_from_horizon = get_or<bool>(c, "lags_from_horizon", false);
    }
  }

  if (root.contains("mc")) {
    const auto& m = root.at("mc");
    cfg.mc.dgp.n = get_or<int>(m, "n", 2000);
    cfg.mc.dgp.rho = get_or<double>(m, "rho", 0.5);
    cfg.mc.dgp.pi = get_or<double>(m, "pi", 0.5);
    cfg.mc.dgp.alpha_base = get_or<double>(m, "alpha_base", 1.0);
    cfg.mc.dgp.alpha_slope = get_or<double>(m, "alpha_slope", 0.2);
    cfg.mc.reps = get_or<int>(m, "reps", 200);
    if (m.contains("taus")) cfg.mc.taus = m.at("taus").get<std::vector<double>>();
    if (m.contains("estimator")) cfg.mc.estimator = estimator_from_string(m.at("estimator"));
  }

  if (root.contains("output")) cfg.output_dir = get_or<std::string>(root.at("output"), "dir", "");
  cfg.seed = get_or<std::uint64_t>(root, "seed", 1);
  cfg.threads = get_or<int>(root, "threads", 0);
  cfg.mc.dgp.seed = cfg.seed;
  return cfg;
}

TimeSeriesPanel load_panel(const RunConfig& cfg) {
  if (cfg.csv_path.empty()) throw InputError("config: data.csv path not set");
  TimeSeriesPanel panel = load_csv(cfg.csv_path, cfg.date_column);
  for (const auto& d : cfg.derive) {
    if (!panel.has_series(d.source))
      throw InputError("config: derive source '" + d.source + "' not in panel");
    if (panel.has_series(d.name))
      throw InputError("config: derive target '" + d.name + "' already exists");
    panel.series[d.name] = yoy_change(panel.at(d.source), d.mode, panel.dates, d.source);
    panel.series_names.push_back(d.name);
  }
  return panel;
}

DatasetSpec dataset_spec(const RunConfig& cfg, const std::string& group, int horizon,
                         const std::string& instrument_label) {
  auto it = cfg.groups.find(group);
  if (it == cfg.groups.end()) throw InputError("config: no group named '" + group + "'");
  DatasetSpec spec;
  spec.dependent_series = it->second.dependent_series;
  spec.endogenous_series = it->second.endogenous_series;
  spec.control_series = it->second.control_series;
  spec.sample_start = it->second.sample_start;
  spec.sample_end = it->second.sample_end;
  spec.horizon_months = horizon;
  if (!instrument_label.empty()) {
    auto zt = cfg.instruments.find(instrument_label);
    if (zt == cfg.instruments.end())
      throw InputError("config: no instrument set named '" + instrument_label + "'");
    spec.instrument_series = zt->second;
  }
  return spec;
}

IVQROptions ivqr_options(const RunConfig& cfg) {
  IVQROptions opts;
  opts.grid = cfg.estimator.grid;
  opts.bandwidth = cfg.estimator.bandwidth;
  return opts;
}

}  // namespace urisk
