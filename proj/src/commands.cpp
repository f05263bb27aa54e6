#include "urisk/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>

#include "urisk/error.hpp"
#include "urisk/math.hpp"
#include "urisk/serialize.hpp"

namespace urisk {

namespace {

constexpr const char* kToolVersion = "0.1.0";

std::string config_hash(const RunConfig& cfg) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(cfg.raw.dump())));
  return buf;
}

std::string timestamp_token() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%S", &tm);
  return buf;
}

std::string resolve_out_dir(const RunConfig& cfg, const CmdArgs& args,
                            const std::string& command) {
  std::string dir = !args.out_dir.empty() ? args.out_dir : cfg.output_dir;
  if (dir.empty())
    dir = "runs/" + command + "-" + timestamp_token() + "-" + config_hash(cfg).substr(0, 8);
  std::filesystem::create_directories(dir);
  return dir;
}

std::uint64_t effective_seed(const RunConfig& cfg, const CmdArgs& args) {
  return args.seed_override ? args.seed_override : cfg.seed;
}

// Manifest: enough to reproduce the run byte-for-byte. It embeds the full
// config, so any command accepts a manifest in place of a config file.
void write_manifest(const std::string& dir, const std::string& command, const RunConfig& cfg,
                    const CmdArgs& args, std::vector<std::string>& files) {
  json m;
  m["command"] = command;
  m["tool"] = "urisk";
  m["version"] = kToolVersion;
  m["config"] = cfg.raw;
  m["config_hash"] = config_hash(cfg);
  m["seed"] = effective_seed(cfg, args);
  json a;
  if (!args.group.empty()) a["group"] = args.group;
  if (args.horizon > 0) a["horizon"] = args.horizon;
  if (args.tau > 0) a["tau"] = args.tau;
  if (!args.method.empty()) a["method"] = args.method;
  if (!args.instrument.empty()) a["instrument"] = args.instrument;
  if (!args.date.empty()) a["date"] = args.date;
  m["args"] = a;
  std::vector<std::string> names;
  for (const auto& f : files) names.push_back(std::filesystem::path(f).filename().string());
  std::sort(names.begin(), names.end());
  m["outputs"] = names;
  const std::string path = dir + "/manifest.json";
  write_text(path, m.dump(2) + "\n");
  files.push_back(path);
}

int pick_horizon(const RunConfig& cfg, const CmdArgs& args) {
  if (args.horizon > 0) return args.horizon;
  if (cfg.horizons.empty()) throw InputError("config: no horizons configured");
  return cfg.horizons.front();
}

double pick_tau(const RunConfig& cfg, const CmdArgs& args) {
  return args.tau > 0 ? args.tau : cfg.estimator.tau;
}

Estimator pick_method(const RunConfig& cfg, const CmdArgs& args) {
  return args.method.empty() ? cfg.estimator.method : estimator_from_string(args.method);
}

std::string pick_instrument(const RunConfig& cfg, const CmdArgs& args, Estimator method) {
  if (!args.instrument.empty()) return args.instrument;
  if (method == Estimator::qr) return "";
  if (cfg.instruments.size() == 1) return cfg.instruments.begin()->first;
  throw InputError("an instrument set must be named (--instrument) for IV estimators");
}

EstimationDataset build_group_dataset(const RunConfig& cfg, const TimeSeriesPanel& panel,
                                      const std::string& group, int horizon,
                                      const std::string& instrument) {
  if (group.empty()) throw InputError("a group must be named (--group)");
  DatasetSpec spec = dataset_spec(cfg, group, horizon, instrument);
  EstimationDataset ds = build_design(panel, spec);
  ds.label = group + "/h" + std::to_string(horizon) +
             (instrument.empty() ? "" : "/" + instrument);
  return ds;
}

IVQROptions options_for(const RunConfig& cfg) {
  IVQROptions opts = ivqr_options(cfg);
  return opts;
}

LinearIVOptions linear_options(const RunConfig& cfg, int horizon) {
  LinearIVOptions opts;
  opts.cov = cfg.estimator.covariance;
  if (opts.cov.type == CovType::hac && cfg.estimator.hac_lag_from_horizon)
    opts.cov.hac_lags = std::max(horizon - 1, 0);
  return opts;
}

}  // namespace

CmdResult cmd_summarize(const RunConfig& cfg, const CmdArgs& args) {
  CmdResult res;
  res.out_dir = resolve_out_dir(cfg, args, "summarize");
  const TimeSeriesPanel panel = load_panel(cfg);
  const auto stats = summarize(panel);
  const std::string path = res.out_dir + "/summary.csv";
  write_csv(path, {"series", "first", "last", "obs", "mean", "sd", "min", "max"},
            summary_rows(stats));
  res.files.push_back(path);
  write_manifest(res.out_dir, "summarize", cfg, args, res.files);
  return res;
}

CmdResult cmd_estimate(const RunConfig& cfg, const CmdArgs& args) {
  CmdResult res;
  res.out_dir = resolve_out_dir(cfg, args, "estimate");
  const TimeSeriesPanel panel = load_panel(cfg);
  const Estimator method = pick_method(cfg, args);
  const int horizon = pick_horizon(cfg, args);
  const std::string instrument = pick_instrument(cfg, args, method);
  const EstimationDataset ds = build_group_dataset(cfg, panel, args.group, horizon, instrument);
  const FitRecord fit = fit_at(ds, pick_tau(cfg, args), method, options_for(cfg));

  json j = fit_record_json(fit, args.include_profile);
  j["group"] = args.group;
  j["horizon_months"] = horizon;
  if (!instrument.empty()) j["instrument"] = instrument;
  const std::string path = res.out_dir + "/fit.json";
  write_text(path, j.dump(2) + "\n");
  res.files.push_back(path);
  write_manifest(res.out_dir, "estimate", cfg, args, res.files);
  return res;
}

CmdResult cmd_grid(const RunConfig& cfg, const CmdArgs& args) {
  CmdResult res;
  res.out_dir = resolve_out_dir(cfg, args, "grid");
  const TimeSeriesPanel panel = load_panel(cfg);
  const Estimator method = pick_method(cfg, args);
  const int horizon = pick_horizon(cfg, args);
  const std::string instrument = pick_instrument(cfg, args, method);
  const EstimationDataset ds = build_group_dataset(cfg, panel, args.group, horizon, instrument);
  const std::vector<double> taus =
      cfg.estimator.taus.empty() ? default_tau_grid() : cfg.estimator.taus;
  const QuantileGridFit grid = fit_quantile_grid(ds, taus, method, options_for(cfg));

  std::vector<std::string> header = {"tau"};
  if (!grid.fits.empty()) {
    for (const auto& nm : grid.fits.front().coef_names) header.push_back("est_" + nm);
    for (const auto& nm : grid.fits.front().coef_names) header.push_back("se_" + nm);
  }
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < grid.fits.size(); ++i) {
    const auto& fit = grid.fits[i];
    std::vector<std::string> row = {format_double(grid.taus[i])};
    const VectorXd coefs = fit.coefficients();
    for (Eigen::Index k = 0; k < coefs.size(); ++k) row.push_back(format_double(coefs(k)));
    for (Eigen::Index k = 0; k < fit.ses.size(); ++k) row.push_back(format_double(fit.ses(k)));
    rows.push_back(row);
  }
  const std::string path = res.out_dir + "/grid.csv";
  write_csv(path, header, rows);
  res.files.push_back(path);
  if (!grid.failures.empty()) {
    json f = json::array();
    for (const auto& [tau, err] : grid.failures) f.push_back({{"tau", tau}, {"error", err}});
    const std::string fpath = res.out_dir + "/grid_failures.json";
    write_text(fpath, f.dump(2) + "\n");
    res.files.push_back(fpath);
  }
  write_manifest(res.out_dir, "grid", cfg, args, res.files);
  return res;
}

CmdResult cmd_density(const RunConfig& cfg, const CmdArgs& args) {
  CmdResult res;
  res.out_dir = resolve_out_dir(cfg, args, "density");
  if (args.date.empty()) throw InputError("density needs a conditioning month (--date YYYY-MM)");
  const TimeSeriesPanel panel = load_panel(cfg);
  const Estimator method = pick_method(cfg, args);
  const int horizon = pick_horizon(cfg, args);
  const std::string instrument = pick_instrument(cfg, args, method);
  const EstimationDataset ds = build_group_dataset(cfg, panel, args.group, horizon, instrument);
  const std::vector<double> taus =
      cfg.estimator.taus.empty() ? default_tau_grid() : cfg.estimator.taus;
  const QuantileGridFit grid = fit_quantile_grid(ds, taus, method, options_for(cfg));

  // Conditioning values at the requested month.
  const Month when = Month::parse(args.date);
  const int t = panel.month_index(when);
  if (t < 0) throw InputError("conditioning month " + when.str() + " is outside the panel");
  const auto& gspec = cfg.groups.at(args.group);
  VectorXd x(gspec.control_series.size() + 1);
  for (std::size_t j = 0; j < gspec.control_series.size(); ++j) {
    const double v = panel.at(gspec.control_series[j])[static_cast<std::size_t>(t)];
    if (is_missing(v))
      throw InputError("control '" + gspec.control_series[j] + "' missing at " + when.str());
    x(static_cast<Eigen::Index>(j)) = v;
  }
  x(x.size() - 1) = 1.0;
  const double d = panel.at(gspec.endogenous_series)[static_cast<std::size_t>(t)];
  const double level = panel.at(gspec.dependent_series)[static_cast<std::size_t>(t)];
  if (is_missing(d) || is_missing(level))
    throw InputError("endogenous or dependent series missing at " + when.str());

  const PredictiveDensity dens = predictive_density(grid, x, d);

  std::vector<std::vector<std::string>> rows;
  for (Eigen::Index i = 0; i < dens.support.size(); ++i)
    rows.push_back({format_double(dens.support(i)), format_double(dens.density(i)),
                    format_double(level + dens.support(i))});
  const std::string dpath = res.out_dir + "/density.csv";
  write_csv(dpath, {"change", "density", "level"}, rows);
  res.files.push_back(dpath);

  std::vector<std::vector<std::string>> qrows;
  for (std::size_t k = 0; k < dens.taus.size(); ++k)
    qrows.push_back({format_double(dens.taus[k]), format_double(dens.values[k]),
                     format_double(level + dens.values[k])});
  const std::string qpath = res.out_dir + "/quantiles.csv";
  write_csv(qpath, {"tau", "change", "level"}, qrows);
  res.files.push_back(qpath);
  write_manifest(res.out_dir, "density", cfg, args, res.files);
  return res;
}

CmdResult cmd_tailrisk(const RunConfig& cfg, const CmdArgs& args) {
  CmdResult res;
  res.out_dir = resolve_out_dir(cfg, args, "tailrisk");
  if (cfg.groups.empty()) throw InputError("config defines no groups");
  const TimeSeriesPanel panel = load_panel(cfg);
  const Estimator method = pick_method(cfg, args);
  const std::string instrument = pick_instrument(cfg, args, method);
  const double tau = pick_tau(cfg, args);
  const std::vector<int> horizons =
      args.horizon > 0 ? std::vector<int>{args.horizon} : cfg.horizons;

  std::vector<std::vector<std::string>> rows, contrast_rows;
  for (int horizon : horizons) {
    std::vector<TailRiskReport> reports;
    for (const auto& [label, gspec] : cfg.groups) {
      const EstimationDataset ds = build_group_dataset(cfg, panel, label, horizon, instrument);
      const FitRecord fit = fit_at(ds, tau, method, options_for(cfg));
      reports.push_back(tail_risk(fit, label, horizon, instrument));
      const auto& r = reports.back();
      rows.push_back({r.group, std::to_string(r.horizon_months), format_double(r.tau),
                      r.instrument.empty() ? "none" : r.instrument, r.method,
                      format_double(r.inflation_coefficient), format_double(r.inflation_se)});
    }
    // Pairwise contrasts within each category.
    for (std::size_t i = 0; i < reports.size(); ++i) {
      for (std::size_t j = i + 1; j < reports.size(); ++j) {
        const auto& ca = cfg.groups.at(reports[i].group).category;
        const auto& cb = cfg.groups.at(reports[j].group).category;
        if (ca.empty() || ca != cb) continue;
        const GroupContrast c = group_contrast(reports[i], reports[j]);
        contrast_rows.push_back({c.group_a, c.group_b, std::to_string(horizon), ca,
                                 format_double(c.coefficient_gap), format_double(c.gap_se),
                                 format_double(c.z_score)});
      }
    }
  }
  const std::string tpath = res.out_dir + "/tailrisk.csv";
  write_csv(tpath, {"group", "horizon", "tau", "instrument", "method", "coefficient", "se"},
            rows);
  res.files.push_back(tpath);
  const std::string cpath = res.out_dir + "/contrasts.csv";
  write_csv(cpath, {"group_a", "group_b", "horizon", "category", "gap", "gap_se", "z"},
            contrast_rows);
  res.files.push_back(cpath);
  write_manifest(res.out_dir, "tailrisk", cfg, args, res.files);
  return res;
}

CmdResult cmd_mc(const RunConfig& cfg, const CmdArgs& args) {
  CmdResult res;
  res.out_dir = resolve_out_dir(cfg, args, "mc");
  DGPSpec spec = cfg.mc.dgp;
  spec.seed = effective_seed(cfg, args);
  StudyOptions opts;
  opts.ivqr = options_for(cfg);
  const MCStudyResult study = run_study(spec, cfg.mc.taus, cfg.mc.reps, cfg.mc.estimator, opts);
  const std::string path = res.out_dir + "/mc.csv";
  write_csv(path, {"tau", "true_alpha", "mean_estimate", "bias", "rmse", "coverage_95", "reps"},
            mc_rows(study));
  res.files.push_back(path);
  if (!study.failure_log.empty()) {
    json f = study.failure_log;
    const std::string fpath = res.out_dir + "/mc_failures.json";
    write_text(fpath, f.dump(2) + "\n");
    res.files.push_back(fpath);
  }
  write_manifest(res.out_dir, "mc", cfg, args, res.files);
  return res;
}

CmdResult cmd_diagnostics(const RunConfig& cfg, const CmdArgs& args) {
  CmdResult res;
  res.out_dir = resolve_out_dir(cfg, args, "diagnostics");
  const TimeSeriesPanel panel = load_panel(cfg);
  const int horizon = pick_horizon(cfg, args);
  std::string instrument = args.instrument;
  if (instrument.empty()) {
    if (cfg.instruments.size() != 1)
      throw InputError("an instrument set must be named (--instrument) for diagnostics");
    instrument = cfg.instruments.begin()->first;
  }
  const EstimationDataset ds = build_group_dataset(cfg, panel, args.group, horizon, instrument);
  const LinearIVFit fit = fit_2sls(ds, linear_options(cfg, horizon));
  const ResidualMoments mom = residual_moments(fit);

  const std::string qpath = res.out_dir + "/qq.csv";
  write_csv(qpath, {"normal_quantile", "empirical_quantile"}, qq_rows(qq_data(fit.residuals)));
  res.files.push_back(qpath);

  json j = linear_iv_json(fit);
  j["skewness"] = mom.skewness;
  j["excess_kurtosis"] = mom.excess_kurtosis;
  j["group"] = args.group;
  j["horizon_months"] = horizon;
  j["instrument"] = instrument;
  const std::string mpath = res.out_dir + "/moments.json";
  write_text(mpath, j.dump(2) + "\n");
  res.files.push_back(mpath);
  write_manifest(res.out_dir, "diagnostics", cfg, args, res.files);
  return res;
}

}  // namespace urisk
