#pragma once

#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "urisk/dataset.hpp"
#include "urisk/estimators.hpp"
#include "urisk/mc.hpp"

namespace urisk {

using nlohmann::json;

// A derived series computed after loading the CSV, e.g. year-over-year
// inflation from a price index.
struct DeriveSpec {
  std::string name;
  std::string source;
  YoyMode mode = YoyMode::percent_change;
};

struct GroupSpec {
  std::string dependent_series;
  std::string endogenous_series;
  std::vector<std::string> control_series;
  std::optional<Month> sample_start, sample_end;
  std::string category;  // groups in a category are contrasted pairwise
};

struct EstimatorConfig {
  Estimator method = Estimator::qr;
  double tau = 0.80;
  std::vector<double> taus;  // empty -> default 0.10..0.90 grid
  std::optional<AlphaGrid> grid;
  SmoothingBandwidth bandwidth;
  CovSpec covariance;
  bool hac_lag_from_horizon = false;  // lags = horizon-1 when hac is chosen
};

struct McConfig {
  DGPSpec dgp;
  int reps = 200;
  std::vector<double> taus = {0.2, 0.5, 0.8};
  Estimator estimator = Estimator::ivqr_grid;
};

struct RunConfig {
  std::string csv_path;
  std::string date_column;
  std::vector<DeriveSpec> derive;
  std::map<std::string, GroupSpec> groups;                    // ordered by label
  std::map<std::string, std::vector<std::string>> instruments;  // named sets
  std::vector<int> horizons = {12, 36};
  EstimatorConfig estimator;
  McConfig mc;
  std::string output_dir;
  std::uint64_t seed = 1;
  int threads = 0;

  json raw;  // the parsed config document, embedded into manifests
};

// Parses a config file or a run manifest (a manifest embeds the config under
// the "config" key and is accepted anywhere a config is).
RunConfig load_config(const std::string& path);
RunConfig parse_config(const json& doc);

// Loads the panel named by the config and applies the derive rules.
TimeSeriesPanel load_panel(const RunConfig& cfg);

// Assembles the dataset spec for one group/horizon/instrument-set.
DatasetSpec dataset_spec(const RunConfig& cfg, const std::string& group, int horizon,
                         const std::string& instrument_label);

// IVQR options implied by the estimator config.
IVQROptions ivqr_options(const RunConfig& cfg);

}  // namespace urisk
