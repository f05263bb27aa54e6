#pragma once

#include <string>
#include <vector>

#include "urisk/estimators.hpp"
#include "urisk/parallel.hpp"

namespace urisk {

// Typed error for a quantile-grid estimation with too many per-tau failures.
struct QuantileGridError : Error {
  std::vector<std::pair<double, std::string>> failures;
  QuantileGridError(const std::string& msg, std::vector<std::pair<double, std::string>> f)
      : Error(msg), failures(std::move(f)) {}
};

// Fits across a quantile grid for one dataset.
struct QuantileGridFit {
  std::vector<double> taus;       // successful fits only, strictly increasing
  std::vector<FitRecord> fits;    // aligned with taus
  std::vector<std::pair<double, std::string>> failures;
  std::string dataset_id;
  Estimator estimator = Estimator::qr;

  const FitRecord& at_tau(double tau) const;
  bool has_tau(double tau) const;
};

// The paper-style default grid: 0.10 to 0.90 in steps of 0.05.
std::vector<double> default_tau_grid();

// One fit per tau; individual failures are recorded and tolerated while at
// least 80% succeed.
QuantileGridFit fit_quantile_grid(const EstimationDataset& ds, const std::vector<double>& taus,
                                  Estimator estimator, const IVQROptions& opts = {},
                                  Exec exec = Exec::openmp);

// Monotone rearrangement: the values sorted ascending (paired with sorted
// taus). Idempotent and multiset-preserving.
std::vector<double> rearrange(std::vector<double> values);

struct DensityOptions {
  double tail_lo = 0.02;   // linear tail extension targets
  double tail_hi = 0.98;
  int support_points = 401;
};

struct PredictiveDensity {
  VectorXd support;        // uniform grid over the truncated range
  VectorXd density;        // normalized: trapezoid integral is exactly 1
  std::vector<double> taus;    // quantile-function knots (tail knots included)
  std::vector<double> values;  // rearranged knot values, nondecreasing
  VectorXd conditioning_x;
  double conditioning_d = 0.0;

  double quantile(double tau) const;  // linear interpolation of the knots
  // Quantile recovered by inverting the exact step-density CDF; matches the
  // knots at grid taus up to floating-point error.
  double quantile_from_density(double tau) const;
};

PredictiveDensity predictive_density(const QuantileGridFit& grid, const VectorXd& x, double d,
                                     const DensityOptions& opts = {});

struct TailRiskReport {
  std::string group;
  int horizon_months = 0;
  double tau = 0.80;
  std::string instrument;
  double inflation_coefficient = 0.0;
  double inflation_se = 0.0;
  VectorXd full_coefficients;  // (alpha, beta)
  VectorXd full_ses;
  std::vector<std::string> coef_names;
  std::string method;
};

TailRiskReport tail_risk(const QuantileGridFit& grid, double tau = 0.80,
                         const std::string& group = "", int horizon_months = 0,
                         const std::string& instrument = "");
TailRiskReport tail_risk(const FitRecord& fit, const std::string& group = "",
                         int horizon_months = 0, const std::string& instrument = "");

struct GroupContrast {
  std::string group_a, group_b;
  double coefficient_gap = 0.0;
  double gap_se = 0.0;
  double z_score = 0.0;
};

// Independence-based contrast: gap_se = sqrt(se_a^2 + se_b^2). Reports must
// share instrument, tau, and horizon.
GroupContrast group_contrast(const TailRiskReport& a, const TailRiskReport& b);

// Moving-block bootstrap contrast for groups sharing sample months: both
// datasets are resampled on the same month blocks and refit jointly.
GroupContrast group_contrast_bootstrap(const EstimationDataset& ds_a,
                                       const EstimationDataset& ds_b, double tau,
                                       Estimator estimator, const IVQROptions& opts,
                                       int block_length, int replications, std::uint64_t seed,
                                       const std::string& group_a = "a",
                                       const std::string& group_b = "b");

}  // namespace urisk
