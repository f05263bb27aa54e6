#include "urisk/risk_density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "urisk/math.hpp"

namespace urisk {

const FitRecord& QuantileGridFit::at_tau(double tau) const {
  for (std::size_t i = 0; i < taus.size(); ++i)
    if (std::abs(taus[i] - tau) < 1e-9) return fits[i];
  std::string have;
  for (double t : taus) have += " " + std::to_string(t);
  throw Error("no fit at tau=" + std::to_string(tau) + "; available:" + have);
}

bool QuantileGridFit::has_tau(double tau) const {
  for (double t : taus)
    if (std::abs(t - tau) < 1e-9) return true;
  return false;
}

std::vector<double> default_tau_grid() {
  std::vector<double> taus;
  for (int k = 2; k <= 18; ++k) taus.push_back(0.05 * k);
  return taus;
}

QuantileGridFit fit_quantile_grid(const EstimationDataset& ds, const std::vector<double>& taus,
                                  Estimator estimator, const IVQROptions& opts, Exec exec) {
  if (taus.empty()) throw InputError("fit_quantile_grid: empty tau grid");
  for (std::size_t i = 0; i < taus.size(); ++i) {
    QuantileLevel check{taus[i]};
    if (i > 0 && !(taus[i] > taus[i - 1]))
      throw InputError("fit_quantile_grid: taus must be strictly increasing");
  }

  const int k = static_cast<int>(taus.size());
  struct Slot {
    FitRecord fit;
    bool ok = false;
    std::string error;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(k));

  IVQROptions inner = opts;
  if (exec == Exec::openmp) inner.exec = Exec::serial;  // parallelism lives on the tau loop
  for_each_index(k, exec, [&](int i) {
    auto& slot = slots[static_cast<std::size_t>(i)];
    try {
      slot.fit = fit_at(ds, taus[static_cast<std::size_t>(i)], estimator, inner);
      slot.ok = true;
    } catch (const std::exception& e) {
      slot.error = e.what();
    }
  });

  QuantileGridFit out;
  out.dataset_id = ds.label;
  out.estimator = estimator;
  for (int i = 0; i < k; ++i) {
    const auto& slot = slots[static_cast<std::size_t>(i)];
    if (slot.ok) {
      out.taus.push_back(taus[static_cast<std::size_t>(i)]);
      out.fits.push_back(slot.fit);
    } else {
      out.failures.emplace_back(taus[static_cast<std::size_t>(i)], slot.error);
    }
  }
  if (static_cast<double>(out.failures.size()) > 0.2 * k) {
    std::string msg = "fit_quantile_grid: " + std::to_string(out.failures.size()) + " of " +
                      std::to_string(k) + " tau fits failed";
    throw QuantileGridError(msg, out.failures);
  }
  return out;
}

std::vector<double> rearrange(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return values;
}

PredictiveDensity predictive_density(const QuantileGridFit& grid, const VectorXd& x, double d,
                                     const DensityOptions& opts) {
  if (grid.fits.size() < 4)
    throw Error("predictive_density: needs at least 4 usable tau fits, have " +
                std::to_string(grid.fits.size()));
  if (!grid.fits.empty() && x.size() != grid.fits.front().beta.size())
    throw InputError("predictive_density: conditioning vector does not match regressor layout");
  if (!(opts.tail_lo > 0 && opts.tail_hi < 1 && opts.tail_lo < grid.taus.front() &&
        opts.tail_hi > grid.taus.back()))
    throw InputError("predictive_density: tail targets must bracket the tau grid inside (0,1)");
  if (opts.support_points < 2) throw InputError("predictive_density: support_points < 2");

  std::vector<double> preds;
  preds.reserve(grid.fits.size());
  for (const auto& fit : grid.fits) preds.push_back(fit.predict(x, d));
  const std::vector<double> sorted = rearrange(preds);

  PredictiveDensity out;
  out.conditioning_x = x;
  out.conditioning_d = d;

  // Knots: tail extension with the slope of the outermost grid segment.
  const std::size_t m = sorted.size();
  const double slope_lo =
      (sorted[1] - sorted[0]) / (grid.taus[1] - grid.taus[0]);
  const double slope_hi =
      (sorted[m - 1] - sorted[m - 2]) / (grid.taus[m - 1] - grid.taus[m - 2]);
  out.taus.push_back(opts.tail_lo);
  out.values.push_back(sorted.front() - slope_lo * (grid.taus.front() - opts.tail_lo));
  for (std::size_t i = 0; i < m; ++i) {
    out.taus.push_back(grid.taus[i]);
    out.values.push_back(sorted[i]);
  }
  out.taus.push_back(opts.tail_hi);
  out.values.push_back(sorted.back() + slope_hi * (opts.tail_hi - grid.taus.back()));

  const double q_lo = out.values.front(), q_hi = out.values.back();
  if (!(q_hi > q_lo)) throw Error("predictive_density: degenerate quantile function");

  // Knot-level density from centered difference quotients of the quantile
  // function (one-sided at the ends), linearly interpolated across the
  // support grid. Centered stencils average adjacent segments, which damps
  // the sensitivity to noise in any single fitted quantile.
  const std::size_t nk = out.values.size();
  std::vector<double> fknot(nk, 0.0);
  for (std::size_t k = 0; k < nk; ++k) {
    const std::size_t a = k == 0 ? 0 : k - 1;
    const std::size_t b = k + 1 == nk ? k : k + 1;
    const double width = out.values[b] - out.values[a];
    fknot[k] = width > 0 ? (out.taus[b] - out.taus[a]) / width : 0.0;
  }

  out.support.resize(opts.support_points);
  out.density.resize(opts.support_points);
  const double dq = (q_hi - q_lo) / (opts.support_points - 1);
  std::size_t seg = 0;
  for (int i = 0; i < opts.support_points; ++i) {
    const double q = q_lo + dq * i;
    out.support(i) = q;
    while (seg + 2 < nk && q > out.values[seg + 1]) ++seg;
    const double width = out.values[seg + 1] - out.values[seg];
    const double w = width > 0 ? std::clamp((q - out.values[seg]) / width, 0.0, 1.0) : 0.0;
    out.density(i) = fknot[seg] + w * (fknot[seg + 1] - fknot[seg]);
  }
  double integral = 0.0;
  for (int i = 0; i + 1 < opts.support_points; ++i)
    integral += 0.5 * (out.density(i) + out.density(i + 1)) * dq;
  if (!(integral > 0)) throw Error("predictive_density: zero-mass density");
  out.density /= integral;
  return out;
}

double PredictiveDensity::quantile(double tau) const {
  if (tau <= taus.front()) return values.front();
  if (tau >= taus.back()) return values.back();
  const auto it = std::upper_bound(taus.begin(), taus.end(), tau);
  const std::size_t k = static_cast<std::size_t>(it - taus.begin()) - 1;
  const double w = (tau - taus[k]) / (taus[k + 1] - taus[k]);
  return values[k] + w * (values[k + 1] - values[k]);
}

double PredictiveDensity::quantile_from_density(double tau) const {
  // The sampled density is a step function whose exact CDF is the piecewise
  // linear knot map renormalized over [taus.front(), taus.back()]; invert
  // that CDF analytically.
  const double mass = taus.back() - taus.front();
  double p = (std::clamp(tau, taus.front(), taus.back()) - taus.front()) / mass;
  for (std::size_t k = 0; k + 1 < taus.size(); ++k) {
    const double seg_mass = (taus[k + 1] - taus[k]) / mass;
    if (p <= seg_mass || k + 2 == taus.size()) {
      const double w = seg_mass > 0 ? p / seg_mass : 1.0;
      return values[k] + std::min(w, 1.0) * (values[k + 1] - values[k]);
    }
    p -= seg_mass;
  }
  return values.back();
}

namespace {

TailRiskReport report_from(const FitRecord& fit, const std::string& group, int horizon_months,
                           const std::string& instrument) {
  TailRiskReport r;
  r.group = group;
  r.horizon_months = horizon_months;
  r.tau = fit.tau;
  r.instrument = instrument;
  r.inflation_coefficient = fit.alpha;
  r.inflation_se = fit.ses.size() > 0 ? fit.ses(0) : 0.0;
  r.full_coefficients = fit.coefficients();
  r.full_ses = fit.ses;
  r.coef_names = fit.coef_names;
  r.method = fit.method;
  return r;
}

}  // namespace

TailRiskReport tail_risk(const QuantileGridFit& grid, double tau, const std::string& group,
                         int horizon_months, const std::string& instrument) {
  return report_from(grid.at_tau(tau), group, horizon_months, instrument);
}

TailRiskReport tail_risk(const FitRecord& fit, const std::string& group, int horizon_months,
                         const std::string& instrument) {
  return report_from(fit, group, horizon_months, instrument);
}

GroupContrast group_contrast(const TailRiskReport& a, const TailRiskReport& b) {
  if (std::abs(a.tau - b.tau) > 1e-9 || a.horizon_months != b.horizon_months ||
      a.instrument != b.instrument)
    throw InputError("group_contrast: reports differ in tau, horizon, or instrument");
  GroupContrast c;
  c.group_a = a.group;
  c.group_b = b.group;
  c.coefficient_gap = a.inflation_coefficient - b.inflation_coefficient;
  c.gap_se = std::sqrt(a.inflation_se * a.inflation_se + b.inflation_se * b.inflation_se);
  c.z_score = c.gap_se > 0 ? c.coefficient_gap / c.gap_se
                           : (c.coefficient_gap == 0.0 ? 0.0
                                                       : std::numeric_limits<double>::infinity());
  return c;
}

namespace {

EstimationDataset take_rows(const EstimationDataset& ds, const std::vector<int>& rows) {
  EstimationDataset out = ds;
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  out.y.resize(n);
  out.d.resize(n);
  out.X.resize(n, ds.X.cols());
  out.Z.resize(n, ds.Z.cols());
  out.t_index.clear();
  for (Eigen::Index i = 0; i < n; ++i) {
    const int r = rows[static_cast<std::size_t>(i)];
    out.y(i) = ds.y(r);
    out.d(i) = ds.d(r);
    out.X.row(i) = ds.X.row(r);
    out.Z.row(i) = ds.Z.row(r);
    out.t_index.push_back(ds.t_index[static_cast<std::size_t>(r)]);
  }
  return out;
}

}  // namespace

GroupContrast group_contrast_bootstrap(const EstimationDataset& ds_a,
                                       const EstimationDataset& ds_b, double tau,
                                       Estimator estimator, const IVQROptions& opts,
                                       int block_length, int replications, std::uint64_t seed,
                                       const std::string& group_a, const std::string& group_b) {
  // Align both groups to their common months so blocks resample the same
  // calendar dates in each.
  std::vector<int> rows_a, rows_b;
  {
    std::size_t i = 0, j = 0;
    while (i < ds_a.t_index.size() && j < ds_b.t_index.size()) {
      if (ds_a.t_index[i] == ds_b.t_index[j]) {
        rows_a.push_back(static_cast<int>(i));
        rows_b.push_back(static_cast<int>(j));
        ++i;
        ++j;
      } else if (ds_a.t_index[i] < ds_b.t_index[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }
  const int n = static_cast<int>(rows_a.size());
  if (n < 30) throw InputError("group_contrast_bootstrap: fewer than 30 common months");
  block_length = std::clamp(block_length, 1, n);

  const EstimationDataset a0 = take_rows(ds_a, rows_a);
  const EstimationDataset b0 = take_rows(ds_b, rows_b);
  IVQROptions inner = opts;
  inner.exec = Exec::serial;
  const FitRecord fa = fit_at(a0, tau, estimator, inner);
  const FitRecord fb = fit_at(b0, tau, estimator, inner);
  const double gap0 = fa.alpha - fb.alpha;

  std::vector<double> gaps;
  int failures = 0;
  for (int b = 0; b < replications; ++b) {
    Rng rng = Rng::for_rep(seed, static_cast<std::uint64_t>(b));
    std::vector<int> idx;
    idx.reserve(static_cast<std::size_t>(n));
    while (static_cast<int>(idx.size()) < n) {
      const int start = static_cast<int>(rng.uniform() * (n - block_length + 1));
      for (int k = 0; k < block_length && static_cast<int>(idx.size()) < n; ++k)
        idx.push_back(start + k);
    }
    try {
      const FitRecord ra = fit_at(take_rows(a0, idx), tau, estimator, inner);
      const FitRecord rb = fit_at(take_rows(b0, idx), tau, estimator, inner);
      gaps.push_back(ra.alpha - rb.alpha);
    } catch (const std::exception&) {
      ++failures;
    }
  }
  if (gaps.size() < static_cast<std::size_t>(replications) / 2)
    throw Error("group_contrast_bootstrap: more than half of the replications failed");

  GroupContrast c;
  c.group_a = group_a;
  c.group_b = group_b;
  c.coefficient_gap = gap0;
  c.gap_se = sd(gaps);
  c.z_score = c.gap_se > 0 ? gap0 / c.gap_se : 0.0;
  return c;
}

}  // namespace urisk
