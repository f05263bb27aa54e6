#include "urisk/estimators.hpp"

#include <cmath>

#include "urisk/error.hpp"
#include "urisk/qreg.hpp"

namespace urisk {

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::qr: return "qr";
    case Estimator::ivqr_grid: return "ivqr_grid";
    case Estimator::ivqr_smoothed: return "ivqr_smoothed";
    case Estimator::ivqr_auto: return "ivqr_auto";
  }
  return "?";
}

Estimator estimator_from_string(const std::string& s) {
  if (s == "qr") return Estimator::qr;
  if (s == "ivqr_grid" || s == "ivqr") return Estimator::ivqr_grid;
  if (s == "ivqr_smoothed" || s == "smoothed") return Estimator::ivqr_smoothed;
  if (s == "ivqr_auto" || s == "auto") return Estimator::ivqr_auto;
  throw InputError("unknown estimator '" + s +
                   "' (expected qr, ivqr_grid, ivqr_smoothed, or ivqr_auto)");
}

namespace {

FitRecord from_ivqr(const IVQRFit& fit) {
  FitRecord r;
  r.tau = fit.tau;
  r.alpha = fit.alpha;
  r.beta = fit.beta;
  r.covariance = fit.covariance;
  r.ses = fit.ses;
  r.method = fit.method == IVQRMethod::grid ? "grid" : "smoothed";
  r.fallback_triggered = fit.fallback_triggered;
  r.fallback_reason = fit.fallback_reason;
  r.n = fit.n;
  r.wald_at_min = fit.wald_at_min;
  r.profile_alphas = fit.profile_alphas;
  r.wald_profile = fit.wald_profile;
  r.coef_names = fit.coef_names;
  return r;
}

}  // namespace

FitRecord fit_at(const EstimationDataset& ds, QuantileLevel tau, Estimator estimator,
                 const IVQROptions& opts) {
  if (estimator == Estimator::qr) {
    MatrixXd A(ds.n(), ds.p_x() + 1);
    A.col(0) = ds.d;
    A.rightCols(ds.p_x()) = ds.X;
    auto fit = fit_quantile(A, ds.y, tau, opts.qr);
    FitRecord r;
    r.tau = tau;
    r.alpha = fit.coefficients(0);
    r.beta = fit.coefficients.tail(ds.p_x());
    if (opts.compute_covariance) {
      r.covariance = qreg_cov(fit, A);
      r.ses = r.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    }
    r.method = "qr";
    r.degenerate_ties = fit.solver_info.degenerate_ties;
    r.n = ds.n();
    r.objective = fit.objective;
    r.coef_names.push_back(ds.endogenous_name.empty() ? "d" : ds.endogenous_name);
    for (const auto& nm : ds.x_names) r.coef_names.push_back(nm);
    return r;
  }
  if (estimator == Estimator::ivqr_grid) {
    const AlphaGrid grid = opts.grid ? *opts.grid : default_alpha_grid(ds);
    return from_ivqr(fit_ivqr_grid(ds, tau, grid, opts));
  }
  if (estimator == Estimator::ivqr_smoothed)
    return from_ivqr(fit_ivqr_smoothed(ds, tau, opts.bandwidth, opts));
  return from_ivqr(fit_ivqr_auto(ds, tau, opts));
}

}  // namespace urisk
