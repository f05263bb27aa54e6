#include "urisk/mc.hpp"

#include <cmath>

#include "urisk/error.hpp"
#include "urisk/math.hpp"

namespace urisk {

void DGPSpec::validate() const {
  if (n < 50) throw InputError("dgp: n must be >= 50");
  if (!(std::abs(rho) < 1.0)) throw InputError("dgp: |rho| must be < 1");
  if (alpha_slope < 0.0) throw InputError("dgp: alpha_slope must be >= 0 for monotonicity");
}

double DGPSpec::true_alpha(double tau) const {
  return alpha_base + alpha_slope * normal_quantile(tau);
}

double DGPSpec::true_intercept(double tau) const { return normal_quantile(tau); }

EstimationDataset simulate_dgp(const DGPSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const int n = spec.n;
  EstimationDataset ds;
  ds.y.resize(n);
  ds.d.resize(n);
  ds.X = MatrixXd::Ones(n, 1);
  ds.Z.resize(n, 1);
  const double rbar = std::sqrt(1.0 - spec.rho * spec.rho);
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    const double v = rng.normal();
    const double w = rng.normal();
    const double rank_gauss = spec.rho * v + rbar * w;  // Phi^-1(U)
    const double d = std::exp(spec.pi * z + 0.3 * v);
    ds.Z(i, 0) = z;
    ds.d(i) = d;
    ds.y(i) = rank_gauss + d * (spec.alpha_base + spec.alpha_slope * rank_gauss);
  }
  ds.x_names = {"const"};
  ds.z_names = {"z"};
  ds.endogenous_name = "d";
  ds.label = "simulated";
  return ds;
}

namespace {

struct FitCell {
  double estimate = 0;
  double se = 0;
  bool ok = false;
  std::string error;
};

FitCell fit_one(const EstimationDataset& ds, double tau, McEstimator est,
                const IVQROptions& base_opts) {
  FitCell cell;
  try {
    IVQROptions opts = base_opts;
    opts.exec = Exec::serial;  // replications already run in parallel
    const FitRecord fit = fit_at(ds, tau, est, opts);
    cell.estimate = fit.alpha;
    cell.se = fit.ses.size() > 0 ? fit.ses(0) : 0.0;
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.error = e.what();
  }
  return cell;
}

}  // namespace

MCStudyResult run_study(const DGPSpec& spec, const std::vector<double>& taus, int reps,
                        McEstimator estimator, const StudyOptions& opts) {
  spec.validate();
  if (reps < 50) throw InputError("run_study: needs at least 50 replications");
  for (double t : taus) QuantileLevel{t};

  const int nt = static_cast<int>(taus.size());
  std::vector<FitCell> cells(static_cast<std::size_t>(reps * nt));

  for_each_index(reps, opts.exec, [&](int rep) {
    DGPSpec rep_spec = spec;
    rep_spec.seed = derive_stream_seed(spec.seed, static_cast<std::uint64_t>(rep));
    const EstimationDataset ds = simulate_dgp(rep_spec);
    for (int j = 0; j < nt; ++j)
      cells[static_cast<std::size_t>(rep * nt + j)] = fit_one(ds, taus[j], estimator, opts.ivqr);
  });

  MCStudyResult out;
  out.requested_reps = reps;
  const double zcrit = 1.959963984540054;
  for (int j = 0; j < nt; ++j) {
    MCRow row;
    row.tau = taus[static_cast<std::size_t>(j)];
    row.true_alpha = spec.true_alpha(row.tau);
    double sum = 0, sq = 0;
    int covered = 0, ok = 0;
    for (int rep = 0; rep < reps; ++rep) {
      const auto& c = cells[static_cast<std::size_t>(rep * nt + j)];
      if (!c.ok) continue;
      ++ok;
      sum += c.estimate;
      sq += (c.estimate - row.true_alpha) * (c.estimate - row.true_alpha);
      if (std::abs(c.estimate - row.true_alpha) <= zcrit * c.se) ++covered;
    }
    row.reps = ok;
    if (ok > 0) {
      row.mean_estimate = sum / ok;
      row.bias = row.mean_estimate - row.true_alpha;
      row.rmse = std::sqrt(sq / ok);
      row.coverage_95 = static_cast<double>(covered) / ok;
    }
    out.rows.push_back(row);
  }
  for (int rep = 0; rep < reps; ++rep)
    for (int j = 0; j < nt; ++j) {
      const auto& c = cells[static_cast<std::size_t>(rep * nt + j)];
      if (!c.ok) {
        ++out.failed_fits;
        if (out.failure_log.size() < 50)
          out.failure_log.push_back("rep " + std::to_string(rep) + " tau " +
                                    std::to_string(taus[static_cast<std::size_t>(j)]) + ": " +
                                    c.error);
      }
    }
  const double share =
      static_cast<double>(out.failed_fits) / static_cast<double>(reps * nt);
  if (share > opts.max_failure_share)
    throw StudyError("run_study: estimator failed in " + std::to_string(out.failed_fits) +
                         " of " + std::to_string(reps * nt) + " fits",
                     out.failure_log);
  return out;
}

}  // namespace urisk
