// Compares the serial reference implementations of the data-parallel kernels
// against their OpenMP counterparts: same inputs, timed, results checked for
// exact equality.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "urisk/mc.hpp"
#include "urisk/parallel.hpp"
#include "urisk/risk_density.hpp"

using namespace urisk;

namespace {

double now() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct Timing {
  double serial_s = 0, parallel_s = 0;
  double max_diff = 0;
};

void report(const char* name, const Timing& t) {
  std::printf("%-22s serial %8.3f s   openmp %8.3f s   speedup %5.2fx   max|diff| %.3g\n", name,
              t.serial_s, t.parallel_s, t.serial_s / std::max(t.parallel_s, 1e-12), t.max_diff);
}

Timing bench_wald_profile(int n) {
  DGPSpec spec;
  spec.n = n;
  spec.seed = 11;
  const auto ds = simulate_dgp(spec);
  const AlphaGrid grid = default_alpha_grid(ds);
  IVQROptions ser, par;
  ser.exec = Exec::serial;
  par.exec = Exec::openmp;
  Timing t;
  double t0 = now();
  const auto a = fit_ivqr_grid(ds, 0.8, grid, ser);
  t.serial_s = now() - t0;
  t0 = now();
  const auto b = fit_ivqr_grid(ds, 0.8, grid, par);
  t.parallel_s = now() - t0;
  t.max_diff = std::abs(a.alpha - b.alpha);
  for (std::size_t i = 0; i < a.wald_profile.size(); ++i)
    if (std::isfinite(a.wald_profile[i]) && std::isfinite(b.wald_profile[i]))
      t.max_diff = std::max(t.max_diff, std::abs(a.wald_profile[i] - b.wald_profile[i]));
  return t;
}

Timing bench_tau_grid(int n) {
  DGPSpec spec;
  spec.n = n;
  spec.seed = 13;
  const auto ds = simulate_dgp(spec);
  Timing t;
  double t0 = now();
  const auto a = fit_quantile_grid(ds, default_tau_grid(), Estimator::qr, {}, Exec::serial);
  t.serial_s = now() - t0;
  t0 = now();
  const auto b = fit_quantile_grid(ds, default_tau_grid(), Estimator::qr, {}, Exec::openmp);
  t.parallel_s = now() - t0;
  for (std::size_t i = 0; i < a.fits.size(); ++i)
    t.max_diff = std::max(t.max_diff, std::abs(a.fits[i].alpha - b.fits[i].alpha));
  return t;
}

Timing bench_mc(int n, int reps) {
  DGPSpec spec;
  spec.n = n;
  spec.seed = 17;
  StudyOptions ser, par;
  ser.exec = Exec::serial;
  par.exec = Exec::openmp;
  Timing t;
  double t0 = now();
  const auto a = run_study(spec, {0.5}, reps, McEstimator::ivqr_smoothed, ser);
  t.serial_s = now() - t0;
  t0 = now();
  const auto b = run_study(spec, {0.5}, reps, McEstimator::ivqr_smoothed, par);
  t.parallel_s = now() - t0;
  t.max_diff = std::abs(a.rows[0].mean_estimate - b.rows[0].mean_estimate);
  return t;
}

}  // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
  const int n = quick ? 300 : 2000;
  const int reps = quick ? 50 : 200;
  std::printf("kernel benchmarks, n=%d (threads: OpenMP default)\n", n);
  report("wald_profile", bench_wald_profile(n));
  report("quantile_tau_grid", bench_tau_grid(n));
  report("mc_replications", bench_mc(quick ? 300 : 1000, reps));
  return 0;
}
