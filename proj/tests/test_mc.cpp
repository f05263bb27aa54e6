#include <doctest.h>

#include <cmath>

#include "urisk/math.hpp"
#include "urisk/mc.hpp"

using namespace urisk;

namespace {

// Reconstructs the latent rank variable U from a simulated dataset: the
// outcome is g + d*(base + slope*g) with g = Phi^-1(U), so g is recoverable
// as (y - d*base)/(1 + slope*d).
std::vector<double> recover_rank(const EstimationDataset& ds, const DGPSpec& spec) {
  std::vector<double> u;
  u.reserve(static_cast<std::size_t>(ds.n()));
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    const double g = (ds.y(i) - ds.d(i) * spec.alpha_base) / (1.0 + spec.alpha_slope * ds.d(i));
    u.push_back(normal_cdf(g));
  }
  return u;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0, sa = 0, sb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    sa += (a[i] - ma) * (a[i] - ma);
    sb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(sa * sb);
}

}  // namespace

TEST_CASE("spec validation") {
  DGPSpec bad;
  bad.n = 10;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = DGPSpec{};
  bad.rho = 1.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  CHECK_NOTHROW(DGPSpec{}.validate());
}

TEST_CASE("analytic truth: defaults give alpha(0.8) ~= 1.16832") {
  DGPSpec spec;
  CHECK(spec.true_alpha(0.8) == doctest::Approx(1.0 + 0.2 * 0.841621).epsilon(1e-5));
  CHECK(spec.true_alpha(0.8) == doctest::Approx(1.16832).epsilon(1e-5));
  spec.alpha_slope = 0.0;
  for (double tau : {0.1, 0.4, 0.9}) CHECK(spec.true_alpha(tau) == spec.alpha_base);
}

TEST_CASE("rho=0 decouples d from the rank variable") {
  DGPSpec spec;
  spec.rho = 0.0;
  spec.n = 10000;
  spec.seed = 5;
  auto ds = simulate_dgp(spec);
  auto u = recover_rank(ds, spec);
  std::vector<double> d(ds.d.data(), ds.d.data() + ds.n());
  CHECK(std::abs(correlation(d, u)) < 0.05);
}

TEST_CASE("rank variable is marginally uniform for any rho") {
  for (double rho : {0.0, 0.5, -0.8}) {
    DGPSpec spec;
    spec.rho = rho;
    spec.n = 10000;
    spec.seed = 7;
    auto ds = simulate_dgp(spec);
    auto u = recover_rank(ds, spec);
    // 1% critical value of the KS statistic.
    CHECK(ks_uniform(u) < 1.6276 / std::sqrt(10000.0));
  }
}

TEST_CASE("same seed is bit-identical, different seeds differ everywhere") {
  DGPSpec spec;
  spec.n = 200;
  spec.seed = 99;
  auto a = simulate_dgp(spec);
  auto b = simulate_dgp(spec);
  CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.d - b.d).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.Z - b.Z).cwiseAbs().maxCoeff() == 0.0);

  spec.seed = 100;
  auto c = simulate_dgp(spec);
  for (Eigen::Index i = 0; i < a.n(); ++i) {
    CHECK(a.y(i) != c.y(i));
    CHECK(a.d(i) != c.d(i));
    CHECK(a.Z(i, 0) != c.Z(i, 0));
  }
}

TEST_CASE("empirical conditional quantiles track the structural quantile function") {
  DGPSpec spec;
  spec.n = 100000;
  spec.seed = 11;
  auto ds = simulate_dgp(spec);
  // Conditional on (d, z) the latent v = (log d - pi*z)/0.3 is known and
  // y has CDF Phi(((q - d*base)/(1 + slope*d) - rho*v)/sqrt(1-rho^2)). The
  // analytic quantile of a coarse (v, d) bin solves the mixture equation
  // mean_i F(q | v_i, d_i) = tau, independent of any estimator.
  const double tau = 0.7;
  const double rbar = std::sqrt(1.0 - spec.rho * spec.rho);
  struct Bin {
    std::vector<double> y, v, d;
  };
  std::vector<Bin> bins(9);
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    const double z = ds.Z(i, 0);
    const double v = (std::log(ds.d(i)) - spec.pi * z) / 0.3;
    if (std::abs(v) > 1.2 || ds.d(i) < 0.5 || ds.d(i) > 2.0) continue;
    const int vb = std::min(2, static_cast<int>((v + 1.2) / 0.8));
    const int db = std::min(2, static_cast<int>((ds.d(i) - 0.5) / 0.5));
    auto& bin = bins[static_cast<std::size_t>(3 * vb + db)];
    bin.y.push_back(ds.y(i));
    bin.v.push_back(v);
    bin.d.push_back(ds.d(i));
  }
  auto mixture_cdf = [&](const Bin& bin, double q) {
    double s = 0.0;
    for (std::size_t i = 0; i < bin.y.size(); ++i) {
      const double g = (q - bin.d[i] * spec.alpha_base) / (1.0 + spec.alpha_slope * bin.d[i]);
      s += normal_cdf((g - spec.rho * bin.v[i]) / rbar);
    }
    return s / static_cast<double>(bin.y.size());
  };
  int checked = 0;
  for (auto& bin : bins) {
    // Below ~2000 observations the sampling noise of the empirical quantile
    // itself approaches the tolerance.
    if (bin.y.size() < 2000) continue;
    ++checked;
    double lo = -10.0, hi = 10.0;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (mixture_cdf(bin, mid) < tau ? lo : hi) = mid;
    }
    const double emp = sample_quantile(bin.y, tau);
    CHECK(std::abs(emp - 0.5 * (lo + hi)) < 0.05);
  }
  CHECK(checked >= 6);
}

TEST_CASE("reduced-form QR is nearly unbiased when exogenous, biased when not") {
  std::vector<double> taus = {0.2, 0.5, 0.8};
  DGPSpec exo;
  exo.rho = 0.0;
  exo.n = 2000;
  exo.seed = 21;
  StudyOptions opts;
  opts.exec = Exec::openmp;
  auto clean = run_study(exo, taus, 200, McEstimator::qr, opts);
  for (const auto& row : clean.rows) {
    CHECK(row.reps == 200);
    CHECK(std::abs(row.bias) <= 0.05);
    CHECK(row.rmse >= std::abs(row.bias));
  }

  DGPSpec endo;
  endo.rho = 0.5;
  endo.n = 2000;
  endo.seed = 22;
  auto biased = run_study(endo, {0.5}, 200, McEstimator::qr, opts);
  const auto& row = biased.rows[0];
  // t-statistic of the bias: se(bias) ~= rmse-spread / sqrt(reps).
  const double spread = std::sqrt(std::max(row.rmse * row.rmse - row.bias * row.bias, 1e-12));
  const double t = std::abs(row.bias) / (spread / std::sqrt(200.0));
  CHECK(t > 3.0);
}

TEST_CASE("study is deterministic and parallel equals serial") {
  DGPSpec spec;
  spec.n = 400;
  spec.seed = 31;
  StudyOptions serial;
  serial.exec = Exec::serial;
  StudyOptions par;
  par.exec = Exec::openmp;
  auto a = run_study(spec, {0.5}, 50, McEstimator::qr, serial);
  auto b = run_study(spec, {0.5}, 50, McEstimator::qr, par);
  CHECK(a.rows[0].mean_estimate == b.rows[0].mean_estimate);
  CHECK(a.rows[0].rmse == b.rows[0].rmse);
  CHECK(a.rows[0].coverage_95 == b.rows[0].coverage_95);
}

TEST_CASE("ivqr grid study smoke run: small bias and sane coverage at the median") {
  DGPSpec spec;
  spec.n = 1000;
  spec.seed = 41;
  StudyOptions opts;
  opts.exec = Exec::openmp;
  auto res = run_study(spec, {0.5}, 60, McEstimator::ivqr_grid, opts);
  const auto& row = res.rows[0];
  CHECK(row.reps >= 54);
  CHECK(std::abs(row.bias) <= 0.08);
  CHECK(row.coverage_95 >= 0.85);
  CHECK(row.coverage_95 <= 1.0);
}

TEST_CASE("too many failures abort the study with a log") {
  DGPSpec spec;
  spec.n = 100;
  spec.seed = 51;
  StudyOptions opts;
  opts.exec = Exec::serial;
  // A grid far away from the truth with no refinement makes every grid fit
  // hit the boundary.
  opts.ivqr.grid = AlphaGrid{-30.0, -20.0, 1.0, 0};
  CHECK_THROWS_AS(run_study(spec, {0.5}, 50, McEstimator::ivqr_grid, opts), StudyError);
}
