// Acceptance suite: one line per criterion, nonzero exit if any unconditional
// criterion fails. Criteria 8 and 9 run only when the user-assembled
// replication panel is present (see README, "Replication data").

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "urisk/commands.hpp"
#include "urisk/linear_iv.hpp"
#include "urisk/math.hpp"
#include "urisk/mc.hpp"
#include "urisk/risk_density.hpp"
#include "urisk/serialize.hpp"

using namespace urisk;
namespace fs = std::filesystem;

namespace {

struct Skip {
  std::string reason;
};

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- criterion 1: QR oracle equivalence --------------------------------

std::string criterion1() {
  const double t0 = now_s();
  Rng rng(20240801);
  int checked = 0;
  double worst = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 8 + static_cast<int>(rng.uniform() * 23);  // 8..30
    const int p = 1 + static_cast<int>(rng.uniform() * 2.999);
    MatrixXd X = test::random_design(rng, n, p);
    VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = 2.0 * rng.normal();
    const double tau = 0.05 + 0.90 * rng.uniform();
    const auto fit = fit_quantile(X, y, tau);
    const auto oracle = test::brute_force_qr(X, y, tau);
    const double rel = std::abs(fit.objective - oracle.objective) /
                       std::max(1e-300, std::abs(oracle.objective));
    worst = std::max(worst, rel);
    ++checked;
  }
  const double dt = now_s() - t0;
  char msg[160];
  std::snprintf(msg, sizeof(msg), "%d instances, worst relative gap %.2e, %.1f s", checked,
                worst, dt);
  if (worst > 1e-10) return std::string("objective mismatch: ") + msg;
  if (dt > 60.0) return std::string("too slow: ") + msg;
  return std::string("PASS ") + msg;
}

// ---- criterion 2: pointwise identities ----------------------------------

std::string criterion2() {
  if (smoothed_indicator(-1.0) != 1.0) return "I~(-1) != 1";
  if (smoothed_indicator(1.0) != 0.0) return "I~(1) != 0";
  if (smoothed_indicator(0.0) != 0.5) return "I~(0) != 0.5";
  if (check_loss(0.0, 0.37) != 0.0) return "rho(0) != 0";
  if (std::abs(check_loss(2.0, 0.8) - 1.6) > 1e-15) return "rho(2;0.8) != 1.6";
  if (std::abs(check_loss(-2.0, 0.8) - 0.4) > 1e-15) return "rho(-2;0.8) != 0.4";
  Rng rng(77);
  for (int i = 0; i < 1000; ++i) {
    const double u = 5.0 * rng.normal();
    const double tau = rng.uniform();
    if (std::abs(check_loss(u, tau) - check_loss(-u, 1.0 - tau)) > 1e-12)
      return "rho(u,tau) != rho(-u,1-tau)";
  }
  return "PASS identities exact";
}

// ---- criterion 3: exogeneity reductions ---------------------------------

std::string criterion3() {
  double worst_iv = 0.0, worst_grid_gap = 0.0;
  for (int s = 0; s < 50; ++s) {
    DGPSpec spec;
    spec.rho = 0.0;
    spec.n = 300;
    spec.seed = 5000 + static_cast<std::uint64_t>(s);
    EstimationDataset ds = simulate_dgp(spec);
    ds.Z = ds.d;
    ds.z_names = {"d"};

    // 2SLS must equal OLS exactly.
    const LinearIVFit iv = fit_2sls(ds);
    MatrixXd D(ds.n(), 2);
    D.col(0) = ds.d;
    D.col(1) = ds.X.col(0);
    const VectorXd ols = (D.transpose() * D).ldlt().solve(D.transpose() * ds.y);
    worst_iv = std::max(worst_iv, std::abs(iv.alpha - ols(0)));
    worst_iv = std::max(worst_iv, std::abs(iv.beta(0) - ols(1)));

    // Grid IVQR within one final grid step of reduced-form QR.
    MatrixXd A(ds.n(), 2);
    A.col(0) = ds.d;
    A.col(1) = ds.X.col(0);
    const auto qr = fit_quantile(A, ds.y, 0.8);
    IVQROptions opts;
    opts.exec = Exec::openmp;
    opts.compute_covariance = false;
    const AlphaGrid grid = default_alpha_grid(ds);
    const auto fit = fit_ivqr_grid(ds, 0.8, grid, opts);
    const double final_step = grid.step / std::pow(10.0, grid.refinement_rounds);
    worst_grid_gap =
        std::max(worst_grid_gap, std::abs(fit.alpha - qr.coefficients(0)) / final_step);
  }
  char msg[160];
  std::snprintf(msg, sizeof(msg), "max |2SLS-OLS| %.2e, max IVQR-QR gap %.2f final steps",
                worst_iv, worst_grid_gap);
  if (worst_iv > 1e-9) return std::string("2SLS != OLS: ") + msg;
  if (worst_grid_gap > 1.0 + 1e-9) return std::string("IVQR too far from QR: ") + msg;
  return std::string("PASS ") + msg;
}

// ---- criterion 4: IVQR consistency on the location-scale DGP ------------

std::string criterion4() {
  const double t0 = now_s();
  const DGPSpec spec;  // defaults: n=2000, rho=0.5, pi=0.5, base=1, slope=0.2
  const std::vector<double> taus = {0.2, 0.5, 0.8};
  const int reps = 200;
  const double zc = 1.959963984540054;

  struct Cell {
    double ag = 0, seg = 0, as = 0, ses = 0;
    bool ok = false;
  };
  std::vector<Cell> cells(static_cast<std::size_t>(reps) * taus.size());
  for_each_index(reps, Exec::openmp, [&](int rep) {
    DGPSpec rspec = spec;
    rspec.seed = derive_stream_seed(1234, static_cast<std::uint64_t>(rep));
    const EstimationDataset ds = simulate_dgp(rspec);
    IVQROptions opts;
    opts.exec = Exec::serial;
    for (std::size_t j = 0; j < taus.size(); ++j) {
      auto& cell = cells[static_cast<std::size_t>(rep) * taus.size() + j];
      try {
        const auto g = fit_ivqr_grid(ds, taus[j], default_alpha_grid(ds), opts);
        const auto s = fit_ivqr_smoothed(ds, taus[j], opts.bandwidth, opts);
        cell = {g.alpha, g.ses(0), s.alpha, s.ses(0), true};
      } catch (const Error&) {
        cell.ok = false;
      }
    }
  });

  std::string detail;
  bool pass = true;
  for (std::size_t j = 0; j < taus.size(); ++j) {
    const double truth = spec.true_alpha(taus[j]);
    int ok = 0, cov_g = 0, cov_s = 0, agree = 0;
    double sum_g = 0, sum_s = 0;
    for (int rep = 0; rep < reps; ++rep) {
      const auto& c = cells[static_cast<std::size_t>(rep) * taus.size() + j];
      if (!c.ok) continue;
      ++ok;
      sum_g += c.ag;
      sum_s += c.as;
      if (std::abs(c.ag - truth) <= zc * c.seg) ++cov_g;
      if (std::abs(c.as - truth) <= zc * c.ses) ++cov_s;
      if (std::abs(c.ag - c.as) <= 2.0 * std::sqrt(c.seg * c.seg + c.ses * c.ses)) ++agree;
    }
    if (ok < static_cast<int>(0.9 * reps)) {
      pass = false;
      detail += " tau=" + std::to_string(taus[j]) + ": only " + std::to_string(ok) + " fits;";
      continue;
    }
    const double bias_g = sum_g / ok - truth, bias_s = sum_s / ok - truth;
    const double cg = static_cast<double>(cov_g) / ok, cs = static_cast<double>(cov_s) / ok;
    const double agr = static_cast<double>(agree) / ok;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  " tau=%.1f: bias(g)=%+.3f bias(s)=%+.3f cov(g)=%.3f cov(s)=%.3f agree=%.2f;",
                  taus[j], bias_g, bias_s, cg, cs, agr);
    detail += buf;
    if (std::abs(bias_g) > 0.05 || std::abs(bias_s) > 0.05) pass = false;
    if (cg < 0.90 || cg > 0.98 || cs < 0.90 || cs > 0.98) pass = false;
    if (agr < 0.90) pass = false;
  }
  const double dt = now_s() - t0;
  detail += " " + std::to_string(static_cast<int>(dt)) + " s";
  if (dt > 1800.0) {
    pass = false;
    detail += " (over 30 min budget)";
  }
  return (pass ? "PASS" : "FAIL") + detail;
}

// ---- criterion 5: endogeneity bias of reduced-form QR -------------------

std::string criterion5() {
  DGPSpec spec;
  spec.seed = 909;
  StudyOptions opts;
  opts.exec = Exec::openmp;
  const auto res = run_study(spec, {0.5}, 200, McEstimator::qr, opts);
  const auto& row = res.rows[0];
  const double spread = std::sqrt(std::max(row.rmse * row.rmse - row.bias * row.bias, 1e-12));
  const double t = std::abs(row.bias) / (spread / std::sqrt(static_cast<double>(row.reps)));
  char msg[120];
  std::snprintf(msg, sizeof(msg), "bias=%+.3f, |bias|/se(bias)=%.1f", row.bias, t);
  if (t <= 3.0) return std::string("reduced-form QR not detectably biased: ") + msg;
  return std::string("PASS ") + msg;
}

// ---- criterion 6: density properties ------------------------------------

double trapezoid(const VectorXd& x, const VectorXd& f) {
  double s = 0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i)
    s += 0.5 * (f(i) + f(i + 1)) * (x(i + 1) - x(i));
  return s;
}

std::string criterion6() {
  // Densities from several configurations: all must integrate to 1 +- 1e-6
  // with monotone quantile functions; the Gaussian one must be within
  // sup-norm 0.05 of the true density over the central 80% of support.
  double worst_int = 0.0;
  const double mu = 1.0, sigma = 1.0;
  double sup = 0.0;
  for (int variant = 0; variant < 4; ++variant) {
    EstimationDataset ds;
    if (variant == 0) {
      Rng rng(2468);
      const int n = 5000;
      ds.y.resize(n);
      ds.d.resize(n);
      ds.X = MatrixXd::Ones(n, 1);
      ds.Z.resize(n, 1);
      for (int i = 0; i < n; ++i) {
        ds.d(i) = rng.normal();
        ds.Z(i, 0) = ds.d(i);
        ds.y(i) = mu + sigma * rng.normal();
      }
      ds.x_names = {"const"};
      ds.z_names = {"d"};
      ds.endogenous_name = "d";
      ds.label = "gauss";
    } else {
      DGPSpec spec;
      spec.n = 1500;
      spec.seed = 100 + static_cast<std::uint64_t>(variant);
      spec.rho = 0.2 * variant;
      ds = simulate_dgp(spec);
    }
    const auto grid = fit_quantile_grid(ds, default_tau_grid(), Estimator::qr, {}, Exec::openmp);
    VectorXd x = VectorXd::Ones(1);
    DensityOptions dopts;
    dopts.support_points = 801;
    const auto dens = predictive_density(grid, x, variant == 0 ? 0.0 : 1.0, dopts);
    worst_int = std::max(worst_int, std::abs(trapezoid(dens.support, dens.density) - 1.0));
    for (std::size_t k = 1; k < dens.values.size(); ++k)
      if (dens.values[k] < dens.values[k - 1]) return "quantile function not monotone";
    for (std::size_t k = 0; k < dens.taus.size(); ++k)
      if (std::abs(dens.quantile_from_density(dens.taus[k]) - dens.values[k]) > 1e-6)
        return "density does not invert to the rearranged quantiles";
    if (variant == 0) {
      const double lo = dens.support(0), hi = dens.support(dens.support.size() - 1);
      const double a = lo + 0.1 * (hi - lo), b = hi - 0.1 * (hi - lo);
      const double mass = dens.taus.back() - dens.taus.front();
      for (Eigen::Index i = 0; i < dens.support.size(); ++i) {
        const double q = dens.support(i);
        if (q < a || q > b) continue;
        sup = std::max(sup,
                       std::abs(dens.density(i) * mass - normal_pdf((q - mu) / sigma) / sigma));
      }
    }
  }
  char msg[120];
  std::snprintf(msg, sizeof(msg), "max |integral-1| %.1e, gaussian sup-norm %.3f", worst_int,
                sup);
  if (worst_int > 1e-6) return std::string("density integral off: ") + msg;
  if (sup > 0.05) return std::string("gaussian density too far from truth: ") + msg;
  return std::string("PASS ") + msg;
}

// ---- criterion 7: CLI determinism ----------------------------------------

std::string criterion7() {
  const char* binp = std::getenv("URISK_BIN");
  if (!binp) throw Skip{"URISK_BIN not set (run through ctest)"};
  const std::string bin = binp;
  const fs::path dir = fs::temp_directory_path() / "urisk_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);

  // Synthetic panel + config.
  {
    std::ofstream csv(dir / "panel.csv");
    csv << "date,UR,INFL,C1,S\n";
    Rng rng(31415);
    double infl = 2.0;
    for (int t = 0; t < 300; ++t) {
      const int year = 1995 + t / 12, month = 1 + t % 12;
      const double s = std::sin(t * 0.17) + 0.5 * rng.normal();
      infl = 0.8 * infl + 0.5 * s + 0.3 * rng.normal() + 0.4;
      const double ur = 5.0 + std::sin(t * 0.06) + 0.2 * infl + 0.5 * rng.normal();
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%04d-%02d,%.6f,%.6f,%.6f,%.6f\n", year, month, ur, infl,
                    0.3 * std::cos(t * 0.11), s);
      csv << buf;
    }
    std::ofstream cfg(dir / "config.json");
    cfg << R"({"data": {"csv": ")" << (dir / "panel.csv").string() << R"("},
      "groups": {"agg": {"dependent": "UR", "endogenous": "INFL", "controls": ["UR", "C1"]}},
      "instruments": {"s": ["S"]},
      "horizons": [12],
      "estimator": {"method": "qr", "tau": 0.8},
      "mc": {"n": 200, "reps": 50, "taus": [0.5], "estimator": "qr"},
      "seed": 11})";
  }

  auto sh = [&](const std::string& c) {
    return WEXITSTATUS(std::system((c + " >/dev/null 2>&1").c_str()));
  };
  const std::string cfgp = (dir / "config.json").string();
  const std::vector<std::pair<std::string, std::vector<std::string>>> cases = {
      {" mc --config " + cfgp, {"mc.csv", "manifest.json"}},
      {" estimate --group agg --config " + cfgp, {"fit.json", "manifest.json"}},
      {" density --group agg --date 2015-06 --config " + cfgp,
       {"density.csv", "quantiles.csv", "manifest.json"}},
      {" tailrisk --config " + cfgp, {"tailrisk.csv", "contrasts.csv", "manifest.json"}},
  };
  for (const auto& [cmd, files] : cases) {
    const fs::path o1 = dir / "r1", o2 = dir / "r2";
    fs::remove_all(o1);
    fs::remove_all(o2);
    if (sh(bin + cmd + " --out " + o1.string()) != 0) return "command failed:" + cmd;
    if (sh(bin + cmd + " --out " + o2.string()) != 0) return "rerun failed:" + cmd;
    for (const auto& f : files)
      if (slurp(o1 / f) != slurp(o2 / f) || slurp(o1 / f).empty())
        return "outputs differ for " + f + " under" + cmd;
  }
  return "PASS byte-identical outputs across reruns (mc, estimate, density, tailrisk)";
}

// ---- criteria 8 and 9: conditional paper replication ---------------------

fs::path replication_csv() {
  if (const char* env = std::getenv("URISK_REPLICATION_CSV")) return env;
  for (const char* probe :
       {"data/replication/panel.csv", "../data/replication/panel.csv",
        "../../data/replication/panel.csv", "../../../data/replication/panel.csv"})
    if (fs::exists(probe)) return probe;
  return {};
}

RunConfig replication_config(const fs::path& csv) {
  json cfg;
  cfg["data"] = {{"csv", csv.string()}};
  json groups;
  for (const auto& [label, series] :
       std::vector<std::pair<std::string, std::string>>{
           {"aggregate", "UR"}, {"black", "UR_BLACK"}, {"white", "UR_WHITE"}}) {
    groups[label] = {{"dependent", series},
                     {"endogenous", "PCE_INFL"},
                     {"controls", {series, "ANFCI", "NFCI_NFL", "TERM_SPREAD"}},
                     {"sample_start", "1976-06"},
                     {"sample_end", "2021-06"},
                     {"category", "race"}};
  }
  cfg["groups"] = groups;
  cfg["instruments"] = {{"supply", {"SUPPLY_INFL"}}, {"demand", {"DEMAND_INFL"}}};
  cfg["horizons"] = {12, 36};
  cfg["estimator"] = {{"method", "ivqr_auto"}, {"tau", 0.8}};
  cfg["seed"] = 1;
  return parse_config(cfg);
}

std::string criterion8() {
  const fs::path csv = replication_csv();
  if (csv.empty()) throw Skip{"replication panel not present (data/replication/panel.csv)"};
  const RunConfig cfg = replication_config(csv);
  const TimeSeriesPanel panel = load_panel(cfg);

  // Table 1, aggregate unemployment row, to reported precision.
  const auto stats = summarize(panel);
  const SeriesSummary* ur = nullptr;
  for (const auto& s : stats)
    if (s.name == "UR") ur = &s;
  if (!ur) return "panel lacks UR series";
  char t1[160];
  std::snprintf(t1, sizeof(t1), "UR row: obs=%d mean=%.1f sd=%.1f min=%.1f max=%.1f", ur->obs,
                ur->mean, ur->sd, ur->min, ur->max);
  if (ur->obs != 916 || std::abs(ur->mean - 5.7) > 0.05 || std::abs(ur->sd - 1.7) > 0.05 ||
      std::abs(ur->min - 2.5) > 0.05 || std::abs(ur->max - 14.8) > 0.05)
    return std::string("summary row off: ") + t1;

  // Table 2 sign/significance pattern at tau=0.8.
  IVQROptions opts;
  opts.exec = Exec::openmp;
  auto fit_cfg = [&](int horizon, const std::string& instrument) {
    const DatasetSpec spec = dataset_spec(cfg, "aggregate", horizon, instrument);
    const EstimationDataset ds = build_design(panel, spec);
    return fit_at(ds, 0.8, Estimator::ivqr_auto, opts);
  };
  const FitRecord s1 = fit_cfg(12, "supply");
  const FitRecord d1 = fit_cfg(12, "demand");
  const FitRecord d3 = fit_cfg(36, "demand");
  char t2[240];
  std::snprintf(t2, sizeof(t2),
                "1y supply %.3f (%.3f), 1y demand %.3f (%.3f), 3y demand %.3f (%.3f)", s1.alpha,
                s1.ses(0), d1.alpha, d1.ses(0), d3.alpha, d3.ses(0));
  const bool supply_ok =
      s1.alpha > 0 && s1.alpha / s1.ses(0) > 1.96 &&
      (std::abs(s1.alpha - 0.23) <= 0.10 || std::abs(s1.alpha - 0.23) <= 2 * 0.04);
  const bool demand1_ok = std::abs(d1.alpha - 0.01) <= std::max(0.10, 2 * 0.06) &&
                          std::abs(d1.alpha / d1.ses(0)) < 1.96;
  const bool demand3_ok =
      d3.alpha > 0 && d3.alpha / d3.ses(0) > 1.96 &&
      (std::abs(d3.alpha - 0.25) <= 0.10 || std::abs(d3.alpha - 0.25) <= 2 * 0.03);
  if (!supply_ok || !demand1_ok || !demand3_ok) return std::string("pattern mismatch: ") + t2;
  return std::string("PASS ") + t1 + "; " + t2;
}

std::string criterion9() {
  const fs::path csv = replication_csv();
  if (csv.empty()) throw Skip{"replication panel not present (data/replication/panel.csv)"};
  const RunConfig cfg = replication_config(csv);
  const TimeSeriesPanel panel = load_panel(cfg);
  // White, 3-year horizon, both inflation instruments jointly (the linear-IV
  // diagnostic configuration).
  DatasetSpec spec = dataset_spec(cfg, "white", 36, "supply");
  spec.instrument_series = {"SUPPLY_INFL", "DEMAND_INFL"};
  const EstimationDataset ds = build_design(panel, spec);
  const LinearIVFit fit = fit_2sls(ds);
  const ResidualMoments m = residual_moments(fit);
  char msg[120];
  std::snprintf(msg, sizeof(msg), "skewness=%.2f excess_kurtosis=%.2f", m.skewness,
                m.excess_kurtosis);
  if (m.skewness <= 0 || m.excess_kurtosis <= 0)
    return std::string("no heavy right tail: ") + msg;
  return std::string("PASS ") + msg;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<std::string()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "QR oracle equivalence", criterion1},
      {2, "check-loss and smoothed-indicator identities", criterion2},
      {3, "exogeneity reductions (Z=d)", criterion3},
      {4, "IVQR consistency, coverage, grid/smoothed agreement", criterion4},
      {5, "endogeneity bias of reduced-form QR", criterion5},
      {6, "density properties", criterion6},
      {7, "determinism of CLI outputs", criterion7},
      {8, "conditional paper replication (Tables 1-2)", criterion8},
      {9, "conditional diagnostics replication (QQ moments)", criterion9},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    std::string verdict;
    try {
      const std::string out = c.run();
      if (out.rfind("PASS", 0) == 0) {
        verdict = "[PASS]" + out.substr(4);
      } else {
        verdict = "[FAIL] " + out;
        ++failures;
      }
    } catch (const Skip& s) {
      verdict = "[SKIP] " + s.reason;
    } catch (const std::exception& e) {
      verdict = std::string("[FAIL] exception: ") + e.what();
      ++failures;
    }
    std::printf("criterion %d (%s): %s\n", c.id, c.name, verdict.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
