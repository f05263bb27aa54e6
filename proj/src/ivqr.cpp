#include "urisk/ivqr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "urisk/error.hpp"
#include "urisk/math.hpp"

namespace urisk {

void AlphaGrid::validate() const {
  if (!(lower < upper)) throw InputError("alpha grid: lower must be below upper");
  if (!(step > 0)) throw InputError("alpha grid: step must be positive");
  if ((upper - lower) / step > 1e6) throw InputError("alpha grid: more than 1e6 points");
  if (refinement_rounds < 0) throw InputError("alpha grid: negative refinement rounds");
}

int AlphaGrid::points() const {
  return static_cast<int>(std::floor((upper - lower) / step + 1e-9)) + 1;
}

FirstStage first_stage_fit(const EstimationDataset& ds) {
  const Eigen::Index n = ds.n(), px = ds.p_x(), pz = ds.p_z();
  if (pz < 1) throw InputError("first_stage_fit: needs at least one instrument");
  MatrixXd W(n, px + pz);
  W.leftCols(px) = ds.X;
  W.rightCols(pz) = ds.Z;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(W);
  if (qr.rank() < W.cols()) {
    const auto& perm = qr.colsPermutation().indices();
    std::vector<int> dep;
    for (Eigen::Index k = qr.rank(); k < W.cols(); ++k) dep.push_back(perm(k));
    std::sort(dep.begin(), dep.end());
    throw RankError("first stage regressors (X,Z) are rank deficient", dep);
  }
  FirstStage fs;
  fs.coefficients = qr.solve(ds.d);
  fs.fitted = W * fs.coefficients;
  const double rss_u = (ds.d - fs.fitted).squaredNorm();
  const VectorXd pi_r = (ds.X.transpose() * ds.X).ldlt().solve(ds.X.transpose() * ds.d);
  const double rss_r = (ds.d - ds.X * pi_r).squaredNorm();
  const double dof = static_cast<double>(n - px - pz);
  fs.F_statistic =
      (rss_u > 0 && dof > 0) ? std::max(0.0, ((rss_r - rss_u) / pz) / (rss_u / dof)) : 0.0;
  return fs;
}

namespace {

struct InnerEval {
  double wald = std::numeric_limits<double>::quiet_NaN();
  bool ok = false;
  QuantileFit fit;  // QR of y - d*alpha on (X, d_hat)
};

InnerEval evaluate_inner(double alpha, const EstimationDataset& ds, double tau,
                         const VectorXd& d_hat, const QROptions& qr_opts) {
  InnerEval out;
  const Eigen::Index n = ds.n(), px = ds.p_x();
  MatrixXd A(n, px + 1);
  A.leftCols(px) = ds.X;
  A.col(px) = d_hat;
  const VectorXd y_adj = ds.y - alpha * ds.d;
  try {
    out.fit = fit_quantile(A, y_adj, tau, qr_opts);
    const MatrixXd cov = qreg_cov(out.fit, A);
    const double gamma = out.fit.coefficients(px);
    const double v = cov(px, px);
    if (std::isfinite(gamma) && std::isfinite(v) && v > 0) {
      out.wald = gamma * gamma / v;
      out.ok = true;
    }
  } catch (const Error&) {
    out.ok = false;
  }
  return out;
}

struct ProfilePoint {
  double alpha;
  double wald;
};

// Winner of one grid pass: smallest finite Wald, ties toward smaller alpha.
int argmin_wald(const std::vector<ProfilePoint>& pts) {
  int best = -1;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!std::isfinite(pts[i].wald)) continue;
    if (best < 0 || pts[i].wald < pts[best].wald) best = static_cast<int>(i);
  }
  return best;
}

std::vector<std::string> ivqr_names(const EstimationDataset& ds) {
  std::vector<std::string> names;
  names.push_back(ds.endogenous_name.empty() ? "d" : ds.endogenous_name);
  for (const auto& nm : ds.x_names) names.push_back(nm);
  return names;
}

}  // namespace

double wald_objective(double alpha_candidate, const EstimationDataset& ds, QuantileLevel tau,
                      const VectorXd& d_hat) {
  auto ev = evaluate_inner(alpha_candidate, ds, tau, d_hat, {});
  if (!ev.ok)
    throw ConvergenceError("wald_objective failed at alpha=" + std::to_string(alpha_candidate));
  return ev.wald;
}

AlphaGrid default_alpha_grid(const EstimationDataset& ds, int points, double se_span,
                             int refinement_rounds) {
  const LinearIVFit iv = fit_2sls(ds);
  double se = std::sqrt(std::max(iv.covariance(0, 0), 0.0));
  if (!(se > 0) || !std::isfinite(se)) se = 1e-3 * (1.0 + std::abs(iv.alpha));
  AlphaGrid g;
  g.lower = iv.alpha - se_span * se;
  g.upper = iv.alpha + se_span * se;
  g.step = (g.upper - g.lower) / (points - 1);
  g.refinement_rounds = refinement_rounds;
  g.validate();
  return g;
}

IVQRFit fit_ivqr_grid(const EstimationDataset& ds, QuantileLevel tau, const AlphaGrid& grid,
                      const IVQROptions& opts) {
  grid.validate();
  const FirstStage fs = first_stage_fit(ds);
  const VectorXd& d_hat = fs.fitted;

  std::vector<ProfilePoint> all;  // every evaluated point
  int failures = 0, evaluated = 0;

  auto run_pass = [&](double lo, double step, int count) -> std::vector<ProfilePoint> {
    std::vector<ProfilePoint> pts(static_cast<std::size_t>(count));
    for_each_index(count, opts.exec, [&](int i) {
      const double a = lo + step * i;
      auto ev = evaluate_inner(a, ds, tau, d_hat, opts.qr);
      pts[static_cast<std::size_t>(i)] = {a, ev.ok ? ev.wald
                                                   : std::numeric_limits<double>::quiet_NaN()};
    });
    for (const auto& pt : pts) {
      ++evaluated;
      if (!std::isfinite(pt.wald)) ++failures;
    }
    all.insert(all.end(), pts.begin(), pts.end());
    return pts;
  };

  auto fail_share_check = [&]() {
    if (evaluated > 0 &&
        static_cast<double>(failures) / evaluated > opts.instability_share)
      throw GridInstabilityError("ivqr grid: inner quantile fit failed at " +
                                 std::to_string(failures) + " of " + std::to_string(evaluated) +
                                 " grid points");
  };

  auto boundary_throw = [&](double a_star) {
    std::vector<double> as, ws;
    for (const auto& pt : all) {
      as.push_back(pt.alpha);
      ws.push_back(pt.wald);
    }
    throw GridBoundaryError("ivqr grid: argmin at grid boundary alpha=" + std::to_string(a_star),
                            std::move(as), std::move(ws));
  };

  // Initial pass over the full grid.
  const int k0 = grid.points();
  auto pts = run_pass(grid.lower, grid.step, k0);
  fail_share_check();
  int best = argmin_wald(pts);
  if (best < 0) throw GridInstabilityError("ivqr grid: no finite Wald value on the grid");
  if (best == 0 || best == k0 - 1) boundary_throw(pts[static_cast<std::size_t>(best)].alpha);

  double incumbent = pts[static_cast<std::size_t>(best)].alpha;
  double incumbent_wald = pts[static_cast<std::size_t>(best)].wald;
  double step = grid.step;

  // Refinement: shrink 10x around the incumbent, 21 points per round.
  for (int round = 0; round < grid.refinement_rounds; ++round) {
    const double lo = incumbent - step;
    const double fine = step / 10.0;
    auto rpts = run_pass(lo, fine, 21);
    fail_share_check();
    const int rbest = argmin_wald(rpts);
    if (rbest < 0) throw GridInstabilityError("ivqr grid: refinement produced no finite value");
    if (rpts[static_cast<std::size_t>(rbest)].wald < incumbent_wald) {
      if (rbest == 0 || rbest == 20) boundary_throw(rpts[static_cast<std::size_t>(rbest)].alpha);
      incumbent = rpts[static_cast<std::size_t>(rbest)].alpha;
      incumbent_wald = rpts[static_cast<std::size_t>(rbest)].wald;
    }
    step = fine;
  }

  auto final_eval = evaluate_inner(incumbent, ds, tau, d_hat, opts.qr);
  if (!final_eval.ok)
    throw ConvergenceError("ivqr grid: inner fit failed at the incumbent alpha");

  IVQRFit fit;
  fit.tau = tau;
  fit.alpha = incumbent;
  fit.beta = final_eval.fit.coefficients.head(ds.p_x());
  fit.method = IVQRMethod::grid;
  fit.n = ds.n();
  fit.coef_names = ivqr_names(ds);

  std::sort(all.begin(), all.end(),
            [](const ProfilePoint& a, const ProfilePoint& b) { return a.alpha < b.alpha; });
  double wmin = std::numeric_limits<double>::infinity();
  for (const auto& pt : all) {
    fit.profile_alphas.push_back(pt.alpha);
    fit.wald_profile.push_back(pt.wald);
    if (std::isfinite(pt.wald)) wmin = std::min(wmin, pt.wald);
  }
  fit.wald_at_min = wmin;

  if (opts.compute_covariance) {
    fit.covariance = ivqr_se(fit, ds);
    fit.ses = fit.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  }
  return fit;
}

IVQRFit fit_ivqr_smoothed(const EstimationDataset& ds, QuantileLevel tau,
                          const SmoothingBandwidth& bw, const IVQROptions& opts) {
  if (!(bw.value > 0)) throw InputError("smoothing bandwidth must be positive");
  const Eigen::Index n = ds.n(), px = ds.p_x();
  const FirstStage fs = first_stage_fit(ds);

  MatrixXd Psi(n, px + 1);  // instruments: (d_hat, X)
  Psi.col(0) = fs.fitted;
  Psi.rightCols(px) = ds.X;
  MatrixXd Wm(n, px + 1);  // regressors: (d, X)
  Wm.col(0) = ds.d;
  Wm.rightCols(px) = ds.X;

  // Start from 2SLS for alpha; betas from the quantile fit at that alpha.
  const LinearIVFit iv = fit_2sls(ds);
  VectorXd theta0(px + 1);
  theta0(0) = iv.alpha;
  {
    auto qr0 = fit_quantile(ds.X, VectorXd(ds.y - iv.alpha * ds.d), tau, opts.qr);
    theta0.tail(px) = qr0.coefficients;
  }

  const VectorXd u0 = ds.y - Wm * theta0;
  double h = bw.rule == SmoothingBandwidth::Rule::fixed
                 ? bw.value
                 : bw.value * std::max(1e-8, std::sqrt(u0.squaredNorm() / n -
                                                       std::pow(u0.mean(), 2))) *
                       std::pow(static_cast<double>(n), -1.0 / 3.0);

  const double psi_scale = std::sqrt(Psi.squaredNorm() / static_cast<double>(Psi.size()));
  const double m_tol = 1e-9 * (1.0 + psi_scale);

  auto moment = [&](const VectorXd& theta, VectorXd& u) {
    u = ds.y - Wm * theta;
    VectorXd g = VectorXd::Zero(px + 1);
    for (Eigen::Index t = 0; t < n; ++t)
      g.noalias() += (tau - smoothed_indicator(u(t) / h)) * Psi.row(t).transpose();
    return VectorXd(g / static_cast<double>(n));
  };

  auto jacobian = [&](const VectorXd& u) {
    // Band can be empty far from the solution; widen until it is usable.
    for (double width = h;; width *= 2.0) {
      MatrixXd J = MatrixXd::Zero(px + 1, px + 1);
      int in_band = 0;
      for (Eigen::Index t = 0; t < n; ++t) {
        if (std::abs(u(t)) >= width) continue;
        ++in_band;
        J.noalias() -= Psi.row(t).transpose() * Wm.row(t);
      }
      J /= (2.0 * width * static_cast<double>(n));
      if (in_band > px + 1) {
        Eigen::FullPivLU<MatrixXd> lu(J);
        if (lu.isInvertible()) return std::make_pair(J, true);
      }
      if (width > 1e6 * (1.0 + u.cwiseAbs().maxCoeff())) return std::make_pair(J, false);
    }
  };

  std::vector<double> trace;
  VectorXd theta, u(n);
  bool converged = false;
  for (int attempt = 0; attempt <= opts.newton_restarts && !converged; ++attempt) {
    theta = theta0;
    if (attempt > 0) {
      // Deterministic perturbation of the starting alpha; betas refitted.
      const double bump = 0.25 * attempt * (attempt % 2 == 0 ? 1.0 : -1.0) *
                          (1.0 + std::abs(theta0(0)));
      theta(0) = theta0(0) + bump;
      auto qr0 = fit_quantile(ds.X, VectorXd(ds.y - theta(0) * ds.d), tau, opts.qr);
      theta.tail(px) = qr0.coefficients;
    }
    VectorXd m = moment(theta, u);
    int stalls = 0;
    for (int it = 0; it < opts.max_newton_iterations; ++it) {
      const double mn = m.cwiseAbs().maxCoeff();
      trace.push_back(mn);
      if (mn <= m_tol) {
        converged = true;
        break;
      }
      auto [J, ok] = jacobian(u);
      if (!ok) break;
      const VectorXd step = -J.partialPivLu().solve(m);
      double t = 1.0;
      const double base = m.norm();
      VectorXd theta_new, m_new;
      bool improved = false;
      while (t >= 1.0 / 1024.0) {
        theta_new = theta + t * step;
        m_new = moment(theta_new, u);
        if (m_new.norm() <= (1.0 - 1e-4 * t) * base) {
          improved = true;
          break;
        }
        t *= 0.5;
      }
      if (!improved) {
        // Piecewise-linear kinks can block the line search; accept a full
        // step occasionally, otherwise give up on this start.
        if (++stalls > 3) break;
        theta_new = theta + step;
        m_new = moment(theta_new, u);
      }
      theta = theta_new;
      m = m_new;
    }
    if (!converged && m.cwiseAbs().maxCoeff() <= m_tol) converged = true;
  }
  if (!converged) {
    if (trace.size() > 12) trace.erase(trace.begin(), trace.end() - 12);
    throw ConvergenceError("ivqr smoothed: GMM system did not converge", trace);
  }

  IVQRFit fit;
  fit.tau = tau;
  fit.alpha = theta(0);
  fit.beta = theta.tail(px);
  fit.method = IVQRMethod::smoothed;
  fit.n = n;
  fit.bandwidth = h;
  fit.coef_names = ivqr_names(ds);
  fit.wald_at_min = 0.0;
  if (opts.compute_covariance) {
    fit.covariance = ivqr_se(fit, ds);
    fit.ses = fit.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  }
  return fit;
}

IVQRFit fit_ivqr_auto(const EstimationDataset& ds, QuantileLevel tau, const IVQROptions& opts) {
  const AlphaGrid grid = opts.grid ? *opts.grid : default_alpha_grid(ds);
  std::string reason;
  try {
    return fit_ivqr_grid(ds, tau, grid, opts);
  } catch (const GridBoundaryError& e) {
    reason = e.what();
  } catch (const GridInstabilityError& e) {
    reason = e.what();
  } catch (const ConvergenceError& e) {
    reason = e.what();
  }
  try {
    IVQRFit fit = fit_ivqr_smoothed(ds, tau, opts.bandwidth, opts);
    fit.fallback_triggered = true;
    fit.fallback_reason = reason;
    return fit;
  } catch (const Error& e) {
    throw Error("ivqr auto: grid failed (" + reason + "); smoothed failed (" + e.what() + ")");
  }
}

MatrixXd ivqr_se(const IVQRFit& fit, const EstimationDataset& ds) {
  const Eigen::Index n = ds.n(), px = ds.p_x();
  const FirstStage fs = first_stage_fit(ds);
  const VectorXd u = ds.y - ds.d * fit.alpha - ds.X * fit.beta;
  const double tau = fit.tau;

  MatrixXd Psi(n, px + 1);
  Psi.col(0) = fs.fitted;
  Psi.rightCols(px) = ds.X;
  MatrixXd Wm(n, px + 1);
  Wm.col(0) = ds.d;
  Wm.rightCols(px) = ds.X;

  const double bw = powell_bandwidth(u, tau);
  MatrixXd G = MatrixXd::Zero(px + 1, px + 1);
  MatrixXd S = MatrixXd::Zero(px + 1, px + 1);
  for (Eigen::Index t = 0; t < n; ++t) {
    const double k = normal_pdf(u(t) / bw) / bw;
    G.noalias() += k * Psi.row(t).transpose() * Wm.row(t);
    S.noalias() += Psi.row(t).transpose() * Psi.row(t);
  }
  G /= static_cast<double>(n);
  S *= tau * (1.0 - tau) / static_cast<double>(n);

  Eigen::FullPivLU<MatrixXd> lu(G);
  if (!lu.isInvertible()) throw Error("ivqr_se: singular bread matrix");
  const MatrixXd Ginv = lu.inverse();
  MatrixXd cov = Ginv * S * Ginv.transpose() / static_cast<double>(n);
  return 0.5 * (cov + cov.transpose());
}

}  // namespace urisk
