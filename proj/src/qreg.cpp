#include "urisk/qreg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "urisk/math.hpp"

namespace urisk {

namespace {

// Vertex-descent state for the quantile-regression linear program. A vertex
// interpolates exactly p observations (the basis); descent moves along edges
// that swap one basis observation for a blocking one.
struct Solver {
  const MatrixXd& X;
  const VectorXd& y;
  const double tau;
  const int n, p;
  std::vector<int> basis;
  std::vector<char> in_basis;
  MatrixXd Binv;     // inverse of the basis rows of X
  VectorXd b;        // coefficients at the current vertex
  VectorXd u;        // residuals, exact zeros at basis rows
  double objective = 0.0;
  double u_ztol;     // residual magnitudes below this count as zero

  Solver(const MatrixXd& X_, const VectorXd& y_, double tau_)
      : X(X_), y(y_), tau(tau_), n(static_cast<int>(X_.rows())),
        p(static_cast<int>(X_.cols())), in_basis(static_cast<std::size_t>(n), 0) {
    u_ztol = 1e-11 * (1.0 + y.cwiseAbs().maxCoeff());
  }

  bool set_basis(const std::vector<int>& h) {
    MatrixXd B(p, p);
    for (int k = 0; k < p; ++k) B.row(k) = X.row(h[static_cast<std::size_t>(k)]);
    Eigen::PartialPivLU<MatrixXd> lu(B);
    const double det = std::abs(lu.determinant());
    const double scale = B.cwiseAbs().maxCoeff();
    if (!(det > 1e-13 * std::pow(std::max(scale, 1e-300), p))) return false;
    Binv = lu.inverse();
    std::fill(in_basis.begin(), in_basis.end(), 0);
    basis = h;
    for (int i : basis) in_basis[static_cast<std::size_t>(i)] = 1;
    refresh();
    return true;
  }

  void refresh() {
    VectorXd yb(p);
    for (int k = 0; k < p; ++k) yb(k) = y(basis[static_cast<std::size_t>(k)]);
    b = Binv * yb;
    u = y - X * b;
    for (int i : basis) u(i) = 0.0;
    objective = 0.0;
    for (int i = 0; i < n; ++i) objective += check_loss(u(i), tau);
  }

  // Reduced-cost vector r: optimality is -tau <= r_k <= 1-tau for all k.
  // Zero non-basis residuals are treated as positive here, which can only
  // understate edge derivatives; candidates get an exact recheck below.
  VectorXd reduced_costs() const {
    VectorXd w = VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (in_basis[static_cast<std::size_t>(i)]) continue;
      w(i) = tau - (u(i) < -u_ztol ? 1.0 : 0.0);
    }
    return Binv.transpose() * (X.transpose() * w);
  }

  // Exact one-sided directional derivative along edge (k, sign), plus the
  // per-observation movement rates c = X * delta.
  double edge_derivative(int k, double sign, VectorXd& c) const {
    VectorXd delta = sign * Binv.col(k);
    c = X * delta;
    double g = sign > 0 ? (1.0 - tau) : tau;  // kink of the leaving basis row
    for (int i = 0; i < n; ++i) {
      if (in_basis[static_cast<std::size_t>(i)]) continue;
      const double ci = c(i);
      if (std::abs(u(i)) <= u_ztol) {
        g += ci > 0 ? (1.0 - tau) * ci : -tau * ci;
      } else {
        g -= (tau - (u(i) < 0 ? 1.0 : 0.0)) * ci;
      }
    }
    return g;
  }

  // Walks the breakpoints of the piecewise-linear objective along the edge.
  // Returns the entering observation, or -1 if the slope never turns up.
  int line_search(double g0, const VectorXd& c, double& t_star) const {
    struct Break {
      double t;
      int idx;
      double kink;
    };
    std::vector<Break> bps;
    bps.reserve(static_cast<std::size_t>(n));
    const double cmax = std::max(1.0, c.cwiseAbs().maxCoeff());
    const double ctol = 1e-12 * cmax;
    double total_kink = 0.0;
    for (int i = 0; i < n; ++i) {
      if (in_basis[static_cast<std::size_t>(i)]) continue;
      if (std::abs(c(i)) <= ctol || std::abs(u(i)) <= u_ztol) continue;
      const double t = u(i) / c(i);
      if (t > 0.0) {
        bps.push_back({t, i, std::abs(c(i))});
        total_kink += std::abs(c(i));
      }
    }
    std::sort(bps.begin(), bps.end(), [](const Break& a, const Break& b) {
      return a.t != b.t ? a.t < b.t : a.idx < b.idx;
    });
    const double stop_tol = 1e-13 * (std::abs(g0) + total_kink + 1.0);
    double slope = g0;
    for (const auto& bp : bps) {
      slope += bp.kink;
      if (slope >= -stop_tol) {
        t_star = bp.t;
        return bp.idx;
      }
    }
    return -1;
  }
};

std::vector<int> default_basis(const MatrixXd& X) {
  Eigen::ColPivHouseholderQR<MatrixXd> qr(X.transpose());
  const auto& perm = qr.colsPermutation().indices();
  std::vector<int> h(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index k = 0; k < X.cols(); ++k) h[static_cast<std::size_t>(k)] = perm(k);
  return h;
}

void check_full_rank(const MatrixXd& X) {
  Eigen::ColPivHouseholderQR<MatrixXd> qr(X);
  if (qr.rank() == X.cols()) return;
  const auto& perm = qr.colsPermutation().indices();
  std::vector<int> dep;
  for (Eigen::Index k = qr.rank(); k < X.cols(); ++k) dep.push_back(perm(k));
  std::sort(dep.begin(), dep.end());
  std::string msg = "design matrix is rank deficient; dependent columns:";
  for (int c : dep) msg += " " + std::to_string(c);
  throw RankError(msg, dep);
}

bool lex_less(const VectorXd& a, const VectorXd& b) {
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double tol = 1e-9 * (1.0 + std::abs(b(k)));
    if (a(k) < b(k) - tol) return true;
    if (a(k) > b(k) + tol) return false;
  }
  return false;
}

}  // namespace

QuantileFit fit_quantile(const MatrixXd& X, const VectorXd& y, QuantileLevel tau,
                         const QROptions& opts) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (p == 0 || n == 0) throw InputError("fit_quantile: empty design");
  if (y.size() != X.rows()) throw InputError("fit_quantile: X and y row counts differ");
  if (n <= p) throw InputError("fit_quantile: need n > p");
  check_full_rank(X);

  Solver s(X, y, tau);
  bool started = false;
  if (static_cast<int>(opts.warm_basis.size()) == p) {
    std::vector<int> h = opts.warm_basis;
    std::sort(h.begin(), h.end());
    const bool valid = std::adjacent_find(h.begin(), h.end()) == h.end() && h.front() >= 0 &&
                       h.back() < n;
    if (valid) started = s.set_basis(opts.warm_basis);
  }
  if (!started && !s.set_basis(default_basis(X)))
    throw Error("fit_quantile: could not factor an initial basis");

  const int max_iter = opts.max_iterations > 0 ? opts.max_iterations : 200 + 25 * n;
  const double tol = opts.tolerance;
  std::vector<double> trace;
  int stalls = 0;
  bool bland = false;
  int iter = 0;

  for (;; ++iter) {
    if (iter >= max_iter) {
      trace.push_back(s.objective);
      if (trace.size() > 12) trace.erase(trace.begin(), trace.end() - 12);
      throw ConvergenceError(
          "fit_quantile: no optimum after " + std::to_string(max_iter) + " pivots", trace);
    }
    trace.push_back(s.objective);

    const VectorXd r = s.reduced_costs();
    struct Edge {
      double g;
      int k;
      double sign;
    };
    std::vector<Edge> cand;
    for (int k = 0; k < p; ++k) {
      const double gp = (1.0 - tau) - r(k);
      const double gm = tau + r(k);
      if (gp < -tol) cand.push_back({gp, k, +1.0});
      if (gm < -tol) cand.push_back({gm, k, -1.0});
    }
    if (bland) {
      std::sort(cand.begin(), cand.end(), [](const Edge& a, const Edge& b) {
        return a.k != b.k ? a.k < b.k : a.sign < b.sign;
      });
    } else {
      std::sort(cand.begin(), cand.end(), [](const Edge& a, const Edge& b) {
        return a.g != b.g ? a.g < b.g : (a.k != b.k ? a.k < b.k : a.sign < b.sign);
      });
    }

    bool moved = false;
    VectorXd c;
    for (const auto& e : cand) {
      const double g = s.edge_derivative(e.k, e.sign, c);
      if (g >= -tol) continue;
      double t_star = 0.0;
      const int enter = s.line_search(g, c, t_star);
      if (enter < 0) continue;
      const double obj_before = s.objective;
      std::vector<int> h = s.basis;
      h[static_cast<std::size_t>(e.k)] = enter;
      if (!s.set_basis(h)) continue;  // numerically singular pivot; try next edge
      moved = true;
      if (obj_before - s.objective <= tol * (1.0 + std::abs(obj_before)))
        ++stalls;
      else
        stalls = 0;
      if (stalls > 40) bland = true;  // degenerate plateau: switch to Bland's rule
      break;
    }
    if (!moved) break;  // no exact-descent edge left: optimal vertex
  }

  // Tie handling: explore zero-derivative edges and settle on the
  // lexicographically smallest optimal vertex.
  bool ties = false;
  const double g_tie = std::max(tol, 1e-8);
  for (int polish = 0; polish < 64; ++polish) {
    const VectorXd r = s.reduced_costs();
    bool moved = false;
    VectorXd c;
    for (int k = 0; k < p && !moved; ++k) {
      for (double sign : {+1.0, -1.0}) {
        const double g_approx = sign > 0 ? (1.0 - tau) - r(k) : tau + r(k);
        if (g_approx > g_tie) continue;
        const double g = s.edge_derivative(k, sign, c);
        if (std::abs(g) > g_tie) continue;
        double t_star = 0.0;
        const int enter = s.line_search(g, c, t_star);
        if (enter < 0) continue;
        Solver probe(X, y, tau);
        std::vector<int> h = s.basis;
        h[static_cast<std::size_t>(k)] = enter;
        if (!probe.set_basis(h)) continue;
        if (std::abs(probe.objective - s.objective) > 1e-11 * (1.0 + std::abs(s.objective)))
          continue;
        ties = true;
        if (lex_less(probe.b, s.b)) {
          s.set_basis(h);
          moved = true;
          break;
        }
      }
    }
    if (!moved) break;
  }

  QuantileFit fit;
  fit.tau = tau;
  fit.coefficients = s.b;
  fit.residuals = s.u;
  fit.objective = s.objective;
  fit.solver_info.iterations = iter;
  fit.solver_info.converged = true;
  fit.solver_info.degenerate_ties = ties;
  fit.basis = s.basis;
  std::sort(fit.basis.begin(), fit.basis.end());
  return fit;
}

double powell_bandwidth(const VectorXd& residuals, double tau) {
  const int n = static_cast<int>(residuals.size());
  if (n < 2) throw InputError("powell_bandwidth: too few residuals");
  // Hall-Sheather rule in tau space, mapped to the residual scale through a
  // Gaussian reference.
  const double z = normal_quantile(0.975);
  const double q = normal_quantile(tau);
  const double num = 1.5 * normal_pdf(q) * normal_pdf(q);
  const double h_tau = std::pow(static_cast<double>(n), -1.0 / 3.0) * std::pow(z, 2.0 / 3.0) *
                       std::cbrt(num / (2.0 * q * q + 1.0));
  const double lo = std::max(tau - h_tau, 1e-4);
  const double hi = std::min(tau + h_tau, 1.0 - 1e-4);

  std::vector<double> uv(residuals.data(), residuals.data() + n);
  const double s_sd = sd(uv);
  const double iqr = (sample_quantile(uv, 0.75) - sample_quantile(uv, 0.25)) / 1.349;
  double scale = s_sd;
  if (iqr > 0.0 && iqr < scale) scale = iqr;
  if (!(scale > 0.0)) throw Error("powell_bandwidth: residuals have zero spread");
  const double bw = scale * 0.5 * (normal_quantile(hi) - normal_quantile(lo));
  return std::max(bw, 1e-12);
}

MatrixXd qreg_cov(const QuantileFit& fit, const MatrixXd& X, const CovOptions& opts) {
  if (!fit.solver_info.converged) throw Error("qreg_cov: fit did not converge");
  if (X.rows() != fit.residuals.size()) throw InputError("qreg_cov: X does not match fit");
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  const double tau = fit.tau;

  double bw = opts.bandwidth_override;
  if (bw != 0.0 && bw <= 0.0) throw InputError("qreg_cov: bandwidth must be positive");
  if (bw == 0.0) bw = powell_bandwidth(fit.residuals, tau);

  MatrixXd G = MatrixXd::Zero(p, p);
  MatrixXd M = MatrixXd::Zero(p, p);
  for (int i = 0; i < n; ++i) {
    const auto xi = X.row(i).transpose();
    const double k = normal_pdf(fit.residuals(i) / bw) / bw;
    G.noalias() += k * xi * xi.transpose();
    M.noalias() += xi * xi.transpose();
  }
  G /= n;
  M *= tau * (1.0 - tau) / n;

  Eigen::FullPivLU<MatrixXd> lu(G);
  if (!lu.isInvertible()) throw Error("qreg_cov: singular bread matrix");
  const MatrixXd Ginv = lu.inverse();
  MatrixXd cov = Ginv * M * Ginv.transpose() / n;
  return 0.5 * (cov + cov.transpose());
}

}  // namespace urisk
