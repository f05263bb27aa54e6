#include "urisk/linear_iv.hpp"

#include <algorithm>
#include <cmath>

#include "urisk/error.hpp"
#include "urisk/math.hpp"

namespace urisk {

namespace {

void check_rank_or_throw(const MatrixXd& M, const std::string& what) {
  Eigen::ColPivHouseholderQR<MatrixXd> qr(M);
  if (qr.rank() == M.cols()) return;
  const auto& perm = qr.colsPermutation().indices();
  std::vector<int> dep;
  for (Eigen::Index k = qr.rank(); k < M.cols(); ++k) dep.push_back(perm(k));
  std::sort(dep.begin(), dep.end());
  std::string msg = what + " is collinear; dependent columns:";
  for (int c : dep) msg += " " + std::to_string(c);
  throw RankError(msg, dep);
}

VectorXd ols(const MatrixXd& X, const VectorXd& y) {
  return (X.transpose() * X).ldlt().solve(X.transpose() * y);
}

// Bartlett-kernel HAC meat, falling back to HC0 when lags == 0.
MatrixXd sandwich_meat(const MatrixXd& D, const VectorXd& e, const CovSpec& cov) {
  const Eigen::Index n = D.rows(), p = D.cols();
  MatrixXd meat = MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto di = D.row(i).transpose();
    meat.noalias() += e(i) * e(i) * di * di.transpose();
  }
  if (cov.type == CovType::hac && cov.hac_lags > 0) {
    for (int l = 1; l <= cov.hac_lags; ++l) {
      const double w = 1.0 - static_cast<double>(l) / (cov.hac_lags + 1.0);
      MatrixXd gamma = MatrixXd::Zero(p, p);
      for (Eigen::Index t = l; t < n; ++t)
        gamma.noalias() += e(t) * e(t - l) * D.row(t).transpose() * D.row(t - l);
      meat.noalias() += w * (gamma + gamma.transpose());
    }
  }
  return meat;
}

}  // namespace

LinearIVFit fit_2sls(const EstimationDataset& ds, const LinearIVOptions& opts) {
  const Eigen::Index n = ds.n(), px = ds.p_x(), pz = ds.p_z();
  if (pz < 1) throw InputError("fit_2sls: needs at least one instrument");

  MatrixXd W(n, px + pz);  // full instrument set (X, Z)
  W.leftCols(px) = ds.X;
  W.rightCols(pz) = ds.Z;
  check_rank_or_throw(W, "instrument matrix (X,Z)");

  // First stage: d on (X, Z); restricted fit excludes Z for the F statistic.
  const VectorXd pi = ols(W, ds.d);
  const VectorXd d_hat = W * pi;
  const double rss_u = (ds.d - d_hat).squaredNorm();
  const VectorXd pi_r = ols(ds.X, ds.d);
  const double rss_r = (ds.d - ds.X * pi_r).squaredNorm();
  const double dof = static_cast<double>(n - px - pz);
  double F = 0.0;
  if (rss_u > 0 && dof > 0) F = ((rss_r - rss_u) / static_cast<double>(pz)) / (rss_u / dof);
  F = std::max(F, 0.0);

  // Second stage on the projected regressors.
  MatrixXd Dhat(n, 1 + px);
  Dhat.col(0) = d_hat;
  Dhat.rightCols(px) = ds.X;
  check_rank_or_throw(Dhat, "second-stage regressors");
  const VectorXd theta = ols(Dhat, ds.y);

  LinearIVFit fit;
  fit.alpha = theta(0);
  fit.beta = theta.tail(px);
  fit.residuals = ds.y - ds.d * fit.alpha - ds.X * fit.beta;
  fit.n = n;
  fit.first_stage.coefficients = pi;
  fit.first_stage.F_statistic = F;
  fit.first_stage.fitted = d_hat;
  fit.coef_names.push_back(ds.endogenous_name.empty() ? "d" : ds.endogenous_name);
  for (const auto& nm : ds.x_names) fit.coef_names.push_back(nm);
  if (fit.coef_names.size() != static_cast<std::size_t>(px + 1))
    fit.coef_names.resize(static_cast<std::size_t>(px + 1), "x");

  const MatrixXd bread = (Dhat.transpose() * Dhat).inverse();
  const MatrixXd meat = sandwich_meat(Dhat, fit.residuals, opts.cov);
  fit.covariance = bread * meat * bread;
  fit.covariance = 0.5 * (fit.covariance + fit.covariance.transpose()).eval();

  if (F < opts.weak_f_threshold) {
    fit.weak_instrument_warning = true;
    fit.warning = "weak instruments: first-stage F = " + std::to_string(F) + " below " +
                  std::to_string(opts.weak_f_threshold);
  }
  return fit;
}

ResidualMoments residual_moments(const VectorXd& residuals) {
  const Eigen::Index n = residuals.size();
  if (n < 3) throw InputError("residual_moments: needs at least 3 observations");
  const double m = residuals.mean();
  double m2 = 0, m3 = 0, m4 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = residuals(i) - m;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (!(m2 > 0)) throw Error("residual_moments: zero residual variance");
  ResidualMoments out;
  out.skewness = m3 / std::pow(m2, 1.5);
  out.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  return out;
}

std::vector<std::pair<double, double>> qq_data(const VectorXd& residuals) {
  const Eigen::Index n = residuals.size();
  if (n < 3) throw InputError("qq_data: needs at least 3 observations");
  std::vector<double> r(residuals.data(), residuals.data() + n);
  const double m = mean(r), s = sd(r);
  if (!(s > 0)) throw Error("qq_data: zero residual variance");
  for (auto& v : r) v = (v - m) / s;
  std::sort(r.begin(), r.end());
  std::vector<std::pair<double, double>> out;
  out.reserve(r.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    out.emplace_back(normal_quantile(p), r[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace urisk
