#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "urisk/error.hpp"

namespace urisk {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Quantile level, validated on construction.
struct QuantileLevel {
  double value;
  QuantileLevel(double tau) : value(tau) {
    if (!(tau > 0.0 && tau < 1.0))
      throw InputError("quantile level must lie strictly between 0 and 1");
  }
  operator double() const { return value; }
};

// Check loss: tau*u for u >= 0, (tau-1)*u for u < 0.
inline double check_loss(double u, double tau) {
  return u >= 0.0 ? tau * u : (tau - 1.0) * u;
}

struct SolverInfo {
  int iterations = 0;
  bool converged = false;
  bool degenerate_ties = false;  // minimizer was set-valued
};

struct QuantileFit {
  double tau = 0.5;
  VectorXd coefficients;
  VectorXd residuals;
  double objective = 0.0;
  std::optional<MatrixXd> covariance;
  SolverInfo solver_info;
  std::vector<int> basis;  // observations interpolated at the optimum
};

struct QROptions {
  int max_iterations = 0;        // 0 -> 200 + 25*n
  double tolerance = 1e-9;       // reduced-cost slack
  std::vector<int> warm_basis;   // starting vertex, e.g. from a nearby fit
};

// Minimizes sum_i check_loss(y_i - x_i'b, tau) exactly, by descent over
// basic (vertex) solutions of the equivalent linear program. When the
// minimizer is set-valued the lexicographically smallest optimal vertex is
// returned and degenerate_ties is set.
QuantileFit fit_quantile(const MatrixXd& X, const VectorXd& y, QuantileLevel tau,
                         const QROptions& opts = {});

struct CovOptions {
  // > 0: fixed kernel bandwidth on the residual scale. Otherwise a
  // Hall-Sheather rule in tau is mapped to the residual scale through a
  // Gaussian reference.
  double bandwidth_override = 0.0;
};

// Heteroskedasticity-robust sandwich covariance of the fitted coefficients,
// with a Gaussian-kernel estimate of the residual density at zero.
MatrixXd qreg_cov(const QuantileFit& fit, const MatrixXd& X, const CovOptions& opts = {});

// Residual-scale kernel bandwidth used by qreg_cov (exposed for reuse).
double powell_bandwidth(const VectorXd& residuals, double tau);

}  // namespace urisk
