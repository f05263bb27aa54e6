#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "urisk/dataset.hpp"
#include "urisk/linear_iv.hpp"
#include "urisk/parallel.hpp"
#include "urisk/qreg.hpp"

namespace urisk {

// Search grid for the coefficient on the endogenous regressor.
struct AlphaGrid {
  double lower = -1.0;
  double upper = 1.0;
  double step = 0.01;
  int refinement_rounds = 2;

  void validate() const;
  int points() const;  // inclusive of both ends
};

struct SmoothingBandwidth {
  enum class Rule { plug_in, fixed };
  Rule rule = Rule::plug_in;
  // fixed: the bandwidth itself; plug_in: the constant c in c*sigma*n^(-1/3).
  double value = 1.0;
};

enum class IVQRMethod { grid, smoothed };

struct IVQRFit {
  double tau = 0.5;
  double alpha = 0.0;       // coefficient on the endogenous regressor
  VectorXd beta;            // coefficients on the controls (X order)
  double wald_at_min = 0.0;
  std::vector<double> profile_alphas;  // every evaluated grid point, ascending
  std::vector<double> wald_profile;    // NaN where the inner fit failed
  MatrixXd covariance;      // (alpha, beta) order
  VectorXd ses;
  IVQRMethod method = IVQRMethod::grid;
  bool fallback_triggered = false;
  std::string fallback_reason;
  Eigen::Index n = 0;
  double bandwidth = 0.0;   // smoothed method only
  std::vector<std::string> coef_names;

  VectorXd coefficients() const {
    VectorXd out(beta.size() + 1);
    out(0) = alpha;
    out.tail(beta.size()) = beta;
    return out;
  }
};

struct IVQROptions {
  std::optional<AlphaGrid> grid;        // default: 2SLS estimate +- 10 SE, 201 points
  SmoothingBandwidth bandwidth;
  QROptions qr;
  int max_newton_iterations = 200;
  int newton_restarts = 5;
  double instability_share = 0.20;      // inner-fit failure share that aborts the grid
  Exec exec = Exec::openmp;
  bool compute_covariance = true;
};

// Least-squares projection of d on (X, Z).
FirstStage first_stage_fit(const EstimationDataset& ds);

// Wald statistic of the coefficient on d-hat in the quantile regression of
// y - d*alpha on (X, d-hat); zero at the structural alpha.
double wald_objective(double alpha_candidate, const EstimationDataset& ds, QuantileLevel tau,
                      const VectorXd& d_hat);

IVQRFit fit_ivqr_grid(const EstimationDataset& ds, QuantileLevel tau, const AlphaGrid& grid,
                      const IVQROptions& opts = {});

IVQRFit fit_ivqr_smoothed(const EstimationDataset& ds, QuantileLevel tau,
                          const SmoothingBandwidth& bw, const IVQROptions& opts = {});

// Grid search first; on boundary, instability, or convergence failure falls
// back to the smoothed estimator and records the reason.
IVQRFit fit_ivqr_auto(const EstimationDataset& ds, QuantileLevel tau,
                      const IVQROptions& opts = {});

// Builds the default grid around the 2SLS estimate.
AlphaGrid default_alpha_grid(const EstimationDataset& ds, int points = 201,
                             double se_span = 10.0, int refinement_rounds = 2);

// GMM sandwich covariance with a Gaussian-kernel density at zero; returns
// the full matrix, diagonal square roots go to fit.ses.
MatrixXd ivqr_se(const IVQRFit& fit, const EstimationDataset& ds);

// Piecewise-linear smoothed indicator: 1 for v<=-1, (1-v)/2 inside (-1,1),
// 0 for v>=1.
inline double smoothed_indicator(double v) {
  if (v <= -1.0) return 1.0;
  if (v >= 1.0) return 0.0;
  return 0.5 * (1.0 - v);
}

}  // namespace urisk
