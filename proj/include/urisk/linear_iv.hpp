#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "urisk/dataset.hpp"

namespace urisk {

enum class CovType { robust, hac };

struct CovSpec {
  CovType type = CovType::robust;
  int hac_lags = 0;  // Bartlett lags; callers default this to horizon-1
};

struct FirstStage {
  VectorXd coefficients;  // on (X, Z)
  double F_statistic = 0.0;
  VectorXd fitted;
};

// Two-stage least squares fit of y on (d, X) with instruments (X, Z).
// Coefficient order everywhere is (alpha, beta...) = (d, X columns).
struct LinearIVFit {
  double alpha = 0.0;
  VectorXd beta;
  VectorXd residuals;
  MatrixXd covariance;
  FirstStage first_stage;
  bool weak_instrument_warning = false;
  std::string warning;
  Eigen::Index n = 0;
  std::vector<std::string> coef_names;

  VectorXd coefficients() const {
    VectorXd out(beta.size() + 1);
    out(0) = alpha;
    out.tail(beta.size()) = beta;
    return out;
  }
};

struct LinearIVOptions {
  CovSpec cov;
  double weak_f_threshold = 10.0;
};

LinearIVFit fit_2sls(const EstimationDataset& ds, const LinearIVOptions& opts = {});

struct ResidualMoments {
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

ResidualMoments residual_moments(const VectorXd& residuals);
inline ResidualMoments residual_moments(const LinearIVFit& fit) {
  return residual_moments(fit.residuals);
}

// QQ pairs against the standard normal: i-th pair is
// (Phi^-1((i-0.5)/n), i-th order statistic of the standardized residuals).
std::vector<std::pair<double, double>> qq_data(const VectorXd& residuals);

}  // namespace urisk
