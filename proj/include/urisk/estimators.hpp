#pragma once

#include <string>
#include <vector>

#include "urisk/dataset.hpp"
#include "urisk/ivqr.hpp"

namespace urisk {

enum class Estimator { qr, ivqr_grid, ivqr_smoothed, ivqr_auto };

std::string to_string(Estimator e);
Estimator estimator_from_string(const std::string& s);

// One fitted quantile model of any family, in a common layout: alpha is the
// coefficient on the endogenous regressor, beta the controls, covariance and
// ses ordered (alpha, beta...).
struct FitRecord {
  double tau = 0.5;
  double alpha = 0.0;
  VectorXd beta;
  MatrixXd covariance;
  VectorXd ses;
  std::string method;  // "qr" | "grid" | "smoothed"
  bool fallback_triggered = false;
  std::string fallback_reason;
  bool degenerate_ties = false;
  Eigen::Index n = 0;
  double objective = 0.0;      // qr only
  double wald_at_min = 0.0;    // grid only
  std::vector<double> profile_alphas;  // grid only
  std::vector<double> wald_profile;
  std::vector<std::string> coef_names;  // (d, X columns)

  VectorXd coefficients() const {
    VectorXd out(beta.size() + 1);
    out(0) = alpha;
    out.tail(beta.size()) = beta;
    return out;
  }
  // Prediction d*alpha + x'beta at given conditioning values.
  double predict(const VectorXd& x, double d) const { return d * alpha + x.dot(beta); }
};

// Fits one dataset at one quantile with the chosen estimator. For qr the
// endogenous regressor enters as an ordinary regressor (reduced form).
FitRecord fit_at(const EstimationDataset& ds, QuantileLevel tau, Estimator estimator,
                 const IVQROptions& opts = {});

}  // namespace urisk
