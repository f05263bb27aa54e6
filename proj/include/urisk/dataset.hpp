#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "urisk/panel.hpp"

namespace urisk {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Recipe for assembling one estimation dataset from a panel.
struct DatasetSpec {
  std::string dependent_series;
  int horizon_months = 12;
  std::string endogenous_series;
  std::vector<std::string> control_series;     // constant appended automatically
  std::vector<std::string> instrument_series;  // required for IV estimators
  std::optional<Month> sample_start;
  std::optional<Month> sample_end;

  void validate() const;
};

// Aligned arrays for one group/horizon: y is the h-month-ahead change of the
// dependent series anchored at t_index, d the endogenous regressor, X the
// controls with an intercept in the last column, Z the instruments. No
// missing values remain after construction.
struct EstimationDataset {
  VectorXd y;
  VectorXd d;
  MatrixXd X;
  MatrixXd Z;
  std::vector<Month> t_index;
  std::vector<std::string> x_names;  // includes "const"
  std::vector<std::string> z_names;
  std::string endogenous_name;
  std::string label;  // group/horizon tag, free-form

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p_x() const { return X.cols(); }
  Eigen::Index p_d() const { return 1; }
  Eigen::Index p_z() const { return Z.cols(); }
};

// Rows are months where y (after horizon differencing), d, every control and
// every instrument are simultaneously present and inside the sample window.
EstimationDataset build_design(const TimeSeriesPanel& panel, const DatasetSpec& spec);

}  // namespace urisk
