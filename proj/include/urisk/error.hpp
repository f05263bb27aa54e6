#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace urisk {

// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input: CSV rows, config files, out-of-range parameters.
struct InputError : Error {
  using Error::Error;
};

// Rank-deficient design matrix; carries the offending column indices.
struct RankError : Error {
  std::vector<int> dependent_columns;
  RankError(const std::string& msg, std::vector<int> cols)
      : Error(msg), dependent_columns(std::move(cols)) {}
};

// Solver failed to converge; carries the tail of the iteration trace.
struct ConvergenceError : Error {
  std::vector<double> trace;
  ConvergenceError(const std::string& msg, std::vector<double> tr = {})
      : Error(msg), trace(std::move(tr)) {}
};

// Grid-search argmin landed on the grid boundary. Carries the evaluated
// profile so the caller can inspect or fall back.
struct GridBoundaryError : Error {
  std::vector<double> alphas;
  std::vector<double> wald;
  GridBoundaryError(const std::string& msg, std::vector<double> a, std::vector<double> w)
      : Error(msg), alphas(std::move(a)), wald(std::move(w)) {}
};

// Too many inner quantile fits failed during the grid search.
struct GridInstabilityError : Error {
  using Error::Error;
};

// Simulation study aborted; carries per-replication failure messages.
struct StudyError : Error {
  std::vector<std::string> failures;
  StudyError(const std::string& msg, std::vector<std::string> f)
      : Error(msg), failures(std::move(f)) {}
};

}  // namespace urisk
