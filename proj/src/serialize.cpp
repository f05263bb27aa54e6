#include "urisk/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "urisk/error.hpp"

namespace urisk {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
    out << "\n";
  }
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << content;
}

json fit_record_json(const FitRecord& fit, bool include_profile) {
  json j;
  j["tau"] = fit.tau;
  j["n"] = fit.n;
  j["method"] = fit.method;
  json coefs, ses;
  const VectorXd all = fit.coefficients();
  for (Eigen::Index k = 0; k < all.size(); ++k) {
    const std::string name = k < static_cast<Eigen::Index>(fit.coef_names.size())
                                 ? fit.coef_names[static_cast<std::size_t>(k)]
                                 : "c" + std::to_string(k);
    coefs[name] = all(k);
    if (fit.ses.size() == all.size()) ses[name] = fit.ses(k);
  }
  j["coefficients"] = coefs;
  j["ses"] = ses;
  if (fit.method == "qr") j["objective"] = fit.objective;
  if (fit.method == "grid") j["wald_at_min"] = fit.wald_at_min;
  j["fallback_triggered"] = fit.fallback_triggered;
  if (fit.fallback_triggered) j["fallback_reason"] = fit.fallback_reason;
  if (fit.degenerate_ties) j["degenerate_ties"] = true;
  if (include_profile && !fit.profile_alphas.empty()) {
    j["wald_profile"] = {{"alpha", fit.profile_alphas}, {"wald", fit.wald_profile}};
  }
  return j;
}

json linear_iv_json(const LinearIVFit& fit) {
  json j;
  j["n"] = fit.n;
  json coefs, ses;
  const VectorXd all = fit.coefficients();
  for (Eigen::Index k = 0; k < all.size(); ++k) {
    const std::string name = k < static_cast<Eigen::Index>(fit.coef_names.size())
                                 ? fit.coef_names[static_cast<std::size_t>(k)]
                                 : "c" + std::to_string(k);
    coefs[name] = all(k);
    ses[name] = std::sqrt(std::max(fit.covariance(k, k), 0.0));
  }
  j["coefficients"] = coefs;
  j["ses"] = ses;
  j["first_stage_F"] = fit.first_stage.F_statistic;
  j["weak_instrument_warning"] = fit.weak_instrument_warning;
  if (fit.weak_instrument_warning) j["warning"] = fit.warning;
  return j;
}

std::vector<std::vector<std::string>> summary_rows(const std::vector<SeriesSummary>& stats) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& s : stats) {
    if (s.empty) {
      rows.push_back({s.name, "", "", "0", "", "", "", ""});
      continue;
    }
    rows.push_back({s.name, s.first.str(), s.last.str(), std::to_string(s.obs),
                    format_double(s.mean), format_double(s.sd), format_double(s.min),
                    format_double(s.max)});
  }
  return rows;
}

std::vector<std::vector<std::string>> mc_rows(const MCStudyResult& result) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : result.rows) {
    rows.push_back({format_double(r.tau), format_double(r.true_alpha),
                    format_double(r.mean_estimate), format_double(r.bias), format_double(r.rmse),
                    format_double(r.coverage_95), std::to_string(r.reps)});
  }
  return rows;
}

std::vector<std::vector<std::string>> qq_rows(
    const std::vector<std::pair<double, double>>& pairs) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& [a, b] : pairs) rows.push_back({format_double(a), format_double(b)});
  return rows;
}

}  // namespace urisk
