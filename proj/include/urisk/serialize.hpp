#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "urisk/estimators.hpp"
#include "urisk/linear_iv.hpp"
#include "urisk/mc.hpp"
#include "urisk/panel.hpp"
#include "urisk/risk_density.hpp"

namespace urisk {

using nlohmann::json;

// Deterministic shortest-ish formatting used in every CSV cell.
std::string format_double(double v);

// Writes rows as CSV with a trailing newline; all formatting deterministic.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

void write_text(const std::string& path, const std::string& content);

// The documented fit-record format shared by QR and IVQR fits.
json fit_record_json(const FitRecord& fit, bool include_profile = false);

json linear_iv_json(const LinearIVFit& fit);

std::vector<std::vector<std::string>> summary_rows(const std::vector<SeriesSummary>& stats);

std::vector<std::vector<std::string>> mc_rows(const MCStudyResult& result);

std::vector<std::vector<std::string>> qq_rows(
    const std::vector<std::pair<double, double>>& pairs);

}  // namespace urisk
