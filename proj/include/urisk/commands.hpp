#pragma once

#include <string>
#include <vector>

#include "urisk/config.hpp"

namespace urisk {

struct CmdArgs {
  std::string group;
  int horizon = 0;          // 0 -> first configured horizon
  double tau = 0.0;         // 0 -> estimator config tau
  std::string method;       // empty -> estimator config method
  std::string instrument;   // instrument set label; empty -> lone set, if any
  std::string date;         // conditioning month for density, YYYY-MM
  std::string out_dir;      // empty -> config output dir or auto-named
  std::uint64_t seed_override = 0;
  bool include_profile = false;  // attach the Wald profile to fit records
};

struct CmdResult {
  std::string out_dir;
  std::vector<std::string> files;  // everything written, manifest included
};

CmdResult cmd_summarize(const RunConfig& cfg, const CmdArgs& args);
CmdResult cmd_estimate(const RunConfig& cfg, const CmdArgs& args);
CmdResult cmd_grid(const RunConfig& cfg, const CmdArgs& args);
CmdResult cmd_density(const RunConfig& cfg, const CmdArgs& args);
CmdResult cmd_tailrisk(const RunConfig& cfg, const CmdArgs& args);
CmdResult cmd_mc(const RunConfig& cfg, const CmdArgs& args);
CmdResult cmd_diagnostics(const RunConfig& cfg, const CmdArgs& args);

}  // namespace urisk
