#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>

#include "urisk/commands.hpp"
#include "urisk/error.hpp"
#include "urisk/parallel.hpp"

namespace {

struct Global {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = -1;
};

urisk::RunConfig load(const Global& g) {
  std::string path = g.config_path;
  if (path.empty()) {
    const char* env = std::getenv("URISK_CONFIG");
    if (env) path = env;
  }
  if (path.empty())
    throw urisk::InputError("no config given: pass --config or set URISK_CONFIG");
  urisk::RunConfig cfg = urisk::load_config(path);
  if (g.threads >= 0) cfg.threads = g.threads;
  urisk::set_max_threads(cfg.threads);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "urisk: quantile and IV-quantile estimation of unemployment tail risk\n"
      "from monthly time-series panels, with predictive densities, group\n"
      "contrasts, linear-IV diagnostics, and Monte Carlo validation."};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may appear after the subcommand

  Global g;
  app.add_option("--config", g.config_path, "Config or manifest JSON (env: URISK_CONFIG)");
  app.add_option("--out", g.out_dir, "Output directory (default: runs/<command>-<stamp>-<hash>)");
  app.add_option("--seed", g.seed, "Override the config seed");
  app.add_option("--threads", g.threads, "Worker threads (0 = OpenMP default)");

  urisk::CmdArgs args;

  auto* summarize = app.add_subcommand("summarize", "Per-series summary statistics CSV");

  auto* estimate = app.add_subcommand("estimate", "One fit at one quantile; writes fit.json");
  estimate->add_option("--group", args.group, "Group label from the config")->required();
  estimate->add_option("--horizon", args.horizon, "Horizon in months");
  estimate->add_option("--tau", args.tau, "Quantile level");
  estimate->add_option("--method", args.method, "qr | ivqr_grid | ivqr_smoothed | ivqr_auto");
  estimate->add_option("--instrument", args.instrument, "Instrument set label");
  estimate->add_flag("--profile", args.include_profile, "Attach the Wald profile to fit.json");

  auto* grid = app.add_subcommand("grid", "Fits across the tau grid; writes grid.csv");
  grid->add_option("--group", args.group)->required();
  grid->add_option("--horizon", args.horizon);
  grid->add_option("--method", args.method);
  grid->add_option("--instrument", args.instrument);

  auto* density = app.add_subcommand("density", "Predictive density at a conditioning month");
  density->add_option("--group", args.group)->required();
  density->add_option("--horizon", args.horizon);
  density->add_option("--method", args.method);
  density->add_option("--instrument", args.instrument);
  density->add_option("--date", args.date, "Conditioning month YYYY-MM")->required();

  auto* tailrisk = app.add_subcommand("tailrisk", "Tail-risk table and group contrasts");
  tailrisk->add_option("--horizon", args.horizon, "Restrict to one horizon");
  tailrisk->add_option("--tau", args.tau);
  tailrisk->add_option("--method", args.method);
  tailrisk->add_option("--instrument", args.instrument);

  auto* mc = app.add_subcommand("mc", "Monte Carlo bias/RMSE/coverage study");

  auto* diagnostics = app.add_subcommand("diagnostics", "Linear-IV residual QQ data and moments");
  diagnostics->add_option("--group", args.group)->required();
  diagnostics->add_option("--horizon", args.horizon);
  diagnostics->add_option("--instrument", args.instrument);

  CLI11_PARSE(app, argc, argv);

  try {
    const urisk::RunConfig cfg = load(g);
    args.out_dir = g.out_dir;
    args.seed_override = g.seed;
    urisk::CmdResult res;
    if (summarize->parsed()) res = urisk::cmd_summarize(cfg, args);
    if (estimate->parsed()) res = urisk::cmd_estimate(cfg, args);
    if (grid->parsed()) res = urisk::cmd_grid(cfg, args);
    if (density->parsed()) res = urisk::cmd_density(cfg, args);
    if (tailrisk->parsed()) res = urisk::cmd_tailrisk(cfg, args);
    if (mc->parsed()) res = urisk::cmd_mc(cfg, args);
    if (diagnostics->parsed()) res = urisk::cmd_diagnostics(cfg, args);
    for (const auto& f : res.files) std::printf("%s\n", f.c_str());
    return 0;
  } catch (const urisk::InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
