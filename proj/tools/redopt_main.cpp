#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "redopt/errors.hpp"
#include "redopt/pipeline.hpp"

namespace {

// --config gives the baseline; explicit flags override it.
void add_common_flags(CLI::App* app, redopt::RunConfig& cfg,
                      std::string& config_path) {
  app->add_option("--config", config_path, "JSON config file");
  app->add_option("--case", cfg.case_path, "Matpower case file");
  app->add_option("--forecasts", cfg.forecasts_path, "RES forecast CSV");
  app->add_option("--correlations", cfg.correlations_path,
                  "correlation spec (kind defaults or dense CSV)");
  app->add_option("--limits", cfg.limits_path, "branch limit profile (JSON)");
  app->add_option("--eps", cfg.eps, "chance-constraint failure rate");
  app->add_option("--samples", cfg.n_samples, "Monte-Carlo sample count");
  app->add_option("--seed", cfg.seed, "RNG seed");
  app->add_option("--max-iters", cfg.max_iters,
                  "constraint-generation iteration cap");
  app->add_option("--jobs", cfg.jobs, "worker thread count");
  app->add_option("--out", cfg.out_dir, "output directory");
}

redopt::RunConfig merge_config(const redopt::RunConfig& flags,
                               const std::string& config_path,
                               const CLI::App* app) {
  if (config_path.empty()) return flags;
  redopt::RunConfig cfg = redopt::load_config(config_path);
  auto passed = [&](const char* name) { return app->count(name) > 0; };
  if (passed("--case")) cfg.case_path = flags.case_path;
  if (passed("--forecasts")) cfg.forecasts_path = flags.forecasts_path;
  if (passed("--correlations")) cfg.correlations_path = flags.correlations_path;
  if (passed("--limits")) cfg.limits_path = flags.limits_path;
  if (passed("--eps")) cfg.eps = flags.eps;
  if (passed("--samples")) cfg.n_samples = flags.n_samples;
  if (passed("--seed")) cfg.seed = flags.seed;
  if (passed("--max-iters")) cfg.max_iters = flags.max_iters;
  if (passed("--jobs")) cfg.jobs = flags.jobs;
  if (passed("--out")) cfg.out_dir = flags.out_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"(N-1)-secure redispatch under renewable-forecast uncertainty"};
  app.require_subcommand(1);

  redopt::RunConfig fit_cfg, run_cfg;
  std::string fit_config_path, run_config_path, mode_str = "stoch";

  CLI::App* fit = app.add_subcommand("fit", "fit forecast marginals and build the PCE basis");
  add_common_flags(fit, fit_cfg, fit_config_path);

  CLI::App* run = app.add_subcommand("run", "solve a redispatch pipeline");
  add_common_flags(run, run_cfg, run_config_path);
  run->add_option("--mode", mode_str, "det | stoch | mc | compare")
      ->check(CLI::IsMember({"det", "stoch", "mc", "compare"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) {
      return redopt::cmd_fit(merge_config(fit_cfg, fit_config_path, fit));
    }
    return redopt::cmd_run(merge_config(run_cfg, run_config_path, run),
                           redopt::run_mode_from_string(mode_str));
  } catch (const redopt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return redopt::kExitInputError;
  }
}
