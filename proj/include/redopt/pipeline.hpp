#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "redopt/case_parser.hpp"
#include "redopt/cbco.hpp"
#include "redopt/mc_baseline.hpp"
#include "redopt/network.hpp"
#include "redopt/pce.hpp"

namespace redopt {

struct RunConfig {
  std::string case_path;
  std::string forecasts_path;
  std::string correlations_path; // empty: per-kind defaults
  std::string limits_path;       // empty: keep case limits (with rateA fallback)
  double eps = 0.05;
  int n_samples = 10000;
  std::uint64_t seed = 1;
  int max_iters = 50;
  int jobs = 1;
  std::string out_dir = ".";

  // dataset shaping
  double default_flow_limit = 240.0; // rateA fallback [MW]
  double ramp_up_frac = 0.4;
  double ramp_down_frac = 0.6;
  double curtail_frac = 0.2;
  double res_cost_quad = 0.02;  // curtailment cost r2
  double res_cost_lin = 60.0;   // curtailment cost r1
  std::vector<int> density_gens; // 1-based generator numbers; empty: top-3 std

  void validate() const; // eps in (0,1), n_samples >= 1
};

// Reads a JSON config file; missing keys keep their defaults.
RunConfig load_config(const std::string& path);

// Everything the run modes need, assembled once from the input files.
struct Pipeline {
  Network net;
  std::vector<ForecastRecord> records;
  Mat correlation;
  BasisBuildResult basis;
  Vec p_demand;
  Vec base_dispatch;          // rebalanced mean dispatch
  PceCoefficients base_gen;   // market-clearing coefficients
  std::unique_ptr<OutageScreener> screener;
};

Pipeline load_pipeline(const RunConfig& config);

// `fit` subcommand: Algorithm-3 run up to basis construction; writes
// fit_report.json into the output directory.
int cmd_fit(const RunConfig& config);

enum class RunMode { det, stoch, mc, compare };
RunMode run_mode_from_string(const std::string& s);

// `run` subcommand. Writes iteration logs, solution JSON, comparison CSVs
// and a manifest into the output directory. Returns the process exit code
// (0 secure, 2 infeasible, 3 max-iters, 4 input error, 5 solver failure).
int cmd_run(const RunConfig& config, RunMode mode);

// exit codes
inline constexpr int kExitSecure = 0;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitMaxIters = 3;
inline constexpr int kExitInputError = 4;
inline constexpr int kExitSolverFailure = 5;

}  // namespace redopt
