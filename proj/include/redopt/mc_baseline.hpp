#pragma once

#include <vector>

#include "redopt/cbco.hpp"
#include "redopt/network.hpp"
#include "redopt/pce.hpp"

namespace redopt {

struct McOptions {
  int jobs = 1;
  // Realized base dispatch outside [0, p_max] is clipped and rebalanced by
  // default; setting this rejects the sample instead.
  bool reject_out_of_range = false;
  DriverOptions driver;
};

struct EnsembleResult {
  Mat gen_dispatch; // N x |G|, final p_G per sample
  Mat res_dispatch; // N x |R|
  Vec objectives;   // N
  std::vector<int> iterations;      // constraint-generation iterations per sample
  std::vector<int> failed_samples;  // infeasible / rejected sample indices
  int clipped_samples = 0;
  double wall_time_s = 0.0;

  Vec gen_mean() const;
  Vec gen_std() const;
};

// Monte-Carlo reference: realizes the market clearing per sample and runs
// the deterministic constraint-generation redispatch for each one.
// Failures are excluded and reported, never silently dropped.
EnsembleResult run_mc(const Network& net, const OutageScreener& screener,
                      const PceBasis& basis, const PceCoefficients& base_gen,
                      const PceCoefficients& base_res, const Vec& p_demand,
                      const Mat& omegas, const McOptions& opts = {});

struct ComparisonRow {
  int gen_index = 0;
  double mean_pce = 0.0;
  double mean_mc = 0.0;
  double std_pce = 0.0;
  double std_mc = 0.0;
};

// Per-generator moment comparison; the PCE column evaluates the recovered
// solution on the same samples the ensemble used.
std::vector<ComparisonRow> compare(const EnsembleResult& ensemble,
                                   const StochSolution& stoch,
                                   const PceBasis& basis, const Mat& omegas);

std::string comparison_csv(const std::vector<ComparisonRow>& rows);

// Density estimate of one generator's setpoint under both methods, with
// Freedman-Diaconis bin width. Columns: bin_center,density_pce,density_mc.
std::string density_csv(const EnsembleResult& ensemble, const StochSolution& stoch,
                        const PceBasis& basis, const Mat& omegas, int gen_index);

// Per-sample dispatch dump (plain CSV, one row per sample).
std::string ensemble_csv(const EnsembleResult& ensemble);

}  // namespace redopt
