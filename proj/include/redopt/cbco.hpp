#pragma once

#include <string>
#include <vector>

#include "redopt/network.hpp"
#include "redopt/pce.hpp"
#include "redopt/redispatch_det.hpp"
#include "redopt/redispatch_stoch.hpp"

namespace redopt {

// Sentinel outage id for the no-outage base case.
inline constexpr int kBaseCaseOutage = -1;

// One critical outage with its violated branches.
struct CbcoRecord {
  int outage_branch = kBaseCaseOutage;
  std::vector<int> branches; // violated branch indices
  Vec violations;            // MW (deterministic) or expected MW (stochastic)
  Vec frequencies;           // empirical violation frequency, stochastic only

  double max_violation() const { return violations.maxCoeff(); }
};

struct IterationRow {
  int iteration = 0;
  bool empty = false; // terminal row with no critical outages
  int outage_branch = kBaseCaseOutage;
  std::string outage_label;   // "(23,25)" bus pair, or "base case"
  std::string branches_label; // "{(26,30)}"
  double max_mean_violation = 0.0;  // MW
  double pct_samples_violating = 0.0;
  int cumulative_constraints = 0;
  double objective = 0.0; // objective of the subproblem solved this iteration
  double solve_time_s = 0.0;
};

struct IterationLog {
  std::vector<IterationRow> rows;
  std::vector<int> chosen_outages; // branch appended per iteration, in order
  // CSV with header: iteration,critical outage,critical branches,
  // max mean violation (MW),% samples with violations
  std::string to_csv() const;
};

struct DriverOptions {
  int max_iters = 50;
  double violation_threshold = 1e-4; // MW, deterministic criticality
  double solver_tol = 1e-8;
  int jobs = 1; // per-outage analysis parallelism (stochastic path)
};

// Deterministic CBCO analysis: base case first, then every non-bridge
// outage; a branch is critical when |flow| exceeds limit + threshold.
std::vector<CbcoRecord> cbco_analysis(const Network& net,
                                      const OutageScreener& screener,
                                      const Vec& p_gen, const Vec& p_res,
                                      const Vec& p_demand,
                                      double threshold = 1e-4);

// Stochastic analysis per the empirical violation criterion: a branch is
// critical under an outage when its violation frequency over the shared
// samples exceeds eps; severity is the mean of |flow| - limit.
std::vector<CbcoRecord> eps_cbco_analysis(const Network& net,
                                          const OutageScreener& screener,
                                          const PceCoefficients& p_net,
                                          const PceBasis& basis,
                                          const Vec& p_demand, double eps,
                                          const Mat& omegas, int jobs = 1);

// Record with the highest maximum violation; ties break toward the lowest
// outage branch id. Throws EmptyRecords.
const CbcoRecord& max_violation_outage(const std::vector<CbcoRecord>& records);

// Iterative (N-1)-secure deterministic redispatch via constraint
// generation. Throws MaxIterations / InfeasibleSubproblem.
std::pair<DetSolution, IterationLog> run_deterministic(
    const Network& net, const OutageScreener& screener, const Vec& base_gen,
    const Vec& base_res, const Vec& p_demand, const DriverOptions& opts = {});

// Stochastic counterpart driven by the eps-CBCO analysis over a fixed
// shared sample matrix.
std::pair<StochSolution, IterationLog> run_stochastic(
    const Network& net, const OutageScreener& screener,
    const PceCoefficients& base_gen, const PceCoefficients& base_res,
    const Vec& p_demand, double eps, const PceBasis& basis, const Mat& omegas,
    const DriverOptions& opts = {});

std::string bus_pair_label(const Network& net, int branch_idx);

}  // namespace redopt
