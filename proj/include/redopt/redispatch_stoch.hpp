#pragma once

#include <vector>

#include "redopt/conic.hpp"
#include "redopt/network.hpp"
#include "redopt/pce.hpp"
#include "redopt/redispatch_det.hpp"

namespace redopt {

// Chebyshev chance-constraint multiplier sqrt(1/eps).
double lambda_of_eps(double eps);

struct StochProblemOptions {
  bool screen_inactive = true;
  double solver_tol = 1e-8;
};

// Variable layout of the stochastic problem; coefficients of unit i are
// contiguous, [i*|M| .. i*|M|+|M|-1].
struct StochVarMap {
  Eigen::Index n_terms = 0;
  Eigen::Index up_off = 0;
  Eigen::Index down_off = 0;
  Eigen::Index curtail_off = 0;
  Eigen::Index epi_off = 0; // first epigraph variable
  Eigen::Index n_total = 0;
};

struct StochSolution {
  Mat up_coeffs;      // |G| x |M|
  Mat down_coeffs;    // |G| x |M|
  Mat curtail_coeffs; // |R| x |M|
  PceCoefficients p_gen;  // recovered P_G
  PceCoefficients p_res;  // recovered P_R
  PceCoefficients p_net;  // nodal net injections
  PceCoefficients p_flow; // intact branch flows
  double expected_objective = 0.0;
  SolveReport report;
};

// PCE-overloaded chance-constrained redispatch SOCP. Decision variables
// are the three coefficient matrices plus one norm-epigraph variable per
// chance-constrained scalar. Per-term conservation equalities; Chebyshev
// cone pairs on every adjustment bound and every (kept) flow limit; the
// extra outage constraints replicate the flow pattern on post-outage rows.
// Throws Unbalanced if the base coefficients violate conservation in any
// term.
ConicProblem build_stoch_problem(const Network& net, const OutageScreener& screener,
                                 const PceCoefficients& base_gen,
                                 const PceCoefficients& base_res,
                                 const Vec& p_demand, double eps,
                                 const std::vector<OutageConstraint>& extra,
                                 const StochProblemOptions& opts = {},
                                 StochVarMap* map_out = nullptr);

// Unpacks a solved coefficient vector and attaches the recovered
// random-variable solution (P_G, P_R, net injections, intact flows).
StochSolution recover(const Vec& solution, const StochVarMap& map,
                      const Network& net, const OutageScreener& screener,
                      const PceCoefficients& base_gen,
                      const PceCoefficients& base_res, const Vec& p_demand,
                      const SolveReport& report);

// Expected redispatch cost recomputed from coefficient matrices.
double expected_objective_value(const Mat& up, const Mat& down, const Mat& curtail,
                                const Network& net);

}  // namespace redopt
