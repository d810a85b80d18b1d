#pragma once

#include <vector>

#include "redopt/conic.hpp"
#include "redopt/network.hpp"

namespace redopt {

// One appended (N-1) constraint: flow on `branch` after outage of
// `outage_branch` must respect the branch limit.
struct OutageConstraint {
  int outage_branch = -1;
  int branch = -1;
  bool operator==(const OutageConstraint&) const = default;
};

struct DetProblemOptions {
  // Drop intact-flow rows that provably cannot bind anywhere in the box
  // (interval bound); the feasible set and optimum are unchanged.
  bool screen_inactive = true;
  double solver_tol = 1e-8;
};

struct DetSolution {
  Vec p_up;    // |G|
  Vec p_down;  // |G|
  Vec curtail; // |R|
  Vec p_gen;   // base + up - down
  Vec p_res;   // base - curtail
  double objective = 0.0;
  SolveReport report;
};

// Quadratic redispatch problem: adjustment boxes, power conservation,
// intact flow limits, plus the given outage-flow constraints. Variables
// are ordered [p_up; p_down; curtail]. Throws Unbalanced if the base
// schedule violates conservation.
ConicProblem build_det_problem(const Network& net, const OutageScreener& screener,
                               const Vec& base_gen, const Vec& base_res,
                               const Vec& p_demand,
                               const std::vector<OutageConstraint>& extra,
                               const DetProblemOptions& opts = {});

// Builds, solves, and unpacks.
DetSolution solve_det(const Network& net, const OutageScreener& screener,
                      const Vec& base_gen, const Vec& base_res,
                      const Vec& p_demand,
                      const std::vector<OutageConstraint>& extra,
                      const DetProblemOptions& opts = {});

// Redispatch cost of a solution, Eq-by-Eq recomputation.
double objective_value(const DetSolution& sol, const Network& net);

// Minimal-slack infeasibility diagnosis: relaxes every flow constraint by
// a per-branch slack and minimizes the total. Returns a human-readable
// list of branches needing slack.
std::string diagnose_infeasibility(const Network& net,
                                   const OutageScreener& screener,
                                   const Vec& base_gen, const Vec& base_res,
                                   const Vec& p_demand,
                                   const std::vector<OutageConstraint>& extra);

}  // namespace redopt
