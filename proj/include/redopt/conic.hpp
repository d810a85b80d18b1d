#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <string>
#include <vector>

#include "redopt/network.hpp"

namespace redopt {

using SpMat = Eigen::SparseMatrix<double>;
using SpVec = Eigen::SparseVector<double>;

// ||A z + b||_2 <= c^T z + d
struct SocConstraint {
  SpMat a;
  Vec b;
  SpVec c;
  double d = 0.0;
};

// Canonical convex subproblem:
//   minimize    1/2 z^T Q z + c^T z
//   subject to  A z = b,  lb <= z <= ub,  SOC constraints.
// The deterministic redispatch QP is the same problem with no cones.
struct ConicProblem {
  Eigen::Index n = 0;
  SpMat quadratic; // Q, PSD
  Vec linear;      // c
  SpMat eq;        // A
  Vec eq_rhs;      // b
  Vec lower;       // -inf allowed
  Vec upper;       // +inf allowed
  std::vector<SocConstraint> cones;

  static ConicProblem make(Eigen::Index n);
};

enum class SolveStatus { optimal, infeasible, unbounded, numerical_failure };

std::string to_string(SolveStatus s);

struct SolveReport {
  SolveStatus status = SolveStatus::numerical_failure;
  Vec solution;
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  double wall_time_s = 0.0;
};

struct SolveOptions {
  double tol = 1e-8;          // relative KKT residual / gap tolerance
  double tol_infeasible = 1e-8;
  int max_iterations = 100;
  bool verbose = false;       // per-iteration trace on stderr
  // Optional initial point hint (primal only); empty disables it.
  Vec initial_point;
};

// Primal-dual interior-point solve. Deterministic for identical inputs;
// reentrant and side-effect-free.
SolveReport solve(const ConicProblem& problem, const SolveOptions& opts = {});
SolveReport solve(const ConicProblem& problem, double tol);

}  // namespace redopt
