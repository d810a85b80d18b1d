#pragma once

#include <Eigen/Dense>

#include <random>
#include <stdexcept>
#include <vector>

#include "redopt/network.hpp"

namespace redopt::test {

// Exact primal active-set solver for strictly convex box QPs
//   minimize 1/2 x^T Q x + c^T x  s.t.  lb <= x <= ub,
// used as an independent oracle for the interior-point path. Finite
// termination on nondegenerate data; no tolerances in the pivoting logic
// beyond floating-point comparison slack.
inline Vec box_qp_active_set(const Mat& q, const Vec& c, const Vec& lb,
                             const Vec& ub) {
  const auto n = q.rows();
  Vec x = 0.5 * (lb + ub);
  // -1: at lower, +1: at upper, 0: free
  std::vector<int> state(static_cast<std::size_t>(n), 0);

  for (int guard = 0; guard < 200 * static_cast<int>(n) + 200; ++guard) {
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i)
      if (state[static_cast<std::size_t>(i)] == 0) free.push_back(i);

    // minimize over the free subspace with bound variables fixed
    Vec target = x;
    if (!free.empty()) {
      Mat qff(free.size(), free.size());
      Vec rhs(free.size());
      for (std::size_t a = 0; a < free.size(); ++a) {
        rhs(static_cast<Eigen::Index>(a)) = -c(free[a]);
        for (Eigen::Index i = 0; i < n; ++i)
          if (state[static_cast<std::size_t>(i)] != 0)
            rhs(static_cast<Eigen::Index>(a)) -= q(free[a], i) * x(i);
        for (std::size_t b = 0; b < free.size(); ++b)
          qff(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
              q(free[a], free[b]);
      }
      Vec xf = qff.ldlt().solve(rhs);
      for (std::size_t a = 0; a < free.size(); ++a) target(free[a]) = xf(static_cast<Eigen::Index>(a));
    }

    // step toward the subspace minimizer, stopping at the first bound hit
    double alpha = 1.0;
    Eigen::Index blocking = -1;
    int blocking_side = 0;
    for (Eigen::Index i : free) {
      double d = target(i) - x(i);
      if (d > 1e-14 && x(i) + alpha * d > ub(i)) {
        alpha = (ub(i) - x(i)) / d;
        blocking = i;
        blocking_side = +1;
      } else if (d < -1e-14 && x(i) + alpha * d < lb(i)) {
        alpha = (lb(i) - x(i)) / d;
        blocking = i;
        blocking_side = -1;
      }
    }
    for (Eigen::Index i : free) x(i) += alpha * (target(i) - x(i));
    if (blocking >= 0) {
      x(blocking) = blocking_side > 0 ? ub(blocking) : lb(blocking);
      state[static_cast<std::size_t>(blocking)] = blocking_side;
      continue;
    }

    // at the subspace minimizer: check multipliers of the active bounds
    Vec grad = q * x + c;
    Eigen::Index release = -1;
    double worst = -1e-10;
    for (Eigen::Index i = 0; i < n; ++i) {
      int s = state[static_cast<std::size_t>(i)];
      if (s == 0) continue;
      double mult = s < 0 ? grad(i) : -grad(i);
      if (mult < worst) {
        worst = mult;
        release = i;
      }
    }
    if (release < 0) return x;
    state[static_cast<std::size_t>(release)] = 0;
  }
  throw std::runtime_error("active-set oracle failed to terminate");
}

// Full enumeration of all 3^n lower/free/upper assignments; exact but only
// viable for small n. Cross-checks the active-set oracle.
inline Vec box_qp_enumerate(const Mat& q, const Vec& c, const Vec& lb,
                            const Vec& ub) {
  const auto n = q.rows();
  double best = std::numeric_limits<double>::infinity();
  Vec best_x;
  std::vector<int> state(static_cast<std::size_t>(n), 0);
  const long total = static_cast<long>(std::pow(3.0, static_cast<double>(n)));
  for (long code = 0; code < total; ++code) {
    long rem = code;
    for (Eigen::Index i = 0; i < n; ++i) {
      state[static_cast<std::size_t>(i)] = static_cast<int>(rem % 3) - 1;
      rem /= 3;
    }
    std::vector<Eigen::Index> free;
    Vec x(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (state[static_cast<std::size_t>(i)] == 0)
        free.push_back(i);
      else
        x(i) = state[static_cast<std::size_t>(i)] < 0 ? lb(i) : ub(i);
    }
    if (!free.empty()) {
      Mat qff(free.size(), free.size());
      Vec rhs(free.size());
      for (std::size_t a = 0; a < free.size(); ++a) {
        rhs(static_cast<Eigen::Index>(a)) = -c(free[a]);
        for (Eigen::Index i = 0; i < n; ++i)
          if (state[static_cast<std::size_t>(i)] != 0)
            rhs(static_cast<Eigen::Index>(a)) -= q(free[a], i) * x(i);
        for (std::size_t b = 0; b < free.size(); ++b)
          qff(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
              q(free[a], free[b]);
      }
      Vec xf = qff.ldlt().solve(rhs);
      bool ok = true;
      for (std::size_t a = 0; a < free.size(); ++a) {
        double v = xf(static_cast<Eigen::Index>(a));
        if (v < lb(free[a]) - 1e-12 || v > ub(free[a]) + 1e-12) ok = false;
        x(free[a]) = v;
      }
      if (!ok) continue;
    }
    double val = 0.5 * x.dot(q * x) + c.dot(x);
    if (val < best) {
      best = val;
      best_x = x;
    }
  }
  return best_x;
}

struct RandomBoxQp {
  Mat q;
  Vec c, lb, ub;
};

inline RandomBoxQp random_box_qp(std::mt19937& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat r(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) r(i, j) = g(rng);
  RandomBoxQp p;
  p.q = r.transpose() * r + 0.5 * Mat::Identity(n, n);
  p.c = Vec::NullaryExpr(n, [&](Eigen::Index) { return 3.0 * g(rng); });
  p.lb = Vec::NullaryExpr(n, [&](Eigen::Index) { return -std::abs(g(rng)) - 0.1; });
  p.ub = Vec::NullaryExpr(n, [&](Eigen::Index) { return std::abs(g(rng)) + 0.1; });
  return p;
}

}  // namespace redopt::test
