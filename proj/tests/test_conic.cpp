#include <doctest.h>

#include <cmath>
#include <random>

#include "redopt/conic.hpp"
#include "redopt/errors.hpp"
#include "qp_oracle.hpp"

using namespace redopt;

namespace {

ConicProblem dense_box_qp(const Mat& q, const Vec& c, const Vec& lb, const Vec& ub) {
  ConicProblem p = ConicProblem::make(q.rows());
  std::vector<Eigen::Triplet<double>> trips;
  for (Eigen::Index i = 0; i < q.rows(); ++i)
    for (Eigen::Index j = 0; j < q.cols(); ++j)
      if (q(i, j) != 0.0)
        trips.emplace_back(static_cast<int>(i), static_cast<int>(j), q(i, j));
  p.quadratic.setFromTriplets(trips.begin(), trips.end());
  p.linear = c;
  p.lower = lb;
  p.upper = ub;
  return p;
}

}  // namespace

TEST_CASE("scalar qp with a bound") {
  // min x^2 s.t. x >= 3
  ConicProblem p = ConicProblem::make(1);
  p.quadratic.insert(0, 0) = 2.0;
  p.lower(0) = 3.0;
  SolveReport r = solve(p);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.solution(0) == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(r.objective == doctest::Approx(9.0).epsilon(1e-8));
}

TEST_CASE("hand-derived second-order cone geometry") {
  // min x s.t. ||(x, 1)|| <= 2  ->  x = -sqrt(3)
  ConicProblem p = ConicProblem::make(1);
  p.linear(0) = 1.0;
  SocConstraint c;
  c.a.resize(2, 1);
  c.a.insert(0, 0) = 1.0;
  c.b = Vec::Zero(2);
  c.b(1) = 1.0;
  c.c.resize(1);
  c.d = 2.0;
  p.cones.push_back(c);
  SolveReport r = solve(p);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(std::abs(r.solution(0) + std::sqrt(3.0)) < 1e-8);
}

TEST_CASE("equality-infeasible system is flagged") {
  ConicProblem p = ConicProblem::make(1);
  p.quadratic.insert(0, 0) = 2.0;
  p.eq.resize(2, 1);
  p.eq.insert(0, 0) = 1.0;
  p.eq.insert(1, 0) = 1.0;
  p.eq_rhs = Vec(2);
  p.eq_rhs << 1.0, 2.0;
  p.lower(0) = 0.0;
  p.upper(0) = 10.0;
  CHECK(solve(p).status == SolveStatus::infeasible);
}

TEST_CASE("crossing bounds are infeasible") {
  ConicProblem p = ConicProblem::make(1);
  p.quadratic.insert(0, 0) = 2.0;
  p.lower(0) = 3.0;
  p.upper(0) = 1.0;
  CHECK(solve(p).status == SolveStatus::infeasible);
}

TEST_CASE("downhill ray is unbounded") {
  ConicProblem p = ConicProblem::make(1);
  p.linear(0) = 1.0;
  p.upper(0) = 5.0;
  CHECK(solve(p).status == SolveStatus::unbounded);
}

TEST_CASE("active-set oracle agrees with full enumeration on small QPs") {
  std::mt19937 rng(101);
  for (int trial = 0; trial < 25; ++trial) {
    int n = 1 + static_cast<int>(rng() % 6);
    auto qp = redopt::test::random_box_qp(rng, n);
    Vec a = redopt::test::box_qp_active_set(qp.q, qp.c, qp.lb, qp.ub);
    Vec e = redopt::test::box_qp_enumerate(qp.q, qp.c, qp.lb, qp.ub);
    CHECK((a - e).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("interior point matches the active-set oracle on random box QPs") {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    int n = 2 + static_cast<int>(rng() % 11);
    auto qp = redopt::test::random_box_qp(rng, n);
    SolveReport r = solve(dense_box_qp(qp.q, qp.c, qp.lb, qp.ub));
    REQUIRE(r.status == SolveStatus::optimal);
    Vec oracle = redopt::test::box_qp_active_set(qp.q, qp.c, qp.lb, qp.ub);
    CHECK((r.solution - oracle).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("objective never decreases when constraints are appended") {
  std::mt19937 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    int n = 4 + static_cast<int>(rng() % 5);
    auto qp = redopt::test::random_box_qp(rng, n);
    ConicProblem p = dense_box_qp(qp.q, qp.c, qp.lb, qp.ub);
    SolveReport base = solve(p);
    REQUIRE(base.status == SolveStatus::optimal);
    double prev = base.objective;
    for (int add = 0; add < 4; ++add) {
      // random halfspace through a shrinking neighborhood of the optimum
      SocConstraint cut;
      cut.a.resize(0, n);
      cut.b.resize(0);
      cut.c.resize(n);
      Vec dir(n);
      for (Eigen::Index i = 0; i < n; ++i) dir(i) = g(rng);
      for (Eigen::Index i = 0; i < n; ++i) cut.c.coeffRef(i) = dir(i);
      cut.d = -dir.dot(base.solution) + 0.3 * static_cast<double>(add);
      p.cones.push_back(cut);
      SolveReport r = solve(p);
      if (r.status != SolveStatus::optimal) break;
      CHECK(r.objective >= prev - 1e-7);
      prev = r.objective;
    }
  }
}

TEST_CASE("projection onto a shifted ball, closed form") {
  // min ||x - p||^2 s.t. ||x|| <= 1 with ||p|| > 1  ->  x = p/||p||
  const int n = 4;
  Vec target(n);
  target << 2.0, -1.0, 0.5, 1.5;
  ConicProblem p = ConicProblem::make(n);
  for (int i = 0; i < n; ++i) p.quadratic.insert(i, i) = 2.0;
  p.linear = -2.0 * target;
  SocConstraint ball;
  ball.a.resize(n, n);
  for (int i = 0; i < n; ++i) ball.a.insert(i, i) = 1.0;
  ball.b = Vec::Zero(n);
  ball.c.resize(n);
  ball.d = 1.0;
  p.cones.push_back(ball);
  SolveReport r = solve(p);
  REQUIRE(r.status == SolveStatus::optimal);
  Vec expected = target / target.norm();
  CHECK((r.solution - expected).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("optimal status implies small residuals") {
  std::mt19937 rng(55);
  auto qp = redopt::test::random_box_qp(rng, 8);
  SolveOptions opts;
  opts.tol = 1e-8;
  SolveReport r = solve(dense_box_qp(qp.q, qp.c, qp.lb, qp.ub), opts);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.primal_residual <= opts.tol);
  CHECK(r.dual_residual <= opts.tol);
}

TEST_CASE("deterministic given identical inputs") {
  std::mt19937 rng(77);
  auto qp = redopt::test::random_box_qp(rng, 10);
  SolveReport a = solve(dense_box_qp(qp.q, qp.c, qp.lb, qp.ub));
  SolveReport b = solve(dense_box_qp(qp.q, qp.c, qp.lb, qp.ub));
  CHECK((a.solution - b.solution).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.iterations == b.iterations);
}
