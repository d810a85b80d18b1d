#include <doctest.h>

#include <random>

#include "redopt/cbco.hpp"
#include "redopt/errors.hpp"
#include "redopt/redispatch_det.hpp"
#include "test_helpers.hpp"

using namespace redopt;

namespace {

// Two buses, three generators: unit a exports from bus 1 toward the load
// at bus 2; units b and c sit at bus 2 as counterparties.
Network split_network(double limit, double g2a, double g2b, double g2c) {
  Network net;
  net.buses = {1, 2};
  net.branches = {{1, 2, 0.1, limit}};
  net.generators = {
      {1, 100.0, 400.0, 200.0, 200.0, g2a, 0.0, g2a, 0.0},
      {2, 0.0, 100.0, 100.0, 100.0, g2b, 0.0, g2b, 0.0},
      {2, 0.0, 100.0, 100.0, 100.0, g2c, 0.0, g2c, 0.0},
  };
  net.demands = {{2, 100.0}};
  net.slack_bus = 1;
  net.validate();
  return net;
}

}  // namespace

TEST_CASE("uncongested base needs no adjustment") {
  Network net = split_network(500.0, 1.0, 1.0, 1.0);
  OutageScreener screener(net);
  Vec base(3);
  base << 100.0, 0.0, 0.0;
  Vec res(0), demand(1);
  demand << 100.0;
  DetSolution sol = solve_det(net, screener, base, res, demand, {});
  REQUIRE(sol.report.status == SolveStatus::optimal);
  CHECK(sol.p_up.cwiseAbs().maxCoeff() < 1e-7);
  CHECK(sol.p_down.cwiseAbs().maxCoeff() < 1e-7);
  CHECK(sol.objective == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("congested line: KKT split between two counterparties") {
  const double g2a = 1.0, g2b = 2.0, g2c = 0.5;
  Network net = split_network(80.0, g2a, g2b, g2c);
  OutageScreener screener(net);
  Vec base(3);
  base << 100.0, 0.0, 0.0;
  Vec res(0), demand(1);
  demand << 100.0;
  DetSolution sol = solve_det(net, screener, base, res, demand, {});
  REQUIRE(sol.report.status == SolveStatus::optimal);

  // the overload (20 MW) comes off unit a; the counterparties split it
  // inversely to their quadratic costs: y = 20 gc/(gb+gc), z = 20 gb/(gb+gc)
  double y = 20.0 * g2c / (g2b + g2c);
  double z = 20.0 * g2b / (g2b + g2c);
  CHECK(sol.p_down(0) == doctest::Approx(20.0).epsilon(1e-6));
  CHECK(sol.p_up(1) == doctest::Approx(y).epsilon(1e-6));
  CHECK(sol.p_up(2) == doctest::Approx(z).epsilon(1e-6));
  double expected_cost = g2a * 400.0 + g2b * y * y + g2c * z * z;
  CHECK(sol.objective == doctest::Approx(expected_cost).epsilon(1e-6));
}

TEST_CASE("objective recomputation matches the solver objective") {
  Network net = split_network(80.0, 1.0, 2.0, 0.5);
  OutageScreener screener(net);
  Vec base(3);
  base << 100.0, 0.0, 0.0;
  Vec res(0), demand(1);
  demand << 100.0;
  DetSolution sol = solve_det(net, screener, base, res, demand, {});
  CHECK(sol.objective == doctest::Approx(sol.report.objective).epsilon(1e-6));
}

TEST_CASE("vanishing limit on the only path is infeasible") {
  Network net = split_network(1.0, 1.0, 1.0, 1.0);
  // counterparties too small to absorb the transfer
  net.generators[1].ramp_up_max = 10.0;
  net.generators[2].ramp_up_max = 10.0;
  OutageScreener screener(net);
  Vec base(3);
  base << 100.0, 0.0, 0.0;
  Vec res(0), demand(1);
  demand << 100.0;
  DetSolution sol = solve_det(net, screener, base, res, demand, {});
  CHECK(sol.report.status == SolveStatus::infeasible);

  std::string diag =
      diagnose_infeasibility(net, screener, base, res, demand, {});
  CHECK(diag.find("(1,2)") != std::string::npos);
}

TEST_CASE("unbalanced base schedule is rejected") {
  Network net = split_network(500.0, 1.0, 1.0, 1.0);
  OutageScreener screener(net);
  Vec base(3);
  base << 120.0, 0.0, 0.0; // 20 MW surplus
  Vec res(0), demand(1);
  demand << 100.0;
  CHECK_THROWS_AS(
      build_det_problem(net, screener, base, res, demand, {}, {}),
      Unbalanced);
}

TEST_CASE("no generator ramps both directions at an optimum") {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 8; ++trial) {
    Network net = split_network(60.0 + 40.0 * u(rng), 0.5 + u(rng),
                                0.5 + u(rng), 0.5 + u(rng));
    for (auto& g : net.generators) {
      g.g1_up = 1.0 + u(rng);
      g.g1_down = 1.0 + u(rng);
    }
    OutageScreener screener(net);
    Vec base(3);
    base << 100.0, 0.0, 0.0;
    Vec res(0), demand(1);
    demand << 100.0;
    DetSolution sol = solve_det(net, screener, base, res, demand, {});
    REQUIRE(sol.report.status == SolveStatus::optimal);
    for (Eigen::Index i = 0; i < 3; ++i)
      CHECK((sol.p_up(i) < 1e-6 || sol.p_down(i) < 1e-6));
  }
}

TEST_CASE("interval screening does not change the optimum") {
  Network net = redopt::test::three_bus_ring(120.0);
  net.generators.push_back({3, 0.0, 100.0, 100.0, 100.0, 0.7, 2.0, 0.7, 2.0});
  net.validate();
  OutageScreener screener(net);
  Vec base(2);
  base << 100.0, 0.0;
  Vec res(0), demand(1);
  demand << 100.0;

  DetProblemOptions with, without;
  with.screen_inactive = true;
  without.screen_inactive = false;
  DetSolution a = solve_det(net, screener, base, res, demand, {}, with);
  DetSolution b = solve_det(net, screener, base, res, demand, {}, without);
  REQUIRE(a.report.status == SolveStatus::optimal);
  REQUIRE(b.report.status == SolveStatus::optimal);
  CHECK((a.p_up - b.p_up).cwiseAbs().maxCoeff() < 1e-7);
  CHECK((a.p_down - b.p_down).cwiseAbs().maxCoeff() < 1e-7);
  CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-8));
}

TEST_CASE("appended outage constraint binds the post-outage flow") {
  // 90 MW import into bus 1 over two parallel circuits; losing one puts
  // the whole transfer on the other, so local generation must step in
  Network net;
  net.buses = {1, 2};
  net.branches = {{1, 2, 0.1, 80.0}, {1, 2, 0.2, 80.0}};
  net.generators = {{2, 90.0, 200.0, 100.0, 100.0, 0.5, 0.0, 0.5, 0.0},
                    {1, 0.0, 100.0, 100.0, 100.0, 0.5, 0.0, 0.5, 0.0}};
  net.demands = {{1, 90.0}};
  net.slack_bus = 1;
  net.validate();
  OutageScreener screener(net);
  Vec base(2);
  base << 90.0, 0.0;
  Vec res(0), demand(1);
  demand << 90.0;

  DetSolution plain = solve_det(net, screener, base, res, demand, {});
  REQUIRE(plain.report.status == SolveStatus::optimal);
  CHECK(plain.objective == doctest::Approx(0.0).epsilon(1e-8));

  std::vector<OutageConstraint> extra = {{1, 0}}; // outage of the twin
  DetSolution secured = solve_det(net, screener, base, res, demand, extra);
  REQUIRE(secured.report.status == SolveStatus::optimal);
  CHECK(secured.objective > plain.objective + 1e-6);
  // transfer must drop to the 80 MW limit: 10 MW moves to the local unit
  CHECK(secured.p_down(0) == doctest::Approx(10.0).epsilon(1e-6));
  CHECK(secured.p_up(1) == doctest::Approx(10.0).epsilon(1e-6));

  Vec flows = screener.ptdf().values *
              net_injection(secured.p_gen, secured.p_res, demand,
                            screener.maps());
  Vec post = screener.outage_flows(flows, 1);
  CHECK(std::abs(post(0)) <= 80.0 + 1e-6);
}
