#include <doctest.h>

#include <random>

#include "redopt/case_parser.hpp"
#include "redopt/errors.hpp"
#include "redopt/network.hpp"
#include "test_helpers.hpp"

using namespace redopt;
using redopt::test::three_bus_ring;
using redopt::test::two_bus;

TEST_CASE("ptdf of a single line") {
  Network net = two_bus(100.0);
  PtdfMatrix ptdf = compute_ptdf(net);
  REQUIRE(ptdf.values.rows() == 1);
  // 1 MW injected at bus 2 flows entirely from 2 toward 1
  CHECK(ptdf.values(0, 0) == doctest::Approx(0.0));
  CHECK(ptdf.values(0, 1) == doctest::Approx(-1.0));
}

TEST_CASE("ptdf of the equal-reactance ring") {
  Network net = three_bus_ring();
  PtdfMatrix ptdf = compute_ptdf(net);
  // 2x2 reduced susceptance system solved by hand: injection at bus 2
  CHECK(ptdf.values(0, 1) == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
  CHECK(ptdf.values(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(ptdf.values(2, 1) == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("outage ptdf on the ring against the hand chain solution") {
  Network net = three_bus_ring();
  PtdfMatrix out = compute_outage_ptdf(net, 2); // remove (1,3)
  REQUIRE(out.values.rows() == 2);
  // remaining series path 1-2-3: injection at bus 3 flows fully along it
  CHECK(out.values(0, 2) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(out.values(1, 2) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(out.rows == std::vector<int>{0, 1});
}

TEST_CASE("bridge outage in a radial chain islands the network") {
  Network net;
  net.buses = {1, 2, 3};
  net.branches = {{1, 2, 0.1, 100.0}, {2, 3, 0.1, 100.0}};
  net.slack_bus = 1;
  net.validate();
  CHECK(net.is_bridge(0));
  CHECK_THROWS_AS(compute_outage_ptdf(net, 0), IslandingOutage);
}

TEST_CASE("net injection incidence") {
  Network net = three_bus_ring();
  IncidenceMaps maps = net.incidence();
  Vec pg = Vec::Zero(1), pr(0), pd = Vec::Zero(1);

  SUBCASE("all zero") {
    Vec u = net_injection(pg, pr, pd, maps);
    CHECK(u.norm() == 0.0);
  }
  SUBCASE("single generator") {
    pg(0) = 10.0;
    Vec u = net_injection(pg, pr, pd, maps);
    CHECK(u(1) == doctest::Approx(10.0)); // generator sits at bus 2
    CHECK(u(0) == 0.0);
    CHECK(u(2) == 0.0);
  }
  SUBCASE("balanced case sums to zero") {
    pg(0) = 100.0;
    pd(0) = 100.0;
    Vec u = net_injection(pg, pr, pd, maps);
    CHECK(u.sum() == doctest::Approx(0.0));
  }
  SUBCASE("dimension mismatch") {
    Vec bad = Vec::Zero(2);
    CHECK_THROWS_AS(net_injection(bad, pr, pd, maps), DimensionMismatch);
  }
}

TEST_CASE("disconnected graph is rejected") {
  Network net;
  net.buses = {1, 2, 3, 4};
  net.branches = {{1, 2, 0.1, 100.0}, {3, 4, 0.1, 100.0}};
  net.slack_bus = 1;
  CHECK_THROWS_AS(net.validate(), ValidationError);
}

namespace {

// Random connected test network: a spanning tree plus extra chords.
Network random_network(std::mt19937& rng, int n_buses, int n_extra) {
  std::uniform_real_distribution<double> x_dist(0.02, 0.3);
  std::uniform_int_distribution<int> bus_dist(1, n_buses);
  Network net;
  for (int b = 1; b <= n_buses; ++b) net.buses.push_back(b);
  for (int b = 2; b <= n_buses; ++b) {
    std::uniform_int_distribution<int> parent(1, b - 1);
    net.branches.push_back({parent(rng), b, x_dist(rng), 500.0});
  }
  for (int e = 0; e < n_extra; ++e) {
    int i = bus_dist(rng), j = bus_dist(rng);
    if (i == j) continue;
    net.branches.push_back({i, j, x_dist(rng), 500.0});
  }
  net.slack_bus = 1;
  net.validate();
  return net;
}

Vec random_balanced_injection(std::mt19937& rng, Eigen::Index n) {
  std::normal_distribution<double> g(0.0, 50.0);
  Vec u(n);
  for (Eigen::Index i = 0; i < n; ++i) u(i) = g(rng);
  u.array() -= u.mean();
  return u;
}

}  // namespace

TEST_CASE("nodal balance of ptdf flows over random networks") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 12; ++trial) {
    Network net = random_network(rng, 14, 8);
    PtdfMatrix ptdf = compute_ptdf(net);
    Vec u = random_balanced_injection(rng, static_cast<Eigen::Index>(net.n_buses()));
    Vec f = ptdf.values * u;
    // at every bus the signed sum of incident flows equals the injection
    Vec residual = -u;
    for (std::size_t e = 0; e < net.n_branches(); ++e) {
      residual(net.bus_index(net.branches[e].from_bus)) += f(static_cast<Eigen::Index>(e));
      residual(net.bus_index(net.branches[e].to_bus)) -= f(static_cast<Eigen::Index>(e));
    }
    CHECK(residual.cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("ptdf flows are slack-invariant on balanced injections") {
  std::mt19937 rng(11);
  Network net = random_network(rng, 12, 6);
  Vec u = random_balanced_injection(rng, static_cast<Eigen::Index>(net.n_buses()));
  PtdfMatrix a = compute_ptdf(net);
  net.slack_bus = 7;
  PtdfMatrix b = compute_ptdf(net);
  CHECK(((a.values - b.values) * u).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("lodf update equals full recompute on the reduced topology") {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 6; ++trial) {
    Network net = random_network(rng, 12, 7);
    PtdfMatrix intact = compute_ptdf(net);
    for (std::size_t k = 0; k < net.n_branches(); ++k) {
      if (net.is_bridge(k)) continue;
      PtdfMatrix updated = compute_outage_ptdf(net, intact, static_cast<int>(k));

      Network reduced = net;
      reduced.branches.erase(reduced.branches.begin() +
                             static_cast<std::ptrdiff_t>(k));
      reduced.validate();
      PtdfMatrix recomputed = compute_ptdf(reduced);
      CHECK((updated.values - recomputed.values).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("outage screener matches compute_outage_ptdf flows") {
  std::mt19937 rng(5);
  Network net = random_network(rng, 10, 6);
  OutageScreener screener(net);
  Vec u = random_balanced_injection(rng, static_cast<Eigen::Index>(net.n_buses()));
  Vec f = screener.ptdf().values * u;
  for (std::size_t k = 0; k < net.n_branches(); ++k) {
    if (screener.bridge()[k]) continue;
    Vec via_lodf = screener.outage_flows(f, static_cast<int>(k));
    Vec via_ptdf = compute_outage_ptdf(net, static_cast<int>(k)).values * u;
    CHECK((via_lodf - via_ptdf).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("parallel branches stay distinct") {
  Network net;
  net.buses = {1, 2, 3};
  net.branches = {{1, 2, 0.1, 100.0}, {1, 2, 0.2, 80.0}, {2, 3, 0.1, 100.0}};
  net.slack_bus = 1;
  net.validate();
  CHECK(net.n_branches() == 3);
  CHECK_FALSE(net.is_bridge(0)); // the parallel twin keeps it connected
  CHECK(net.is_bridge(2));
  PtdfMatrix out = compute_outage_ptdf(net, 0);
  REQUIRE(out.rows == std::vector<int>{1, 2});
  // all transfer 1->2 moves to the twin
  CHECK(out.values(0, 1) == doctest::Approx(-1.0));
}
