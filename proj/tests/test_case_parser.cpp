#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "redopt/case_parser.hpp"
#include "redopt/errors.hpp"
#include "redopt/util.hpp"
#include "test_helpers.hpp"

using namespace redopt;

namespace {

const char* kTinyCase = R"(function mpc = tiny
mpc.version = '2';
mpc.baseMVA = 100;
% two buses, one line
mpc.bus = [
  1 3 0   0 0 0 1 1 0 138 1 1.06 0.94;
  2 1 90  0 0 0 1 1 0 138 1 1.06 0.94;
];
mpc.gen = [
  1 90 0 30 -30 1 100 1 200 0;
];
mpc.branch = [
  1 2 0.01 0.05 0 130 0 0 0 0 1;
];
mpc.gencost = [
  2 0 0 3 0.02 17 0;
];
)";

ForecastRecord record(const std::string& id, int bus, ResKind kind, double mu,
                      double q5, double q95, double a, double b) {
  ForecastRecord r;
  r.res_id = id;
  r.bus = bus;
  r.kind = kind;
  r.mu = mu;
  r.q5 = q5;
  r.q95 = q95;
  r.lo = a;
  r.hi = b;
  return r;
}

}  // namespace

TEST_CASE("tiny case parses") {
  Network net = parse_case(kTinyCase);
  CHECK(net.n_buses() == 2);
  CHECK(net.n_branches() == 1);
  CHECK(net.generators.size() == 1);
  CHECK(net.demands.size() == 1);
  CHECK(net.slack_bus == 1);
  CHECK(net.base_mva == 100.0);
  CHECK(net.branches[0].reactance == doctest::Approx(0.05));
  CHECK(net.branches[0].flow_limit == doctest::Approx(130.0));
  const auto& g = net.generators[0];
  CHECK(g.p_start == doctest::Approx(90.0));
  CHECK(g.p_max == doctest::Approx(200.0));
  CHECK(g.ramp_up_max == doctest::Approx(80.0));   // 40 % of p_max
  CHECK(g.ramp_down_max == doctest::Approx(120.0)); // 60 % of p_max
  CHECK(g.g2_up == doctest::Approx(0.02));
  CHECK(g.g1_up == doctest::Approx(17.0));
}

TEST_CASE("emit then parse round-trips the supported subset") {
  capture_warnings(true);
  Network net = parse_case(kTinyCase);
  Network back = parse_case(emit_case(net));
  capture_warnings(false);
  CHECK(back.buses == net.buses);
  REQUIRE(back.n_branches() == net.n_branches());
  for (std::size_t e = 0; e < net.n_branches(); ++e) {
    CHECK(back.branches[e].from_bus == net.branches[e].from_bus);
    CHECK(back.branches[e].to_bus == net.branches[e].to_bus);
    CHECK(back.branches[e].reactance == net.branches[e].reactance);
    CHECK(back.branches[e].flow_limit == net.branches[e].flow_limit);
  }
  REQUIRE(back.generators.size() == net.generators.size());
  for (std::size_t i = 0; i < net.generators.size(); ++i) {
    CHECK(back.generators[i].bus == net.generators[i].bus);
    CHECK(back.generators[i].p_start == net.generators[i].p_start);
    CHECK(back.generators[i].p_max == net.generators[i].p_max);
    CHECK(back.generators[i].g2_up == net.generators[i].g2_up);
    CHECK(back.generators[i].g1_up == net.generators[i].g1_up);
  }
  REQUIRE(back.demands.size() == net.demands.size());
  CHECK(back.demands[0].bus == net.demands[0].bus);
  CHECK(back.demands[0].p == net.demands[0].p);
  CHECK(back.slack_bus == net.slack_bus);
}

TEST_CASE("gencost row count must match gen row count") {
  std::string text = kTinyCase;
  auto pos = text.find("2 0 0 3 0.02 17 0;");
  text.insert(pos + 19, "\n  2 0 0 3 0.01 20 0;");
  CHECK_THROWS_AS(parse_case(text), ParseError);
}

TEST_CASE("parse errors carry positions") {
  try {
    parse_case("mpc.bus = [ 1 2 @ ];");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 1);
    CHECK(e.column > 1);
  }
}

TEST_CASE("zero rateA takes the configured default") {
  std::string text = kTinyCase;
  auto pos = text.find("0.05 0 130");
  text.replace(pos, 10, "0.05 0 0  ");
  CaseOptions opts;
  opts.default_flow_limit = 240.0;
  Network net = parse_case(text, opts);
  CHECK(net.branches[0].flow_limit == doctest::Approx(240.0));
}

TEST_CASE("nonpositive reactance is rejected") {
  std::string text = kTinyCase;
  auto pos = text.find("0.01 0.05");
  text.replace(pos, 9, "0.01 -0.1");
  CHECK_THROWS_AS(parse_case(text), ValidationError);
}

TEST_CASE("reference 118-bus case matches the published shape") {
  Network net = parse_case(redopt::test::read_data_file("case118.m"));
  CHECK(net.n_buses() == 118);
  CHECK(net.n_branches() == 186);
  CHECK(net.generators.size() == 54);
  CHECK(net.demands.size() == 99);
  CHECK(net.slack_bus == 69);
  PtdfMatrix ptdf = compute_ptdf(net);
  CHECK(ptdf.values.rows() == 186);
  CHECK(ptdf.values.cols() == 118);
}

TEST_CASE("forecast csv parses and validates") {
  SUBCASE("reference file has the published unit mix") {
    auto recs = parse_forecasts(redopt::test::read_data_file("forecasts118.csv"));
    CHECK(recs.size() == 24);
    int wind = 0;
    for (const auto& r : recs) wind += r.kind == ResKind::wind;
    CHECK(wind == 7);
    // the two largest units per the published description
    CHECK(recs[2].bus == 54);
    CHECK(recs[2].mu == doctest::Approx(50.0));
    CHECK(recs[4].bus == 71);
    CHECK(recs[4].mu == doctest::Approx(40.0));
  }
  SUBCASE("q5 above q95 is rejected") {
    CHECK_THROWS_AS(
        parse_forecasts("res_id,bus,kind,mu,q5,q95,a,b\nw,1,wind,10,12,8,0,20\n"),
        ValidationError);
  }
  SUBCASE("symmetric record is accepted") {
    auto recs = parse_forecasts(
        "res_id,bus,kind,mu,q5,q95,a,b\nw,1,wind,10,6,14,0,20\n");
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].mu == doctest::Approx(10.0));
  }
  SUBCASE("support must contain the quantiles") {
    CHECK_THROWS_AS(
        parse_forecasts("res_id,bus,kind,mu,q5,q95,a,b\nw,1,wind,10,6,25,0,20\n"),
        ValidationError);
  }
}

TEST_CASE("correlation assembly") {
  std::vector<ForecastRecord> recs = {
      record("s1", 1, ResKind::solar, 10, 8, 12, 0, 20),
      record("s2", 2, ResKind::solar, 10, 8, 12, 0, 20),
      record("w1", 3, ResKind::wind, 10, 8, 12, 0, 20),
  };

  SUBCASE("per-kind defaults expand to the published pattern") {
    CorrelationSpec spec; // 0.85 / 0.6 / 0
    Mat e = assemble_correlation(spec, recs);
    Mat expected(3, 3);
    expected << 1, 0.85, 0, 0.85, 1, 0, 0, 0, 1;
    CHECK((e - expected).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  }
  SUBCASE("identity spec") {
    CorrelationSpec spec;
    spec.solar_solar = 0.0;
    spec.wind_wind = 0.0;
    spec.cross = 0.0;
    Mat e = assemble_correlation(spec, recs);
    CHECK((e - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("near-unit correlations pass the PSD check") {
    CorrelationSpec spec;
    spec.matrix = Mat::Constant(24, 24, 0.999);
    spec.matrix->diagonal().setOnes();
    std::vector<ForecastRecord> many;
    for (int i = 0; i < 24; ++i)
      many.push_back(record("u" + std::to_string(i), i + 1, ResKind::solar, 10,
                            8, 12, 0, 20));
    Mat e = assemble_correlation(spec, many);
    Eigen::SelfAdjointEigenSolver<Mat> eig(e, Eigen::EigenvaluesOnly);
    CHECK(eig.eigenvalues().minCoeff() > -1e-10);
  }
  SUBCASE("constant-one matrix is semidefinite and accepted") {
    CorrelationSpec spec;
    spec.matrix = Mat::Constant(3, 3, 1.0);
    CHECK_NOTHROW(assemble_correlation(spec, recs));
  }
  SUBCASE("an indefinite matrix is rejected") {
    Mat bad(3, 3);
    bad << 1, 0.9, -0.9, 0.9, 1, 0.9, -0.9, 0.9, 1;
    CorrelationSpec spec;
    spec.matrix = bad;
    CHECK_THROWS_AS(assemble_correlation(spec, recs), NotPSD);
  }
  SUBCASE("kind_defaults text form") {
    CorrelationSpec spec =
        parse_correlation_spec("kind_defaults: solar=0.85 wind=0.6 cross=0.0\n");
    CHECK(spec.solar_solar == doctest::Approx(0.85));
    CHECK(spec.wind_wind == doctest::Approx(0.6));
    CHECK(spec.cross == doctest::Approx(0.0));
  }
  SUBCASE("dense csv form") {
    CorrelationSpec spec = parse_correlation_spec("1,0.5\n0.5,1\n");
    REQUIRE(spec.matrix);
    CHECK((*spec.matrix)(0, 1) == doctest::Approx(0.5));
  }
}

TEST_CASE("limit profile applies defaults and overrides") {
  Network net = redopt::test::three_bus_ring();
  apply_limit_profile(net, R"({"default_mw": 240,
    "overrides": [{"from": 2, "to": 1, "limit_mw": 300}]})");
  CHECK(net.branches[0].flow_limit == doctest::Approx(300.0)); // (1,2) reversed
  CHECK(net.branches[1].flow_limit == doctest::Approx(240.0));
  CHECK(net.branches[2].flow_limit == doctest::Approx(240.0));
}

TEST_CASE("attach_res_units builds curtailment bounds from the mean") {
  Network net = redopt::test::three_bus_ring();
  auto recs = std::vector<ForecastRecord>{
      record("w", 3, ResKind::wind, 40, 30, 50, 0, 80)};
  attach_res_units(net, recs, 0.2, 0.02, 60.0);
  REQUIRE(net.res_units.size() == 1);
  CHECK(net.res_units[0].curtail_max == doctest::Approx(8.0));
  CHECK(net.res_units[0].bus == 3);
}
