#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "redopt/network.hpp"

namespace redopt {

struct ForecastRecord {
  std::string res_id;
  int bus = 0;
  ResKind kind = ResKind::wind;
  double mu = 0.0;  // MW
  double q5 = 0.0;  // MW
  double q95 = 0.0; // MW
  double lo = 0.0;  // support lower end a, MW
  double hi = 0.0;  // support upper end b, MW
};

// Either per-kind defaults or a full |R| x |R| matrix.
struct CorrelationSpec {
  std::optional<Mat> matrix;
  double solar_solar = 0.85;
  double wind_wind = 0.6;
  double cross = 0.0;
};

// Options applied while converting Matpower tables into a Network.
struct CaseOptions {
  double default_flow_limit = 240.0; // replaces zero/absent rateA [MW]
  double ramp_up_frac = 0.4;         // ramp-up bound as fraction of p_max
  double ramp_down_frac = 0.6;       // ramp-down bound as fraction of p_max
  double min_quad_cost = 1e-3;       // floor on g2 so costs stay strictly convex
};

// Matpower .m subset: mpc.baseMVA, mpc.bus, mpc.branch, mpc.gen,
// mpc.gencost. Throws ParseError / ValidationError.
Network parse_case(const std::string& text, const CaseOptions& opts = {});

// Inverse of parse_case for the supported subset (used for round-trip
// tests and dataset tooling).
std::string emit_case(const Network& net, const CaseOptions& opts = {});

// CSV with header res_id,bus,kind,mu,q5,q95,a,b.
std::vector<ForecastRecord> parse_forecasts(const std::string& text);

// Correlation file: either "kind_defaults: solar=0.85 wind=0.6 cross=0.0"
// or a dense CSV matrix.
CorrelationSpec parse_correlation_spec(const std::string& text);

// Expands a spec to the full symmetric matrix in record order and verifies
// positive semidefiniteness (eigenvalue check with tolerance). Throws NotPSD.
Mat assemble_correlation(const CorrelationSpec& spec,
                         const std::vector<ForecastRecord>& records);

// Named branch-limit profile: JSON {"default_mw": x, "overrides":
// [{"from":i,"to":j,"limit_mw":v}, ...]}. Overrides match branches by bus
// pair in either orientation and apply to all parallel branches of the pair.
void apply_limit_profile(Network& net, const std::string& json_text);

// Attaches RES units to a network from forecast records. curtail_max is
// curtail_frac * mu; r2/r1 are the curtailment cost coefficients.
void attach_res_units(Network& net, const std::vector<ForecastRecord>& records,
                      double curtail_frac, double r2, double r1);

}  // namespace redopt
