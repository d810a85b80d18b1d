#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace redopt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class ResKind { wind, solar };

struct Branch {
  int from_bus = 0;        // external bus id
  int to_bus = 0;          // external bus id
  double reactance = 0.0;  // p.u., > 0 (tap folded in)
  double flow_limit = 0.0; // MW, > 0
};

struct Generator {
  int bus = 0;
  double p_start = 0.0;       // MW, dispatch from the case file
  double p_max = 0.0;         // MW
  double ramp_up_max = 0.0;   // MW, bound on upward redispatch
  double ramp_down_max = 0.0; // MW, bound on downward redispatch
  double g2_up = 0.0;         // quadratic cost coefficients, up/down
  double g1_up = 0.0;
  double g2_down = 0.0;
  double g1_down = 0.0;
};

struct ResUnit {
  int bus = 0;
  ResKind kind = ResKind::wind;
  double curtail_max = 0.0; // MW
  double r2 = 0.0;          // curtailment cost coefficients
  double r1 = 0.0;
};

struct Demand {
  int bus = 0;
  double p = 0.0; // MW
};

// Column-per-unit bus incidence matrices (each column has exactly one 1).
struct IncidenceMaps {
  Mat gen;    // |N| x |G|
  Mat res;    // |N| x |R|
  Mat demand; // |N| x |D|
};

// Static network model. Immutable after validate(); safe to share across
// threads.
struct Network {
  std::vector<int> buses; // external ids, ordered
  std::vector<Branch> branches;
  std::vector<Generator> generators;
  std::vector<ResUnit> res_units;
  std::vector<Demand> demands;
  int slack_bus = 0;
  double base_mva = 100.0;

  std::size_t n_buses() const { return buses.size(); }
  std::size_t n_branches() const { return branches.size(); }

  // 0-based index of an external bus id; throws ValidationError if unknown.
  int bus_index(int bus_id) const;
  int slack_index() const { return bus_index(slack_bus); }

  IncidenceMaps incidence() const;

  // Checks all structural invariants (positive reactances and limits,
  // existing bus references, from != to, connectivity) and freezes the
  // bus-id lookup. Throws ValidationError.
  void validate();

  // True if removing branch `b` disconnects the network.
  bool is_bridge(std::size_t branch_idx) const;

private:
  std::unordered_map<int, int> bus_lookup_;
  bool connected_without(std::size_t skip_branch) const;
};

// Branch-by-bus sensitivity matrix [MW per MW injected, balanced at the
// slack bus]. Row order matches `rows`; the slack column is zero.
struct PtdfMatrix {
  std::vector<int> rows; // branch indices into network.branches
  Mat values;            // rows x |N|
  std::optional<int> outage; // removed branch index, if any
};

// Intact-topology PTDF. One factorization of the reduced susceptance
// matrix is reused for all columns. Throws SingularTopology.
PtdfMatrix compute_ptdf(const Network& net);

// Post-outage PTDF via the line-outage-distribution-factor rank-1 update
// of a precomputed intact PTDF. Throws IslandingOutage for bridges.
PtdfMatrix compute_outage_ptdf(const Network& net, const PtdfMatrix& intact,
                               int outage_branch);
PtdfMatrix compute_outage_ptdf(const Network& net, int outage_branch);

// C_G p_G + C_R p_R - C_D p_D. Throws DimensionMismatch.
Vec net_injection(const Vec& p_gen, const Vec& p_res, const Vec& p_demand,
                  const IncidenceMaps& maps);

// Precomputed contingency machinery shared by CBCO analyses and the MC
// baseline: intact PTDF, one LODF column per non-bridge branch, bridge
// flags.
class OutageScreener {
public:
  explicit OutageScreener(const Network& net);

  const PtdfMatrix& ptdf() const { return ptdf_; }
  const std::vector<bool>& bridge() const { return bridge_; }
  // LODF column for outage k: post-outage flow on l is
  // f_l + lodf(l,k) * f_k. Column is zero for bridges.
  const Mat& lodf() const { return lodf_; }
  const IncidenceMaps& maps() const { return maps_; }
  // PTDF composed with the unit incidence maps, cached once since problem
  // builders and the MC loop need them per solve.
  const Mat& gen_sens() const { return gen_sens_; }
  const Mat& res_sens() const { return res_sens_; }

  // Flows on all remaining branches after outage of branch k, given intact
  // flows. Result is |E|-1 entries ordered like the intact branch list with
  // k removed.
  Vec outage_flows(const Vec& intact_flows, int k) const;

private:
  PtdfMatrix ptdf_;
  std::vector<bool> bridge_;
  Mat lodf_;
  IncidenceMaps maps_;
  Mat gen_sens_;
  Mat res_sens_;
};

}  // namespace redopt
