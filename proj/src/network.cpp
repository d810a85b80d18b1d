#include "redopt/network.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <queue>

#include "redopt/errors.hpp"

namespace redopt {

int Network::bus_index(int bus_id) const {
  auto it = bus_lookup_.find(bus_id);
  if (it == bus_lookup_.end())
    throw ValidationError("unknown bus id " + std::to_string(bus_id));
  return it->second;
}

void Network::validate() {
  bus_lookup_.clear();
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (!bus_lookup_.emplace(buses[i], static_cast<int>(i)).second)
      throw ValidationError("duplicate bus id " + std::to_string(buses[i]));
  }
  if (buses.empty()) throw ValidationError("network has no buses");
  bus_index(slack_bus);
  for (const auto& br : branches) {
    if (br.reactance <= 0.0)
      throw ValidationError("branch (" + std::to_string(br.from_bus) + "," +
                            std::to_string(br.to_bus) +
                            ") has non-positive reactance");
    if (br.flow_limit <= 0.0)
      throw ValidationError("branch (" + std::to_string(br.from_bus) + "," +
                            std::to_string(br.to_bus) +
                            ") has non-positive flow limit");
    if (br.from_bus == br.to_bus)
      throw ValidationError("self-loop at bus " + std::to_string(br.from_bus));
    bus_index(br.from_bus);
    bus_index(br.to_bus);
  }
  for (const auto& g : generators) {
    bus_index(g.bus);
    if (g.p_max < 0 || g.ramp_up_max < 0 || g.ramp_down_max < 0)
      throw ValidationError("negative generator bound at bus " +
                            std::to_string(g.bus));
  }
  for (const auto& r : res_units) {
    bus_index(r.bus);
    if (r.curtail_max < 0)
      throw ValidationError("negative curtailment bound at bus " +
                            std::to_string(r.bus));
  }
  for (const auto& d : demands) bus_index(d.bus);
  if (!connected_without(branches.size()))
    throw ValidationError("network graph is not connected");
}

bool Network::connected_without(std::size_t skip_branch) const {
  if (buses.empty()) return false;
  std::vector<std::vector<int>> adj(buses.size());
  for (std::size_t b = 0; b < branches.size(); ++b) {
    if (b == skip_branch) continue;
    int i = bus_lookup_.at(branches[b].from_bus);
    int j = bus_lookup_.at(branches[b].to_bus);
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  std::vector<bool> seen(buses.size(), false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  std::size_t count = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = true;
        ++count;
        q.push(v);
      }
  }
  return count == buses.size();
}

bool Network::is_bridge(std::size_t branch_idx) const {
  return !connected_without(branch_idx);
}

IncidenceMaps Network::incidence() const {
  IncidenceMaps maps;
  const auto n = static_cast<Eigen::Index>(buses.size());
  maps.gen = Mat::Zero(n, static_cast<Eigen::Index>(generators.size()));
  maps.res = Mat::Zero(n, static_cast<Eigen::Index>(res_units.size()));
  maps.demand = Mat::Zero(n, static_cast<Eigen::Index>(demands.size()));
  for (std::size_t j = 0; j < generators.size(); ++j)
    maps.gen(bus_index(generators[j].bus), static_cast<Eigen::Index>(j)) = 1.0;
  for (std::size_t j = 0; j < res_units.size(); ++j)
    maps.res(bus_index(res_units[j].bus), static_cast<Eigen::Index>(j)) = 1.0;
  for (std::size_t j = 0; j < demands.size(); ++j)
    maps.demand(bus_index(demands[j].bus), static_cast<Eigen::Index>(j)) = 1.0;
  return maps;
}

PtdfMatrix compute_ptdf(const Network& net) {
  const auto nb = static_cast<Eigen::Index>(net.n_buses());
  const auto ne = static_cast<Eigen::Index>(net.n_branches());
  const int slack = net.slack_index();

  // Branch susceptance rows Bf and nodal susceptance matrix B = A^T b A,
  // with b = 1/x. At this scale dense assembly and a dense factorization
  // of the reduced B are cheap.
  Mat bf = Mat::Zero(ne, nb);
  Mat b = Mat::Zero(nb, nb);
  for (Eigen::Index e = 0; e < ne; ++e) {
    const auto& br = net.branches[static_cast<std::size_t>(e)];
    int i = net.bus_index(br.from_bus);
    int j = net.bus_index(br.to_bus);
    double y = 1.0 / br.reactance;
    bf(e, i) = y;
    bf(e, j) = -y;
    b(i, i) += y;
    b(j, j) += y;
    b(i, j) -= y;
    b(j, i) -= y;
  }

  // Remove the slack row/column, factorize once, back-substitute all
  // columns at once.
  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<std::size_t>(nb) - 1);
  for (Eigen::Index i = 0; i < nb; ++i)
    if (i != slack) keep.push_back(i);
  const auto nr = static_cast<Eigen::Index>(keep.size());

  Mat b_red(nr, nr);
  for (Eigen::Index r = 0; r < nr; ++r)
    for (Eigen::Index c = 0; c < nr; ++c) b_red(r, c) = b(keep[r], keep[c]);

  Eigen::PartialPivLU<Mat> lu(b_red);
  // A disconnected graph makes the reduced susceptance matrix singular.
  {
    double det_scale = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    double norm = b_red.cwiseAbs().maxCoeff();
    if (!(det_scale > 1e-12 * std::max(1.0, norm)))
      throw SingularTopology("reduced susceptance matrix is singular");
  }

  Mat bf_red(ne, nr);
  for (Eigen::Index c = 0; c < nr; ++c) bf_red.col(c) = bf.col(keep[c]);

  Mat ptdf_red = lu.solve(bf_red.transpose()).transpose();

  PtdfMatrix out;
  out.values = Mat::Zero(ne, nb);
  for (Eigen::Index c = 0; c < nr; ++c) out.values.col(keep[c]) = ptdf_red.col(c);
  out.rows.resize(static_cast<std::size_t>(ne));
  for (std::size_t e = 0; e < out.rows.size(); ++e) out.rows[e] = static_cast<int>(e);
  return out;
}

namespace {

// Injection-transfer vector of branch k: +1 at from bus, -1 at to bus.
Vec transfer_vector(const Network& net, int k) {
  Vec d = Vec::Zero(static_cast<Eigen::Index>(net.n_buses()));
  const auto& br = net.branches[static_cast<std::size_t>(k)];
  d(net.bus_index(br.from_bus)) = 1.0;
  d(net.bus_index(br.to_bus)) = -1.0;
  return d;
}

}  // namespace

PtdfMatrix compute_outage_ptdf(const Network& net, const PtdfMatrix& intact,
                               int outage_branch) {
  if (outage_branch < 0 ||
      static_cast<std::size_t>(outage_branch) >= net.n_branches())
    throw ValidationError("outage branch index out of range");
  if (net.is_bridge(static_cast<std::size_t>(outage_branch)))
    throw IslandingOutage("outage of branch " + std::to_string(outage_branch) +
                          " disconnects the network");

  const Vec d = transfer_vector(net, outage_branch);
  const Vec ptdf_d = intact.values * d;
  const double denom = 1.0 - ptdf_d(outage_branch);
  if (std::abs(denom) < 1e-9)
    throw IslandingOutage("branch " + std::to_string(outage_branch) +
                          " is numerically a bridge");

  const auto ne = static_cast<Eigen::Index>(net.n_branches());
  PtdfMatrix out;
  out.outage = outage_branch;
  out.values.resize(ne - 1, intact.values.cols());
  out.rows.reserve(static_cast<std::size_t>(ne) - 1);
  Eigen::Index r = 0;
  for (Eigen::Index l = 0; l < ne; ++l) {
    if (l == outage_branch) continue;
    double lodf = ptdf_d(l) / denom;
    out.values.row(r) =
        intact.values.row(l) + lodf * intact.values.row(outage_branch);
    out.rows.push_back(static_cast<int>(l));
    ++r;
  }
  return out;
}

PtdfMatrix compute_outage_ptdf(const Network& net, int outage_branch) {
  return compute_outage_ptdf(net, compute_ptdf(net), outage_branch);
}

Vec net_injection(const Vec& p_gen, const Vec& p_res, const Vec& p_demand,
                  const IncidenceMaps& maps) {
  if (p_gen.size() != maps.gen.cols() || p_res.size() != maps.res.cols() ||
      p_demand.size() != maps.demand.cols())
    throw DimensionMismatch("injection vector sizes do not match incidence maps");
  return maps.gen * p_gen + maps.res * p_res - maps.demand * p_demand;
}

OutageScreener::OutageScreener(const Network& net) : ptdf_(compute_ptdf(net)) {
  maps_ = net.incidence();
  gen_sens_ = ptdf_.values * maps_.gen;
  res_sens_ = ptdf_.values * maps_.res;
  const auto ne = static_cast<Eigen::Index>(net.n_branches());
  bridge_.assign(static_cast<std::size_t>(ne), false);
  lodf_ = Mat::Zero(ne, ne);
  for (Eigen::Index k = 0; k < ne; ++k) {
    if (net.is_bridge(static_cast<std::size_t>(k))) {
      bridge_[static_cast<std::size_t>(k)] = true;
      continue;
    }
    Vec d = transfer_vector(net, static_cast<int>(k));
    Vec ptdf_d = ptdf_.values * d;
    double denom = 1.0 - ptdf_d(k);
    if (std::abs(denom) < 1e-9) {
      bridge_[static_cast<std::size_t>(k)] = true;
      continue;
    }
    lodf_.col(k) = ptdf_d / denom;
    lodf_(k, k) = 0.0;
  }
}

Vec OutageScreener::outage_flows(const Vec& intact_flows, int k) const {
  const auto ne = intact_flows.size();
  Vec out(ne - 1);
  Eigen::Index r = 0;
  for (Eigen::Index l = 0; l < ne; ++l) {
    if (l == k) continue;
    out(r++) = intact_flows(l) + lodf_(l, k) * intact_flows(k);
  }
  return out;
}

}  // namespace redopt
