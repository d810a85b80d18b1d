#include "redopt/redispatch_stoch.hpp"

#include <cmath>
#include <limits>

#include "redopt/errors.hpp"
#include "redopt/util.hpp"

namespace redopt {

double lambda_of_eps(double eps) {
  if (!(eps > 0.0 && eps <= 1.0))
    throw DomainError("failure rate must lie in (0,1]");
  return std::sqrt(1.0 / eps);
}

namespace {

struct Builder {
  Builder(const Network& net, const OutageScreener& screener, double lambda)
      : net(net), screener(screener), lambda(lambda) {}

  const Network& net;
  const OutageScreener& screener;
  double lambda;

  Eigen::Index ng = 0, nr = 0, nm = 0, n_coeff = 0;
  StochVarMap map;
  Mat gen_sens, res_sens; // PTDF * C_G, PTDF * C_R
  Mat base_flow;          // |E| x |M| flows of the base schedule
  Vec box_upper;          // per-unit adjustment bounds, unit order [up;down;curtail]

  ConicProblem problem;
  std::vector<Eigen::Triplet<double>> q_trips;

  Eigen::Index unit_var(Eigen::Index family_off, Eigen::Index unit,
                        Eigen::Index term) const {
    return family_off + unit * nm + term;
  }

  void add_linear_ineq(const std::vector<std::pair<Eigen::Index, double>>& coeffs,
                       double d) {
    SocConstraint c;
    c.a.resize(0, problem.n);
    c.b.resize(0);
    c.c.resize(problem.n);
    for (const auto& [idx, v] : coeffs) c.c.coeffRef(idx) += v;
    c.d = d;
    problem.cones.push_back(std::move(c));
  }

  // Chebyshev pair for one box-bounded scalar family member: epigraph SOC
  // over its higher-order coefficients plus the +- rows against both bound
  // sides.
  void add_box_chance(Eigen::Index family_off, Eigen::Index unit, double upper,
                      Eigen::Index epi) {
    SocConstraint c;
    c.a.resize(nm - 1, problem.n);
    std::vector<Eigen::Triplet<double>> trips;
    for (Eigen::Index a = 1; a < nm; ++a)
      trips.emplace_back(static_cast<int>(a - 1),
                         static_cast<int>(unit_var(family_off, unit, a)), 1.0);
    c.a.setFromTriplets(trips.begin(), trips.end());
    c.b = Vec::Zero(nm - 1);
    c.c.resize(problem.n);
    c.c.coeffRef(epi) = 1.0;
    problem.cones.push_back(std::move(c));

    Eigen::Index v0 = unit_var(family_off, unit, 0);
    add_linear_ineq({{v0, 1.0}, {epi, -lambda}}, 0.0);
    add_linear_ineq({{v0, 1.0}, {epi, +lambda}}, 0.0);
    add_linear_ineq({{v0, -1.0}, {epi, -lambda}}, upper);
    add_linear_ineq({{v0, -1.0}, {epi, +lambda}}, upper);
  }

  // Sensitivity of a (possibly post-outage) flow to the adjustment
  // coefficients of one expansion term; the same row pattern holds for
  // every term.
  struct FlowPattern {
    Vec gen_row; // d flow / d up  (negated for down)
    Vec res_row; // d flow / d curtail carries a minus sign
    Vec base;    // |M| base-flow coefficients of this row
    double limit = 0.0;
  };

  FlowPattern flow_pattern(int branch, int outage) const {
    FlowPattern fp;
    fp.gen_row = gen_sens.row(branch);
    fp.res_row = res_sens.row(branch);
    fp.base = base_flow.row(branch);
    if (outage >= 0) {
      double lodf = screener.lodf()(branch, outage);
      fp.gen_row += lodf * gen_sens.row(outage).transpose();
      fp.res_row += lodf * res_sens.row(outage).transpose();
      fp.base += lodf * base_flow.row(outage).transpose();
    }
    fp.limit = net.branches[static_cast<std::size_t>(branch)].flow_limit;
    return fp;
  }

  // Interval bound on |mean flow| + lambda * ||higher-order flow|| over the
  // feasible set (box cones give ||x_u|| <= bound_u / lambda).
  double reach_bound(const FlowPattern& fp) const {
    double unit_reach = 0.0;
    for (Eigen::Index i = 0; i < ng; ++i) {
      unit_reach += std::abs(fp.gen_row(i)) * (box_upper(i) + box_upper(ng + i));
    }
    for (Eigen::Index j = 0; j < nr; ++j)
      unit_reach += std::abs(fp.res_row(j)) * box_upper(2 * ng + j);
    return std::abs(fp.base(0)) + lambda * fp.base.tail(nm - 1).norm() +
           2.0 * unit_reach;
  }

  void add_flow_rows(const FlowPattern& fp, Eigen::Index term,
                     std::vector<std::pair<Eigen::Index, double>>& out) const {
    out.clear();
    for (Eigen::Index i = 0; i < ng; ++i) {
      if (fp.gen_row(i) == 0.0) continue;
      out.emplace_back(unit_var(map.up_off, i, term), fp.gen_row(i));
      out.emplace_back(unit_var(map.down_off, i, term), -fp.gen_row(i));
    }
    for (Eigen::Index j = 0; j < nr; ++j) {
      if (fp.res_row(j) == 0.0) continue;
      out.emplace_back(unit_var(map.curtail_off, j, term), -fp.res_row(j));
    }
  }

  void add_flow_chance(const FlowPattern& fp, Eigen::Index epi) {
    // epigraph cone over the higher-order flow coefficients
    SocConstraint c;
    c.a.resize(nm - 1, problem.n);
    std::vector<Eigen::Triplet<double>> trips;
    std::vector<std::pair<Eigen::Index, double>> row;
    for (Eigen::Index a = 1; a < nm; ++a) {
      add_flow_rows(fp, a, row);
      for (const auto& [idx, v] : row)
        trips.emplace_back(static_cast<int>(a - 1), static_cast<int>(idx), v);
    }
    c.a.setFromTriplets(trips.begin(), trips.end());
    c.b = fp.base.tail(nm - 1);
    c.c.resize(problem.n);
    c.c.coeffRef(epi) = 1.0;
    problem.cones.push_back(std::move(c));

    // mean rows |f0| <= limit and the +- pairs |f0 +- lambda t| <= limit
    add_flow_rows(fp, 0, row);
    std::vector<std::pair<Eigen::Index, double>> r;
    auto emit = [&](double sf, double st, double d) {
      r.clear();
      for (const auto& [idx, v] : row) r.emplace_back(idx, sf * v);
      if (st != 0.0) r.emplace_back(epi, st);
      add_linear_ineq(r, d);
    };
    emit(-1.0, 0.0, fp.limit - fp.base(0));
    emit(+1.0, 0.0, fp.limit + fp.base(0));
    // f0 + lambda t <= limit ; -(f0 + lambda t) <= limit
    emit(-1.0, -lambda, fp.limit - fp.base(0));
    emit(+1.0, -lambda, fp.limit + fp.base(0));
    // f0 - lambda t <= limit ; -(f0 - lambda t) <= limit
    emit(-1.0, +lambda, fp.limit - fp.base(0));
    emit(+1.0, +lambda, fp.limit + fp.base(0));
  }
};

}  // namespace

ConicProblem build_stoch_problem(const Network& net, const OutageScreener& screener,
                                 const PceCoefficients& base_gen,
                                 const PceCoefficients& base_res,
                                 const Vec& p_demand, double eps,
                                 const std::vector<OutageConstraint>& extra,
                                 const StochProblemOptions& opts,
                                 StochVarMap* map_out) {
  const auto ng = static_cast<Eigen::Index>(net.generators.size());
  const auto nr = static_cast<Eigen::Index>(net.res_units.size());
  const Eigen::Index nm = base_res.n_terms();
  if (base_gen.n_terms() != nm)
    throw DimensionMismatch("base coefficient matrices use different index sets");
  if (base_gen.dim() != ng || base_res.dim() != nr)
    throw DimensionMismatch("base coefficient matrices do not match the network");

  // per-term conservation residual of the base schedule
  Vec resid(nm);
  for (Eigen::Index a = 0; a < nm; ++a) {
    resid(a) = base_gen.coeffs.col(a).sum() + base_res.coeffs.col(a).sum() -
               (a == 0 ? p_demand.sum() : 0.0);
    if (std::abs(resid(a)) > 1e-6)
      throw Unbalanced("base coefficients violate conservation in term " +
                       std::to_string(a) + " by " + fmt6(resid(a)) + " MW");
  }

  Builder b(net, screener, lambda_of_eps(eps));
  b.ng = ng;
  b.nr = nr;
  b.nm = nm;
  b.n_coeff = (2 * ng + nr) * nm;
  b.map.n_terms = nm;
  b.map.up_off = 0;
  b.map.down_off = ng * nm;
  b.map.curtail_off = 2 * ng * nm;
  b.map.epi_off = b.n_coeff;

  const IncidenceMaps& maps = screener.maps();
  b.gen_sens = screener.gen_sens();
  b.res_sens = screener.res_sens();
  Mat net_coeffs = maps.gen * base_gen.coeffs + maps.res * base_res.coeffs;
  net_coeffs.col(0) -= maps.demand * p_demand;
  b.base_flow = screener.ptdf().values * net_coeffs;

  Vec box(2 * ng + nr);
  for (Eigen::Index i = 0; i < ng; ++i) {
    box(i) = net.generators[static_cast<std::size_t>(i)].ramp_up_max;
    box(ng + i) = net.generators[static_cast<std::size_t>(i)].ramp_down_max;
  }
  for (Eigen::Index j = 0; j < nr; ++j)
    box(2 * ng + j) = net.res_units[static_cast<std::size_t>(j)].curtail_max;
  b.box_upper = box;

  // decide which intact flows to keep before sizing the problem
  std::vector<int> kept_flows;
  for (Eigen::Index l = 0; l < static_cast<Eigen::Index>(net.n_branches()); ++l) {
    auto fp = b.flow_pattern(static_cast<int>(l), -1);
    if (!opts.screen_inactive || b.reach_bound(fp) > fp.limit - 1e-7)
      kept_flows.push_back(static_cast<int>(l));
  }

  const Eigen::Index n_epi = 2 * ng + nr +
                             static_cast<Eigen::Index>(kept_flows.size()) +
                             static_cast<Eigen::Index>(extra.size());
  b.map.n_total = b.n_coeff + n_epi;
  b.problem = ConicProblem::make(b.map.n_total);

  // boxes on the mean coefficients; higher-order coefficients stay free
  b.problem.lower.setConstant(-std::numeric_limits<double>::infinity());
  b.problem.upper.setConstant(std::numeric_limits<double>::infinity());
  for (Eigen::Index i = 0; i < ng; ++i) {
    b.problem.lower(b.unit_var(b.map.up_off, i, 0)) = 0.0;
    b.problem.upper(b.unit_var(b.map.up_off, i, 0)) = box(i);
    b.problem.lower(b.unit_var(b.map.down_off, i, 0)) = 0.0;
    b.problem.upper(b.unit_var(b.map.down_off, i, 0)) = box(ng + i);
  }
  for (Eigen::Index j = 0; j < nr; ++j) {
    b.problem.lower(b.unit_var(b.map.curtail_off, j, 0)) = 0.0;
    b.problem.upper(b.unit_var(b.map.curtail_off, j, 0)) = box(2 * ng + j);
  }

  // expected cost: quadratic over all coefficients, linear on the means
  for (Eigen::Index i = 0; i < ng; ++i) {
    const auto& g = net.generators[static_cast<std::size_t>(i)];
    for (Eigen::Index a = 0; a < nm; ++a) {
      if (g.g2_up != 0.0)
        b.q_trips.emplace_back(static_cast<int>(b.unit_var(b.map.up_off, i, a)),
                               static_cast<int>(b.unit_var(b.map.up_off, i, a)),
                               2.0 * g.g2_up);
      if (g.g2_down != 0.0)
        b.q_trips.emplace_back(
            static_cast<int>(b.unit_var(b.map.down_off, i, a)),
            static_cast<int>(b.unit_var(b.map.down_off, i, a)), 2.0 * g.g2_down);
    }
    b.problem.linear(b.unit_var(b.map.up_off, i, 0)) = g.g1_up;
    b.problem.linear(b.unit_var(b.map.down_off, i, 0)) = g.g1_down;
  }
  for (Eigen::Index j = 0; j < nr; ++j) {
    const auto& r = net.res_units[static_cast<std::size_t>(j)];
    for (Eigen::Index a = 0; a < nm; ++a)
      if (r.r2 != 0.0)
        b.q_trips.emplace_back(
            static_cast<int>(b.unit_var(b.map.curtail_off, j, a)),
            static_cast<int>(b.unit_var(b.map.curtail_off, j, a)), 2.0 * r.r2);
    b.problem.linear(b.unit_var(b.map.curtail_off, j, 0)) = r.r1;
  }
  b.problem.quadratic.setFromTriplets(b.q_trips.begin(), b.q_trips.end());

  // conservation per expansion term
  b.problem.eq.resize(nm, b.map.n_total);
  {
    std::vector<Eigen::Triplet<double>> trips;
    for (Eigen::Index a = 0; a < nm; ++a) {
      for (Eigen::Index i = 0; i < ng; ++i) {
        trips.emplace_back(static_cast<int>(a),
                           static_cast<int>(b.unit_var(b.map.up_off, i, a)), 1.0);
        trips.emplace_back(static_cast<int>(a),
                           static_cast<int>(b.unit_var(b.map.down_off, i, a)),
                           -1.0);
      }
      for (Eigen::Index j = 0; j < nr; ++j)
        trips.emplace_back(static_cast<int>(a),
                           static_cast<int>(b.unit_var(b.map.curtail_off, j, a)),
                           -1.0);
    }
    b.problem.eq.setFromTriplets(trips.begin(), trips.end());
  }
  b.problem.eq_rhs = -resid;

  // chance constraints: adjustment boxes, kept intact flows, outage flows
  Eigen::Index epi = b.map.epi_off;
  for (Eigen::Index i = 0; i < ng; ++i)
    b.add_box_chance(b.map.up_off, i, box(i), epi++);
  for (Eigen::Index i = 0; i < ng; ++i)
    b.add_box_chance(b.map.down_off, i, box(ng + i), epi++);
  for (Eigen::Index j = 0; j < nr; ++j)
    b.add_box_chance(b.map.curtail_off, j, box(2 * ng + j), epi++);
  for (int l : kept_flows) b.add_flow_chance(b.flow_pattern(l, -1), epi++);
  for (const auto& oc : extra)
    b.add_flow_chance(b.flow_pattern(oc.branch, oc.outage_branch), epi++);

  if (map_out) *map_out = b.map;
  return std::move(b.problem);
}

StochSolution recover(const Vec& solution, const StochVarMap& map,
                      const Network& net, const OutageScreener& screener,
                      const PceCoefficients& base_gen,
                      const PceCoefficients& base_res, const Vec& p_demand,
                      const SolveReport& report) {
  const auto ng = static_cast<Eigen::Index>(net.generators.size());
  const auto nr = static_cast<Eigen::Index>(net.res_units.size());
  const Eigen::Index nm = map.n_terms;

  StochSolution sol;
  sol.report = report;
  auto unpack = [&](Eigen::Index off, Eigen::Index count) {
    Mat m(count, nm);
    for (Eigen::Index u = 0; u < count; ++u)
      for (Eigen::Index a = 0; a < nm; ++a) m(u, a) = solution(off + u * nm + a);
    return m;
  };
  sol.up_coeffs = unpack(map.up_off, ng);
  sol.down_coeffs = unpack(map.down_off, ng);
  sol.curtail_coeffs = unpack(map.curtail_off, nr);

  sol.p_gen.coeffs = base_gen.coeffs + sol.up_coeffs - sol.down_coeffs;
  sol.p_res.coeffs = base_res.coeffs - sol.curtail_coeffs;

  const IncidenceMaps& maps = screener.maps();
  sol.p_net.coeffs = maps.gen * sol.p_gen.coeffs + maps.res * sol.p_res.coeffs;
  sol.p_net.coeffs.col(0) -= maps.demand * p_demand;
  sol.p_flow.coeffs = screener.ptdf().values * sol.p_net.coeffs;

  sol.expected_objective = expected_objective_value(
      sol.up_coeffs, sol.down_coeffs, sol.curtail_coeffs, net);
  return sol;
}

double expected_objective_value(const Mat& up, const Mat& down, const Mat& curtail,
                                const Network& net) {
  double f = 0.0;
  for (std::size_t i = 0; i < net.generators.size(); ++i) {
    const auto& g = net.generators[i];
    const auto r = static_cast<Eigen::Index>(i);
    f += g.g2_up * up.row(r).squaredNorm() + g.g1_up * up(r, 0);
    f += g.g2_down * down.row(r).squaredNorm() + g.g1_down * down(r, 0);
  }
  for (std::size_t j = 0; j < net.res_units.size(); ++j) {
    const auto& r = net.res_units[j];
    const auto q = static_cast<Eigen::Index>(j);
    f += r.r2 * curtail.row(q).squaredNorm() + r.r1 * curtail(q, 0);
  }
  return f;
}

}  // namespace redopt
