#include "redopt/redispatch_det.hpp"

#include <cmath>
#include <sstream>

#include "redopt/errors.hpp"
#include "redopt/util.hpp"

namespace redopt {

namespace {

struct FlowRow {
  int branch = -1;
  int outage = -1; // -1: intact topology
  Vec coeffs;      // d f / d x over [up; down; curtail]
  double base = 0.0;
  double limit = 0.0;
};

// Flow sensitivities of the intact rows (optionally screened) and all
// requested outage rows, over the adjustment variables.
struct FlowModel {
  explicit FlowModel(const OutageScreener& s)
      : gen_sens(s.gen_sens()), res_sens(s.res_sens()) {}
  const Mat& gen_sens; // PTDF * C_G
  const Mat& res_sens; // PTDF * C_R
  Vec base_flow;       // intact flows at the base schedule
  std::vector<FlowRow> rows;
};

Vec row_coeffs(const FlowModel& fm, Eigen::Index l, double lodf, Eigen::Index k) {
  const auto ng = fm.gen_sens.cols();
  const auto nr = fm.res_sens.cols();
  Vec m(2 * ng + nr);
  Vec gl = fm.gen_sens.row(l);
  Vec rl = fm.res_sens.row(l);
  if (lodf != 0.0) {
    gl += lodf * fm.gen_sens.row(k).transpose();
    rl += lodf * fm.res_sens.row(k).transpose();
  }
  m.head(ng) = gl;
  m.segment(ng, ng) = -gl;
  m.tail(nr) = -rl;
  return m;
}

FlowModel build_flow_model(const Network& net, const OutageScreener& screener,
                           const Vec& base_gen, const Vec& base_res,
                           const Vec& p_demand,
                           const std::vector<OutageConstraint>& extra,
                           const Vec& box_upper, bool screen) {
  FlowModel fm(screener);
  fm.base_flow = screener.ptdf().values *
                 net_injection(base_gen, base_res, p_demand, screener.maps());

  const auto ne = static_cast<Eigen::Index>(net.n_branches());
  for (Eigen::Index l = 0; l < ne; ++l) {
    FlowRow row;
    row.branch = static_cast<int>(l);
    row.coeffs = row_coeffs(fm, l, 0.0, 0);
    row.base = fm.base_flow(l);
    row.limit = net.branches[static_cast<std::size_t>(l)].flow_limit;
    if (screen) {
      double reach = row.coeffs.cwiseAbs().dot(box_upper);
      if (std::abs(row.base) + reach <= row.limit - 1e-7) continue;
    }
    fm.rows.push_back(std::move(row));
  }
  for (const auto& oc : extra) {
    double lodf = screener.lodf()(oc.branch, oc.outage_branch);
    FlowRow row;
    row.branch = oc.branch;
    row.outage = oc.outage_branch;
    row.coeffs = row_coeffs(fm, oc.branch, lodf, oc.outage_branch);
    row.base = fm.base_flow(oc.branch) + lodf * fm.base_flow(oc.outage_branch);
    row.limit = net.branches[static_cast<std::size_t>(oc.branch)].flow_limit;
    fm.rows.push_back(std::move(row));
  }
  return fm;
}

void check_balance(const Vec& base_gen, const Vec& base_res, const Vec& p_demand) {
  double residual = base_gen.sum() + base_res.sum() - p_demand.sum();
  if (std::abs(residual) > 1e-6)
    throw Unbalanced("base schedule violates conservation by " + fmt6(residual) +
                     " MW");
}

// 0 <= c^T z + d as a zero-dimensional second-order cone row.
void add_linear_ineq(ConicProblem& p, const Vec& coeffs, double d) {
  SocConstraint c;
  c.a.resize(0, p.n);
  c.b.resize(0);
  c.c.resize(p.n);
  for (Eigen::Index i = 0; i < coeffs.size(); ++i)
    if (coeffs(i) != 0.0) c.c.coeffRef(i) = coeffs(i);
  c.d = d;
  p.cones.push_back(std::move(c));
}

Vec adjustment_upper(const Network& net) {
  const auto ng = static_cast<Eigen::Index>(net.generators.size());
  const auto nr = static_cast<Eigen::Index>(net.res_units.size());
  Vec ub(2 * ng + nr);
  for (Eigen::Index i = 0; i < ng; ++i) {
    ub(i) = net.generators[static_cast<std::size_t>(i)].ramp_up_max;
    ub(ng + i) = net.generators[static_cast<std::size_t>(i)].ramp_down_max;
  }
  for (Eigen::Index j = 0; j < nr; ++j)
    ub(2 * ng + j) = net.res_units[static_cast<std::size_t>(j)].curtail_max;
  return ub;
}

}  // namespace

ConicProblem build_det_problem(const Network& net, const OutageScreener& screener,
                               const Vec& base_gen, const Vec& base_res,
                               const Vec& p_demand,
                               const std::vector<OutageConstraint>& extra,
                               const DetProblemOptions& opts) {
  check_balance(base_gen, base_res, p_demand);
  const auto ng = static_cast<Eigen::Index>(net.generators.size());
  const auto nr = static_cast<Eigen::Index>(net.res_units.size());
  const Eigen::Index n = 2 * ng + nr;

  ConicProblem p = ConicProblem::make(n);
  p.lower.setZero();
  p.upper = adjustment_upper(net);

  for (Eigen::Index i = 0; i < ng; ++i) {
    const auto& g = net.generators[static_cast<std::size_t>(i)];
    if (g.g2_up != 0.0) p.quadratic.insert(i, i) = 2.0 * g.g2_up;
    if (g.g2_down != 0.0) p.quadratic.insert(ng + i, ng + i) = 2.0 * g.g2_down;
    p.linear(i) = g.g1_up;
    p.linear(ng + i) = g.g1_down;
  }
  for (Eigen::Index j = 0; j < nr; ++j) {
    const auto& r = net.res_units[static_cast<std::size_t>(j)];
    if (r.r2 != 0.0) p.quadratic.insert(2 * ng + j, 2 * ng + j) = 2.0 * r.r2;
    p.linear(2 * ng + j) = r.r1;
  }

  // conservation: sum(up) - sum(down) - sum(curtail) = 0
  p.eq.resize(1, n);
  for (Eigen::Index i = 0; i < ng; ++i) {
    p.eq.insert(0, i) = 1.0;
    p.eq.insert(0, ng + i) = -1.0;
  }
  for (Eigen::Index j = 0; j < nr; ++j) p.eq.insert(0, 2 * ng + j) = -1.0;
  p.eq_rhs = Vec::Zero(1);

  FlowModel fm = build_flow_model(net, screener, base_gen, base_res, p_demand,
                                  extra, p.upper, opts.screen_inactive);
  for (const auto& row : fm.rows) {
    add_linear_ineq(p, -row.coeffs, row.limit - row.base); // f <= limit
    add_linear_ineq(p, row.coeffs, row.limit + row.base);  // -f <= limit
  }
  return p;
}

DetSolution solve_det(const Network& net, const OutageScreener& screener,
                      const Vec& base_gen, const Vec& base_res,
                      const Vec& p_demand,
                      const std::vector<OutageConstraint>& extra,
                      const DetProblemOptions& opts) {
  ConicProblem p =
      build_det_problem(net, screener, base_gen, base_res, p_demand, extra, opts);
  SolveOptions so;
  so.tol = opts.solver_tol;
  SolveReport rep = solve(p, so);

  const auto ng = static_cast<Eigen::Index>(net.generators.size());
  const auto nr = static_cast<Eigen::Index>(net.res_units.size());
  DetSolution sol;
  sol.report = rep;
  if (rep.solution.size() == p.n) {
    sol.p_up = rep.solution.head(ng).cwiseMax(0.0);
    sol.p_down = rep.solution.segment(ng, ng).cwiseMax(0.0);
    sol.curtail = rep.solution.tail(nr).cwiseMax(0.0);
    sol.p_gen = base_gen + sol.p_up - sol.p_down;
    sol.p_res = base_res - sol.curtail;
    sol.objective = objective_value(sol, net);
  }
  return sol;
}

double objective_value(const DetSolution& sol, const Network& net) {
  double f = 0.0;
  for (std::size_t i = 0; i < net.generators.size(); ++i) {
    const auto& g = net.generators[i];
    double up = sol.p_up(static_cast<Eigen::Index>(i));
    double dn = sol.p_down(static_cast<Eigen::Index>(i));
    f += g.g2_up * up * up + g.g1_up * up + g.g2_down * dn * dn + g.g1_down * dn;
  }
  for (std::size_t j = 0; j < net.res_units.size(); ++j) {
    const auto& r = net.res_units[j];
    double c = sol.curtail(static_cast<Eigen::Index>(j));
    f += r.r2 * c * c + r.r1 * c;
  }
  return f;
}

std::string diagnose_infeasibility(const Network& net,
                                   const OutageScreener& screener,
                                   const Vec& base_gen, const Vec& base_res,
                                   const Vec& p_demand,
                                   const std::vector<OutageConstraint>& extra) {
  const auto ng = static_cast<Eigen::Index>(net.generators.size());
  const auto nr = static_cast<Eigen::Index>(net.res_units.size());
  const Eigen::Index nx = 2 * ng + nr;

  Vec box = adjustment_upper(net);
  FlowModel fm = build_flow_model(net, screener, base_gen, base_res, p_demand,
                                  extra, box, /*screen=*/true);
  const auto nrow = static_cast<Eigen::Index>(fm.rows.size());

  ConicProblem p = ConicProblem::make(nx + nrow);
  p.lower.head(nx).setZero();
  p.upper.head(nx) = box;
  p.lower.tail(nrow).setZero();
  for (Eigen::Index r = 0; r < nrow; ++r) p.linear(nx + r) = 1.0;

  p.eq.resize(1, p.n);
  for (Eigen::Index i = 0; i < ng; ++i) {
    p.eq.insert(0, i) = 1.0;
    p.eq.insert(0, ng + i) = -1.0;
  }
  for (Eigen::Index j = 0; j < nr; ++j) p.eq.insert(0, 2 * ng + j) = -1.0;
  p.eq_rhs = Vec::Zero(1);

  for (Eigen::Index r = 0; r < nrow; ++r) {
    const auto& row = fm.rows[static_cast<std::size_t>(r)];
    Vec c1 = Vec::Zero(p.n), c2 = Vec::Zero(p.n);
    c1.head(nx) = -row.coeffs;
    c1(nx + r) = 1.0;
    add_linear_ineq(p, c1, row.limit - row.base);
    c2.head(nx) = row.coeffs;
    c2(nx + r) = 1.0;
    add_linear_ineq(p, c2, row.limit + row.base);
  }

  SolveReport rep = solve(p, SolveOptions{});
  std::ostringstream os;
  if (rep.status != SolveStatus::optimal) {
    os << "slack diagnosis failed: " << to_string(rep.status);
    return os.str();
  }
  os << "minimal total limit relaxation " << fmt6(rep.objective) << " MW;";
  for (Eigen::Index r = 0; r < nrow; ++r) {
    double u = rep.solution(nx + r);
    if (u > 1e-6) {
      const auto& row = fm.rows[static_cast<std::size_t>(r)];
      const auto& br = net.branches[static_cast<std::size_t>(row.branch)];
      os << " branch (" << br.from_bus << "," << br.to_bus << ")";
      if (row.outage >= 0) {
        const auto& ob = net.branches[static_cast<std::size_t>(row.outage)];
        os << " under outage (" << ob.from_bus << "," << ob.to_bus << ")";
      }
      os << " needs " << fmt6(u) << " MW;";
    }
  }
  return os.str();
}

}  // namespace redopt
