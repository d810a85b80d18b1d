#include "redopt/cbco.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <sstream>

#include "redopt/errors.hpp"
#include "redopt/util.hpp"

namespace redopt {

std::string bus_pair_label(const Network& net, int branch_idx) {
  if (branch_idx == kBaseCaseOutage) return "base case";
  const auto& br = net.branches[static_cast<std::size_t>(branch_idx)];
  return "(" + std::to_string(br.from_bus) + "," + std::to_string(br.to_bus) + ")";
}

std::string IterationLog::to_csv() const {
  std::ostringstream os;
  os << "iteration,critical outage,critical branches,"
     << "max mean violation (MW),% samples with violations\n";
  for (const auto& r : rows) {
    if (r.empty) {
      os << r.iteration << ",{},{},0,0\n";
    } else {
      os << r.iteration << "," << r.outage_label << "," << r.branches_label
         << "," << fmt6(r.max_mean_violation) << ","
         << fmt6(r.pct_samples_violating) << "\n";
    }
  }
  return os.str();
}

namespace {

std::string branches_label(const Network& net, const std::vector<int>& branches) {
  std::string s = "{";
  for (std::size_t i = 0; i < branches.size(); ++i) {
    if (i) s += ";";
    s += bus_pair_label(net, branches[i]);
  }
  return s + "}";
}

double elapsed_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

std::vector<CbcoRecord> cbco_analysis(const Network& net,
                                      const OutageScreener& screener,
                                      const Vec& p_gen, const Vec& p_res,
                                      const Vec& p_demand, double threshold) {
  IncidenceMaps maps = net.incidence();
  Vec flows =
      screener.ptdf().values * net_injection(p_gen, p_res, p_demand, maps);
  const auto ne = static_cast<Eigen::Index>(net.n_branches());

  std::vector<CbcoRecord> records;
  auto scan = [&](int outage, const Vec& f, const std::vector<int>& row_branch) {
    CbcoRecord rec;
    rec.outage_branch = outage;
    std::vector<double> viol;
    for (Eigen::Index r = 0; r < f.size(); ++r) {
      double lim =
          net.branches[static_cast<std::size_t>(row_branch[static_cast<std::size_t>(r)])]
              .flow_limit;
      double v = std::abs(f(r)) - lim;
      if (v > threshold) {
        rec.branches.push_back(row_branch[static_cast<std::size_t>(r)]);
        viol.push_back(v);
      }
    }
    if (!rec.branches.empty()) {
      rec.violations =
          Eigen::Map<Vec>(viol.data(), static_cast<Eigen::Index>(viol.size()));
      records.push_back(std::move(rec));
    }
  };

  std::vector<int> all(static_cast<std::size_t>(ne));
  for (Eigen::Index l = 0; l < ne; ++l) all[static_cast<std::size_t>(l)] = static_cast<int>(l);
  scan(kBaseCaseOutage, flows, all);

  for (Eigen::Index k = 0; k < ne; ++k) {
    if (screener.bridge()[static_cast<std::size_t>(k)]) continue;
    std::vector<int> rows;
    rows.reserve(static_cast<std::size_t>(ne) - 1);
    for (Eigen::Index l = 0; l < ne; ++l)
      if (l != k) rows.push_back(static_cast<int>(l));
    scan(static_cast<int>(k), screener.outage_flows(flows, static_cast<int>(k)),
         rows);
  }
  return records;
}

std::vector<CbcoRecord> eps_cbco_analysis(const Network& net,
                                          const OutageScreener& screener,
                                          const PceCoefficients& p_net,
                                          const PceBasis& basis,
                                          const Vec& p_demand, double eps,
                                          const Mat& omegas, int jobs) {
  (void)p_demand;  // already folded into the net-injection coefficients
  const auto ne = static_cast<Eigen::Index>(net.n_branches());
  const Eigen::Index nm = p_net.n_terms();
  const auto n_samples = omegas.rows();

  // |E| x |M| flow coefficients, then per-outage rank-1 LODF updates.
  Mat flow_coeffs = screener.ptdf().values * p_net.coeffs;
  Mat design = basis.design_matrix(omegas); // N x |M|

  Vec phi_max(nm);
  phi_max(0) = 1.0;
  for (int j = 0; j < basis.index_set.n_dims; ++j)
    phi_max(j + 1) = basis.phi1_max_abs(j);

  // one slot per outage plus the base case, filled in parallel
  std::vector<CbcoRecord> slots(static_cast<std::size_t>(ne) + 1);
  std::vector<bool> has_record(static_cast<std::size_t>(ne) + 1, false);

  auto analyze = [&](std::size_t slot) {
    int outage = static_cast<int>(slot) - 1;
    if (outage >= 0 && screener.bridge()[static_cast<std::size_t>(outage)])
      return;
    CbcoRecord rec;
    rec.outage_branch = outage;
    std::vector<double> viol, freq;
    for (Eigen::Index l = 0; l < ne; ++l) {
      if (l == outage) continue;
      Vec row = flow_coeffs.row(l);
      if (outage >= 0)
        row += screener.lodf()(l, outage) * flow_coeffs.row(outage).transpose();
      double lim = net.branches[static_cast<std::size_t>(l)].flow_limit;
      // interval bound over the omega support: skip rows that cannot violate
      if (row.cwiseAbs().dot(phi_max) < lim) continue;
      Vec samples = design * row;
      Eigen::Index violated =
          (samples.array().abs() >= lim).count();
      double frequency =
          static_cast<double>(violated) / static_cast<double>(n_samples);
      if (frequency > eps) {
        rec.branches.push_back(static_cast<int>(l));
        viol.push_back(samples.array().abs().mean() - lim);
        freq.push_back(frequency);
      }
    }
    if (!rec.branches.empty()) {
      rec.violations =
          Eigen::Map<Vec>(viol.data(), static_cast<Eigen::Index>(viol.size()));
      rec.frequencies =
          Eigen::Map<Vec>(freq.data(), static_cast<Eigen::Index>(freq.size()));
      slots[slot] = std::move(rec);
      has_record[slot] = true;
    }
  };

  parallel_for(static_cast<std::size_t>(ne) + 1, jobs, analyze);

  std::vector<CbcoRecord> records;
  for (std::size_t i = 0; i < slots.size(); ++i)
    if (has_record[i]) records.push_back(std::move(slots[i]));
  return records;
}

const CbcoRecord& max_violation_outage(const std::vector<CbcoRecord>& records) {
  if (records.empty()) throw EmptyRecords("no CBCO records");
  const CbcoRecord* best = &records.front();
  for (const auto& rec : records) {
    double v = rec.max_violation(), bv = best->max_violation();
    if (v > bv || (v == bv && rec.outage_branch < best->outage_branch))
      best = &rec;
  }
  return *best;
}

namespace {

// Shared driver skeleton: solve, analyze, append the worst record's
// constraints, repeat. `solve_fn` solves the subproblem and returns its
// objective; `analyze_fn` returns the current records.
template <typename SolveFn, typename AnalyzeFn>
IterationLog drive(const Network& net, int max_iters, double /*threshold*/,
                   std::vector<OutageConstraint>& extra, SolveFn&& solve_fn,
                   AnalyzeFn&& analyze_fn, bool stochastic) {
  IterationLog log;
  std::set<std::pair<int, int>> appended;

  auto t0 = std::chrono::steady_clock::now();
  double objective = solve_fn(extra);
  double solve_time = elapsed_since(t0);
  std::vector<CbcoRecord> records = analyze_fn();

  for (int iter = 0;; ++iter) {
    // one log row per record found at this iteration, worst first
    std::vector<const CbcoRecord*> sorted;
    for (const auto& r : records) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) {
      return a->max_violation() > b->max_violation();
    });
    for (const auto* r : sorted) {
      IterationRow row;
      row.iteration = iter;
      row.outage_branch = r->outage_branch;
      row.outage_label = bus_pair_label(net, r->outage_branch);
      row.branches_label = branches_label(net, r->branches);
      row.max_mean_violation = r->max_violation();
      Eigen::Index worst;
      r->violations.maxCoeff(&worst);
      row.pct_samples_violating =
          stochastic ? 100.0 * r->frequencies(worst) : 100.0;
      row.cumulative_constraints = static_cast<int>(extra.size());
      row.objective = objective;
      row.solve_time_s = solve_time;
      log.rows.push_back(std::move(row));
    }
    if (records.empty()) {
      IterationRow row;
      row.iteration = iter;
      row.empty = true;
      row.cumulative_constraints = static_cast<int>(extra.size());
      row.objective = objective;
      row.solve_time_s = solve_time;
      log.rows.push_back(std::move(row));
      return log;
    }

    if (iter >= max_iters)
      throw MaxIterations("constraint generation exceeded " +
                          std::to_string(max_iters) + " iterations");

    const CbcoRecord& worst = max_violation_outage(records);
    if (worst.outage_branch == kBaseCaseOutage)
      throw Error(
          "base-case violation after solve; intact flow constraints should "
          "prevent this");
    bool grew = false;
    for (int br : worst.branches) {
      OutageConstraint oc{worst.outage_branch, br};
      if (appended.insert({oc.outage_branch, oc.branch}).second) {
        extra.push_back(oc);
        grew = true;
      }
    }
    if (!grew)
      throw MaxIterations(
          "chosen record adds no new constraints; cannot make progress");
    log.chosen_outages.push_back(worst.outage_branch);

    t0 = std::chrono::steady_clock::now();
    objective = solve_fn(extra);
    solve_time = elapsed_since(t0);
    records = analyze_fn();
  }
}

}  // namespace

std::pair<DetSolution, IterationLog> run_deterministic(
    const Network& net, const OutageScreener& screener, const Vec& base_gen,
    const Vec& base_res, const Vec& p_demand, const DriverOptions& opts) {
  DetSolution sol;
  DetProblemOptions det_opts;
  det_opts.solver_tol = opts.solver_tol;

  std::vector<OutageConstraint> extra;
  auto solve_fn = [&](const std::vector<OutageConstraint>& oc) {
    sol = solve_det(net, screener, base_gen, base_res, p_demand, oc, det_opts);
    if (sol.report.status == SolveStatus::infeasible) {
      throw InfeasibleSubproblem(
          "deterministic subproblem infeasible with " +
              std::to_string(oc.size()) + " outage constraints",
          diagnose_infeasibility(net, screener, base_gen, base_res, p_demand,
                                 oc));
    }
    if (sol.report.status != SolveStatus::optimal)
      throw Error("deterministic subproblem solve failed: " +
                  to_string(sol.report.status));
    return sol.objective;
  };
  auto analyze_fn = [&] {
    return cbco_analysis(net, screener, sol.p_gen, sol.p_res, p_demand,
                         opts.violation_threshold);
  };

  IterationLog log = drive(net, opts.max_iters, opts.violation_threshold, extra,
                           solve_fn, analyze_fn, /*stochastic=*/false);
  return {std::move(sol), std::move(log)};
}

std::pair<StochSolution, IterationLog> run_stochastic(
    const Network& net, const OutageScreener& screener,
    const PceCoefficients& base_gen, const PceCoefficients& base_res,
    const Vec& p_demand, double eps, const PceBasis& basis, const Mat& omegas,
    const DriverOptions& opts) {
  StochSolution sol;
  StochProblemOptions st_opts;
  st_opts.solver_tol = opts.solver_tol;

  auto solve_fn = [&](const std::vector<OutageConstraint>& oc) {
    StochVarMap map;
    ConicProblem prob = build_stoch_problem(net, screener, base_gen, base_res,
                                            p_demand, eps, oc, st_opts, &map);
    SolveOptions so;
    so.tol = opts.solver_tol;
    SolveReport rep = solve(prob, so);
    if (rep.status == SolveStatus::infeasible)
      throw InfeasibleSubproblem("stochastic subproblem infeasible with " +
                                 std::to_string(oc.size()) +
                                 " outage chance constraints");
    if (rep.status != SolveStatus::optimal)
      throw Error("stochastic subproblem solve failed: " + to_string(rep.status));
    sol = recover(rep.solution, map, net, screener, base_gen, base_res,
                  p_demand, rep);
    return sol.expected_objective;
  };
  auto analyze_fn = [&] {
    return eps_cbco_analysis(net, screener, sol.p_net, basis, p_demand, eps,
                             omegas, opts.jobs);
  };

  std::vector<OutageConstraint> extra;
  IterationLog log = drive(net, opts.max_iters, opts.violation_threshold, extra,
                           solve_fn, analyze_fn, /*stochastic=*/true);
  return {std::move(sol), std::move(log)};
}

}  // namespace redopt
