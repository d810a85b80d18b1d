#include "redopt/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "redopt/errors.hpp"
#include "redopt/redispatch_det.hpp"
#include "redopt/redispatch_stoch.hpp"
#include "redopt/util.hpp"

namespace redopt {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << content;
}

// 6-significant-digit JSON value for MW quantities.
json mw(double v) { return json::parse(fmt6(v)); }

json mw_vector(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(mw(v(i)));
  return out;
}

json mw_matrix(const Mat& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    out.push_back(mw_vector(m.row(r)));
  return out;
}

json config_json(const RunConfig& c) {
  json j;
  j["case"] = c.case_path;
  j["forecasts"] = c.forecasts_path;
  j["correlations"] = c.correlations_path;
  j["limits"] = c.limits_path;
  j["eps"] = c.eps;
  j["samples"] = c.n_samples;
  j["seed"] = c.seed;
  j["max_iters"] = c.max_iters;
  j["jobs"] = c.jobs;
  j["default_flow_limit"] = c.default_flow_limit;
  j["ramp_up_frac"] = c.ramp_up_frac;
  j["ramp_down_frac"] = c.ramp_down_frac;
  j["curtail_frac"] = c.curtail_frac;
  j["res_cost_quad"] = c.res_cost_quad;
  j["res_cost_lin"] = c.res_cost_lin;
  j["density_gens"] = c.density_gens;
  return j;
}

void write_manifest(const RunConfig& c, const std::string& mode) {
  json j;
  j["mode"] = mode;
  j["config"] = config_json(c);
  json digests;
  for (const std::string& p :
       {c.case_path, c.forecasts_path, c.correlations_path, c.limits_path})
    if (!p.empty()) digests[p] = sha256_file(p);
  j["input_digests"] = digests;
  write_file(c.out_dir + "/manifest.json", j.dump(2) + "\n");
}

Vec demand_vector(const Network& net) {
  Vec d(static_cast<Eigen::Index>(net.demands.size()));
  for (std::size_t i = 0; i < net.demands.size(); ++i)
    d(static_cast<Eigen::Index>(i)) = net.demands[i].p;
  return d;
}

json log_json(const IterationLog& log) {
  json rows = json::array();
  for (const auto& r : log.rows) {
    json row;
    row["iteration"] = r.iteration;
    row["empty"] = r.empty;
    row["critical_outage"] = r.empty ? "" : r.outage_label;
    row["critical_branches"] = r.empty ? "" : r.branches_label;
    row["max_mean_violation_mw"] = mw(r.max_mean_violation);
    row["pct_samples_violating"] = mw(r.pct_samples_violating);
    row["cumulative_constraints"] = r.cumulative_constraints;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

void RunConfig::validate() const {
  if (!(eps > 0.0 && eps < 1.0))
    throw ValidationError("eps must lie in (0,1)");
  if (n_samples < 1) throw ValidationError("samples must be >= 1");
  if (case_path.empty()) throw ValidationError("case path is required");
  if (forecasts_path.empty())
    throw ValidationError("forecast path is required");
}

RunConfig load_config(const std::string& path) {
  json j = json::parse(read_file(path));
  RunConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
  };
  get("case", c.case_path);
  get("forecasts", c.forecasts_path);
  get("correlations", c.correlations_path);
  get("limits", c.limits_path);
  get("eps", c.eps);
  get("samples", c.n_samples);
  get("seed", c.seed);
  get("max_iters", c.max_iters);
  get("jobs", c.jobs);
  get("out", c.out_dir);
  get("default_flow_limit", c.default_flow_limit);
  get("ramp_up_frac", c.ramp_up_frac);
  get("ramp_down_frac", c.ramp_down_frac);
  get("curtail_frac", c.curtail_frac);
  get("res_cost_quad", c.res_cost_quad);
  get("res_cost_lin", c.res_cost_lin);
  get("density_gens", c.density_gens);
  return c;
}

Pipeline load_pipeline(const RunConfig& config) {
  config.validate();
  Pipeline p;

  CaseOptions copts;
  copts.default_flow_limit = config.default_flow_limit;
  copts.ramp_up_frac = config.ramp_up_frac;
  copts.ramp_down_frac = config.ramp_down_frac;
  p.net = parse_case(read_file(config.case_path), copts);

  p.records = parse_forecasts(read_file(config.forecasts_path));
  attach_res_units(p.net, p.records, config.curtail_frac, config.res_cost_quad,
                   config.res_cost_lin);
  if (!config.limits_path.empty())
    apply_limit_profile(p.net, read_file(config.limits_path));

  CorrelationSpec spec;
  if (!config.correlations_path.empty())
    spec = parse_correlation_spec(read_file(config.correlations_path));
  p.correlation = assemble_correlation(spec, p.records);

  p.basis = build_basis(p.records, p.correlation);
  p.p_demand = demand_vector(p.net);

  Vec dispatch(static_cast<Eigen::Index>(p.net.generators.size()));
  for (std::size_t i = 0; i < p.net.generators.size(); ++i)
    dispatch(static_cast<Eigen::Index>(i)) = p.net.generators[i].p_start;
  Vec weights = participation_factors(p.net);
  p.base_dispatch = rebalance_dispatch(p.net, dispatch,
                                       p.basis.res_forecast.mean(), p.p_demand,
                                       weights);
  p.base_gen = market_clearing_pce(p.basis.res_forecast, p.net, p.base_dispatch,
                                   p.p_demand);
  p.screener = std::make_unique<OutageScreener>(p.net);
  return p;
}

RunMode run_mode_from_string(const std::string& s) {
  if (s == "det") return RunMode::det;
  if (s == "stoch") return RunMode::stoch;
  if (s == "mc") return RunMode::mc;
  if (s == "compare") return RunMode::compare;
  throw ValidationError("unknown mode '" + s + "'");
}

int cmd_fit(const RunConfig& config) {
  try {
    std::filesystem::create_directories(config.out_dir);
    Pipeline p = load_pipeline(config);

    json units = json::array();
    for (std::size_t j = 0; j < p.records.size(); ++j) {
      const auto& rec = p.records[j];
      const auto& fit = p.basis.fits[j];
      const auto& marg = p.basis.basis.marginals[j];
      json u;
      u["res_id"] = rec.res_id;
      u["bus"] = rec.bus;
      u["kind"] = rec.kind == ResKind::wind ? "wind" : "solar";
      u["alpha"] = fit.alpha;
      u["beta"] = fit.beta;
      u["fit_residual"] = fit.objective;
      u["mean_mw"] = mw(rec.mu);
      u["std_mw"] = mw(marg.scale * marg.std01());
      units.push_back(u);
    }
    json out;
    out["units"] = units;
    out["covariance_mw2"] = mw_matrix(p.basis.covariance);
    out["coefficients"] = mw_matrix(p.basis.res_forecast.coeffs);
    write_file(config.out_dir + "/fit_report.json", out.dump(2) + "\n");
    write_manifest(config, "fit");
    return kExitSecure;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

namespace {

void write_det_outputs(const RunConfig& config, const DetSolution& sol,
                       const IterationLog& log) {
  write_file(config.out_dir + "/iterations.csv", log.to_csv());
  json j;
  j["objective"] = mw(sol.objective);
  j["p_up"] = mw_vector(sol.p_up);
  j["p_down"] = mw_vector(sol.p_down);
  j["curtail"] = mw_vector(sol.curtail);
  j["p_gen"] = mw_vector(sol.p_gen);
  j["p_res"] = mw_vector(sol.p_res);
  j["iterations"] = log_json(log);
  write_file(config.out_dir + "/solution.json", j.dump(2) + "\n");
}

void write_stoch_outputs(const RunConfig& config, const StochSolution& sol,
                         const IterationLog& log) {
  write_file(config.out_dir + "/iterations.csv", log.to_csv());
  json j;
  j["expected_objective"] = mw(sol.expected_objective);
  j["up_coeffs"] = mw_matrix(sol.up_coeffs);
  j["down_coeffs"] = mw_matrix(sol.down_coeffs);
  j["curtail_coeffs"] = mw_matrix(sol.curtail_coeffs);
  j["p_gen_coeffs"] = mw_matrix(sol.p_gen.coeffs);
  j["p_res_coeffs"] = mw_matrix(sol.p_res.coeffs);
  j["p_gen_mean"] = mw_vector(sol.p_gen.mean());
  j["p_gen_std"] = mw_vector(sol.p_gen.variance().cwiseSqrt());
  j["iterations"] = log_json(log);
  write_file(config.out_dir + "/solution.json", j.dump(2) + "\n");
}

std::vector<int> pick_density_gens(const RunConfig& config,
                                   const EnsembleResult& ensemble) {
  if (!config.density_gens.empty()) {
    std::vector<int> out;
    for (int g : config.density_gens) out.push_back(g - 1);
    return out;
  }
  Vec std = ensemble.gen_std();
  std::vector<int> idx(static_cast<std::size_t>(std.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return std(a) > std(b); });
  idx.resize(std::min<std::size_t>(3, idx.size()));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

int cmd_run(const RunConfig& config, RunMode mode) {
  try {
    std::filesystem::create_directories(config.out_dir);
    Pipeline p = load_pipeline(config);

    DriverOptions driver;
    driver.max_iters = config.max_iters;
    driver.jobs = config.jobs;

    json timings;
    auto t0 = std::chrono::steady_clock::now();
    auto since = [](auto start) {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                           start)
          .count();
    };

    if (mode == RunMode::det) {
      auto [sol, log] =
          run_deterministic(p.net, *p.screener, p.base_dispatch,
                            p.basis.res_forecast.mean(), p.p_demand, driver);
      write_det_outputs(config, sol, log);
      timings["det_s"] = since(t0);
    } else {
      Mat omegas = p.basis.basis.sample(
          static_cast<std::size_t>(config.n_samples), config.seed);

      if (mode == RunMode::stoch || mode == RunMode::compare) {
        auto [sol, log] =
            run_stochastic(p.net, *p.screener, p.base_gen,
                           p.basis.res_forecast, p.p_demand, config.eps,
                           p.basis.basis, omegas, driver);
        write_stoch_outputs(config, sol, log);
        timings["pce_pipeline_s"] = since(t0);

        if (mode == RunMode::compare) {
          auto t1 = std::chrono::steady_clock::now();
          McOptions mc;
          mc.jobs = config.jobs;
          mc.driver = driver;
          EnsembleResult ens =
              run_mc(p.net, *p.screener, p.basis.basis, p.base_gen,
                     p.basis.res_forecast, p.p_demand, omegas, mc);
          timings["mc_pipeline_s"] = since(t1);
          write_file(config.out_dir + "/comparison.csv",
                     comparison_csv(compare(ens, sol, p.basis.basis, omegas)));
          for (int g : pick_density_gens(config, ens))
            write_file(config.out_dir + "/density_" + std::to_string(g + 1) +
                           ".csv",
                       density_csv(ens, sol, p.basis.basis, omegas, g));
          write_file(config.out_dir + "/ensemble.csv", ensemble_csv(ens));
        }
      } else if (mode == RunMode::mc) {
        McOptions mc;
        mc.jobs = config.jobs;
        mc.driver = driver;
        EnsembleResult ens =
            run_mc(p.net, *p.screener, p.basis.basis, p.base_gen,
                   p.basis.res_forecast, p.p_demand, omegas, mc);
        timings["mc_pipeline_s"] = since(t0);
        write_file(config.out_dir + "/ensemble.csv", ensemble_csv(ens));
        json j;
        j["gen_mean"] = mw_vector(ens.gen_mean());
        j["gen_std"] = mw_vector(ens.gen_std());
        j["failed_samples"] = ens.failed_samples;
        j["clipped_samples"] = ens.clipped_samples;
        write_file(config.out_dir + "/mc_summary.json", j.dump(2) + "\n");
      }
    }

    write_file(config.out_dir + "/timings.json", timings.dump(2) + "\n");
    write_manifest(config, mode == RunMode::det      ? "det"
                           : mode == RunMode::stoch  ? "stoch"
                           : mode == RunMode::mc     ? "mc"
                                                     : "compare");
    return kExitSecure;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const NotPSD& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const InfeasibleSubproblem& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (!e.constraint_dump.empty())
      std::cerr << "diagnosis: " << e.constraint_dump << "\n";
    return kExitInfeasible;
  } catch (const MaxIterations& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMaxIters;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolverFailure;
  }
}

}  // namespace redopt
