#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "redopt/case_parser.hpp"
#include "redopt/cbco.hpp"
#include "redopt/conic.hpp"
#include "redopt/errors.hpp"
#include "redopt/mc_baseline.hpp"
#include "redopt/network.hpp"
#include "redopt/pce.hpp"
#include "redopt/pipeline.hpp"
#include "redopt/redispatch_det.hpp"
#include "redopt/redispatch_stoch.hpp"

namespace py = pybind11;
using namespace redopt;

PYBIND11_MODULE(_core, m) {
  m.doc() = "(N-1)-secure redispatch under renewable-forecast uncertainty";

  py::register_exception<Error>(m, "RedoptError");

  py::enum_<ResKind>(m, "ResKind")
      .value("wind", ResKind::wind)
      .value("solar", ResKind::solar);

  py::class_<Branch>(m, "Branch")
      .def_readonly("from_bus", &Branch::from_bus)
      .def_readonly("to_bus", &Branch::to_bus)
      .def_readonly("reactance", &Branch::reactance)
      .def_readonly("flow_limit", &Branch::flow_limit);

  py::class_<Generator>(m, "Generator")
      .def_readonly("bus", &Generator::bus)
      .def_readonly("p_start", &Generator::p_start)
      .def_readonly("p_max", &Generator::p_max)
      .def_readonly("ramp_up_max", &Generator::ramp_up_max)
      .def_readonly("ramp_down_max", &Generator::ramp_down_max);

  py::class_<Network>(m, "Network")
      .def_readonly("buses", &Network::buses)
      .def_readonly("branches", &Network::branches)
      .def_readonly("generators", &Network::generators)
      .def_readonly("demands", &Network::demands)
      .def_readonly("slack_bus", &Network::slack_bus)
      .def("bus_index", &Network::bus_index)
      .def("is_bridge", &Network::is_bridge);

  py::class_<Demand>(m, "Demand")
      .def_readonly("bus", &Demand::bus)
      .def_readonly("p", &Demand::p);

  py::class_<ForecastRecord>(m, "ForecastRecord")
      .def(py::init<>())
      .def_readwrite("res_id", &ForecastRecord::res_id)
      .def_readwrite("bus", &ForecastRecord::bus)
      .def_readwrite("kind", &ForecastRecord::kind)
      .def_readwrite("mu", &ForecastRecord::mu)
      .def_readwrite("q5", &ForecastRecord::q5)
      .def_readwrite("q95", &ForecastRecord::q95)
      .def_readwrite("a", &ForecastRecord::lo)
      .def_readwrite("b", &ForecastRecord::hi);

  py::class_<PtdfMatrix>(m, "PtdfMatrix")
      .def_readonly("rows", &PtdfMatrix::rows)
      .def_readonly("values", &PtdfMatrix::values)
      .def_readonly("outage", &PtdfMatrix::outage);

  py::class_<OutageScreener>(m, "OutageScreener")
      .def(py::init<const Network&>())
      .def_property_readonly("ptdf", &OutageScreener::ptdf)
      .def_property_readonly("lodf", &OutageScreener::lodf)
      .def_property_readonly("bridges", &OutageScreener::bridge);

  m.def("parse_case", [](const std::string& text) { return parse_case(text); });
  m.def("emit_case", [](const Network& n) { return emit_case(n); });
  m.def("parse_forecasts", &parse_forecasts);
  m.def("parse_correlation_spec", &parse_correlation_spec);
  m.def("assemble_correlation", &assemble_correlation);
  m.def("attach_res_units", &attach_res_units, py::arg("net"), py::arg("records"),
        py::arg("curtail_frac") = 0.2, py::arg("r2") = 0.02, py::arg("r1") = 60.0);
  m.def("apply_limit_profile", &apply_limit_profile);

  py::class_<CorrelationSpec>(m, "CorrelationSpec")
      .def(py::init<>())
      .def_readwrite("solar_solar", &CorrelationSpec::solar_solar)
      .def_readwrite("wind_wind", &CorrelationSpec::wind_wind)
      .def_readwrite("cross", &CorrelationSpec::cross);

  m.def("compute_ptdf", &compute_ptdf);
  m.def(
      "compute_outage_ptdf",
      [](const Network& net, int k) { return compute_outage_ptdf(net, k); },
      py::arg("net"), py::arg("outage_branch"));
  m.def("net_injection", &net_injection);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("alpha", &FitResult::alpha)
      .def_readonly("beta", &FitResult::beta)
      .def_readonly("objective", &FitResult::objective);
  m.def(
      "fit_beta",
      [](double mu, double q5, double q95) { return fit_beta(mu, q5, q95); },
      py::arg("mu"), py::arg("q5"), py::arg("q95"));
  m.def("beta_cdf", &beta_cdf);
  m.def("beta_quantile", &beta_quantile);

  py::class_<BetaParams>(m, "BetaParams")
      .def_readonly("alpha", &BetaParams::alpha)
      .def_readonly("beta", &BetaParams::beta)
      .def_readonly("offset", &BetaParams::offset)
      .def_readonly("scale", &BetaParams::scale);

  py::class_<PceBasis>(m, "PceBasis")
      .def_property_readonly(
          "n_dims", [](const PceBasis& b) { return b.index_set.n_dims; })
      .def_readonly("marginals", &PceBasis::marginals)
      .def("sample",
           [](const PceBasis& b, std::size_t n, std::uint64_t seed) {
             return b.sample(n, seed);
           })
      .def("design_matrix", &PceBasis::design_matrix);

  py::class_<PceCoefficients>(m, "PceCoefficients")
      .def(py::init([](const Mat& coeffs) {
        PceCoefficients c;
        c.coeffs = coeffs;
        return c;
      }))
      .def_readwrite("coeffs", &PceCoefficients::coeffs)
      .def("mean", &PceCoefficients::mean)
      .def("variance", &PceCoefficients::variance);

  py::class_<BasisBuildResult>(m, "BasisBuildResult")
      .def_readonly("basis", &BasisBuildResult::basis)
      .def_readonly("res_forecast", &BasisBuildResult::res_forecast)
      .def_readonly("fits", &BasisBuildResult::fits)
      .def_readonly("covariance", &BasisBuildResult::covariance);

  m.def("build_basis",
        [](const std::vector<ForecastRecord>& recs, const Mat& corr) {
          return build_basis(recs, corr);
        });
  m.def("evaluate", &evaluate);
  m.def("evaluate_samples", &evaluate_samples);
  m.def("participation_factors", &participation_factors);
  m.def("rebalance_dispatch", &rebalance_dispatch);
  m.def(
      "market_clearing_pce",
      [](const PceCoefficients& res, const Network& net, const Vec& base,
         const Vec& demand) { return market_clearing_pce(res, net, base, demand); },
      py::arg("res_coeffs"), py::arg("net"), py::arg("base_dispatch"),
      py::arg("p_demand"));

  m.def("lambda_of_eps", &lambda_of_eps);

  py::enum_<SolveStatus>(m, "SolveStatus")
      .value("optimal", SolveStatus::optimal)
      .value("infeasible", SolveStatus::infeasible)
      .value("unbounded", SolveStatus::unbounded)
      .value("numerical_failure", SolveStatus::numerical_failure);

  py::class_<SolveReport>(m, "SolveReport")
      .def_readonly("status", &SolveReport::status)
      .def_readonly("solution", &SolveReport::solution)
      .def_readonly("objective", &SolveReport::objective)
      .def_readonly("iterations", &SolveReport::iterations)
      .def_readonly("primal_residual", &SolveReport::primal_residual)
      .def_readonly("dual_residual", &SolveReport::dual_residual);

  py::class_<DetSolution>(m, "DetSolution")
      .def_readonly("p_up", &DetSolution::p_up)
      .def_readonly("p_down", &DetSolution::p_down)
      .def_readonly("curtail", &DetSolution::curtail)
      .def_readonly("p_gen", &DetSolution::p_gen)
      .def_readonly("p_res", &DetSolution::p_res)
      .def_readonly("objective", &DetSolution::objective)
      .def_readonly("report", &DetSolution::report);

  py::class_<StochSolution>(m, "StochSolution")
      .def_readonly("up_coeffs", &StochSolution::up_coeffs)
      .def_readonly("down_coeffs", &StochSolution::down_coeffs)
      .def_readonly("curtail_coeffs", &StochSolution::curtail_coeffs)
      .def_readonly("p_gen", &StochSolution::p_gen)
      .def_readonly("p_res", &StochSolution::p_res)
      .def_readonly("p_flow", &StochSolution::p_flow)
      .def_readonly("expected_objective", &StochSolution::expected_objective)
      .def_readonly("report", &StochSolution::report);

  py::class_<IterationRow>(m, "IterationRow")
      .def_readonly("iteration", &IterationRow::iteration)
      .def_readonly("empty", &IterationRow::empty)
      .def_readonly("outage_label", &IterationRow::outage_label)
      .def_readonly("branches_label", &IterationRow::branches_label)
      .def_readonly("max_mean_violation", &IterationRow::max_mean_violation)
      .def_readonly("pct_samples_violating", &IterationRow::pct_samples_violating);

  py::class_<IterationLog>(m, "IterationLog")
      .def_readonly("rows", &IterationLog::rows)
      .def("to_csv", &IterationLog::to_csv);

  py::class_<CbcoRecord>(m, "CbcoRecord")
      .def_readonly("outage_branch", &CbcoRecord::outage_branch)
      .def_readonly("branches", &CbcoRecord::branches)
      .def_readonly("violations", &CbcoRecord::violations)
      .def_readonly("frequencies", &CbcoRecord::frequencies);

  m.def("cbco_analysis", &cbco_analysis, py::arg("net"), py::arg("screener"),
        py::arg("p_gen"), py::arg("p_res"), py::arg("p_demand"),
        py::arg("threshold") = 1e-4);
  m.def("eps_cbco_analysis", &eps_cbco_analysis, py::arg("net"),
        py::arg("screener"), py::arg("p_net"), py::arg("basis"),
        py::arg("p_demand"), py::arg("eps"), py::arg("omegas"),
        py::arg("jobs") = 1);

  m.def(
      "run_deterministic",
      [](const Network& net, const OutageScreener& scr, const Vec& bg,
         const Vec& br, const Vec& pd, int max_iters) {
        DriverOptions o;
        o.max_iters = max_iters;
        return run_deterministic(net, scr, bg, br, pd, o);
      },
      py::arg("net"), py::arg("screener"), py::arg("base_gen"),
      py::arg("base_res"), py::arg("p_demand"), py::arg("max_iters") = 50);

  m.def(
      "run_stochastic",
      [](const Network& net, const OutageScreener& scr,
         const PceCoefficients& bg, const PceCoefficients& br, const Vec& pd,
         double eps, const PceBasis& basis, const Mat& omegas, int max_iters,
         int jobs) {
        DriverOptions o;
        o.max_iters = max_iters;
        o.jobs = jobs;
        return run_stochastic(net, scr, bg, br, pd, eps, basis, omegas, o);
      },
      py::arg("net"), py::arg("screener"), py::arg("base_gen"),
      py::arg("base_res"), py::arg("p_demand"), py::arg("eps"), py::arg("basis"),
      py::arg("omegas"), py::arg("max_iters") = 50, py::arg("jobs") = 1);

  py::class_<EnsembleResult>(m, "EnsembleResult")
      .def_readonly("gen_dispatch", &EnsembleResult::gen_dispatch)
      .def_readonly("res_dispatch", &EnsembleResult::res_dispatch)
      .def_readonly("objectives", &EnsembleResult::objectives)
      .def_readonly("failed_samples", &EnsembleResult::failed_samples)
      .def("gen_mean", &EnsembleResult::gen_mean)
      .def("gen_std", &EnsembleResult::gen_std);

  m.def(
      "run_mc",
      [](const Network& net, const OutageScreener& scr, const PceBasis& basis,
         const PceCoefficients& bg, const PceCoefficients& br, const Vec& pd,
         const Mat& omegas, int jobs) {
        McOptions o;
        o.jobs = jobs;
        return run_mc(net, scr, basis, bg, br, pd, omegas, o);
      },
      py::arg("net"), py::arg("screener"), py::arg("basis"),
      py::arg("base_gen"), py::arg("base_res"), py::arg("p_demand"),
      py::arg("omegas"), py::arg("jobs") = 1);

  py::class_<ComparisonRow>(m, "ComparisonRow")
      .def_readonly("gen_index", &ComparisonRow::gen_index)
      .def_readonly("mean_pce", &ComparisonRow::mean_pce)
      .def_readonly("mean_mc", &ComparisonRow::mean_mc)
      .def_readonly("std_pce", &ComparisonRow::std_pce)
      .def_readonly("std_mc", &ComparisonRow::std_mc);
  m.def("compare", &compare);

#ifdef REDOPT_VERSION
  m.attr("__version__") = REDOPT_VERSION;
#else
  m.attr("__version__") = "dev";
#endif
}
