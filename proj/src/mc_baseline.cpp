#include "redopt/mc_baseline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>

#include "redopt/errors.hpp"
#include "redopt/util.hpp"

namespace redopt {

namespace {

// Clamps a realized dispatch into [0, p_max] and redistributes the clipped
// power over units with headroom, capacity-proportionally, so conservation
// survives. Returns false if redistribution cannot close the gap.
bool clip_and_rebalance(const Network& net, Vec& p, bool& clipped) {
  const auto ng = p.size();
  double target = p.sum();
  for (Eigen::Index i = 0; i < ng; ++i) {
    double pmax = net.generators[static_cast<std::size_t>(i)].p_max;
    double c = std::clamp(p(i), 0.0, pmax);
    if (c != p(i)) clipped = true;
    p(i) = c;
  }
  if (!clipped) return true;
  for (int pass = 0; pass < 20; ++pass) {
    double resid = target - p.sum();
    if (std::abs(resid) < 1e-9) return true;
    double room = 0.0;
    for (Eigen::Index i = 0; i < ng; ++i) {
      double pmax = net.generators[static_cast<std::size_t>(i)].p_max;
      room += resid > 0 ? pmax - p(i) : p(i);
    }
    if (room <= 1e-12) return false;
    for (Eigen::Index i = 0; i < ng; ++i) {
      double pmax = net.generators[static_cast<std::size_t>(i)].p_max;
      double share = (resid > 0 ? pmax - p(i) : p(i)) / room;
      p(i) = std::clamp(p(i) + resid * share, 0.0, pmax);
    }
  }
  return std::abs(target - p.sum()) < 1e-6;
}

}  // namespace

Vec EnsembleResult::gen_mean() const {
  return gen_dispatch.colwise().mean();
}

Vec EnsembleResult::gen_std() const {
  Vec mean = gen_mean();
  Vec out(gen_dispatch.cols());
  const double n = static_cast<double>(gen_dispatch.rows());
  for (Eigen::Index c = 0; c < gen_dispatch.cols(); ++c)
    out(c) = std::sqrt((gen_dispatch.col(c).array() - mean(c)).square().sum() /
                       (n - 1.0));
  return out;
}

EnsembleResult run_mc(const Network& net, const OutageScreener& screener,
                      const PceBasis& basis, const PceCoefficients& base_gen,
                      const PceCoefficients& base_res, const Vec& p_demand,
                      const Mat& omegas, const McOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto n_samples = omegas.rows();
  const auto ng = static_cast<Eigen::Index>(net.generators.size());
  const auto nr = static_cast<Eigen::Index>(net.res_units.size());

  Mat gen_base = evaluate_samples(base_gen, basis, omegas); // N x |G|
  Mat res_base = evaluate_samples(base_res, basis, omegas); // N x |R|

  EnsembleResult out;
  out.gen_dispatch = Mat::Zero(n_samples, ng);
  out.res_dispatch = Mat::Zero(n_samples, nr);
  out.objectives = Vec::Zero(n_samples);
  out.iterations.assign(static_cast<std::size_t>(n_samples), 0);

  std::vector<char> failed(static_cast<std::size_t>(n_samples), 0);
  std::atomic<int> clipped_count{0};

  DriverOptions driver = opts.driver;
  driver.jobs = 1; // parallelism lives at the sample level

  parallel_for(static_cast<std::size_t>(n_samples), opts.jobs, [&](std::size_t s) {
    const auto row = static_cast<Eigen::Index>(s);
    Vec pg = gen_base.row(row);
    Vec pr = res_base.row(row);
    bool clipped = false;
    if (!clip_and_rebalance(net, pg, clipped)) {
      failed[s] = 1;
      return;
    }
    if (clipped) {
      ++clipped_count;
      if (opts.reject_out_of_range) {
        failed[s] = 1;
        return;
      }
    }
    try {
      auto [sol, log] =
          run_deterministic(net, screener, pg, pr, p_demand, driver);
      out.gen_dispatch.row(row) = sol.p_gen;
      out.res_dispatch.row(row) = sol.p_res;
      out.objectives(row) = sol.objective;
      out.iterations[s] = log.rows.empty() ? 0 : log.rows.back().iteration;
    } catch (const Error&) {
      failed[s] = 1;
    }
  });

  out.clipped_samples = clipped_count.load();
  for (std::size_t s = 0; s < failed.size(); ++s)
    if (failed[s]) out.failed_samples.push_back(static_cast<int>(s));
  if (!out.failed_samples.empty()) {
    warn(std::to_string(out.failed_samples.size()) +
         " of " + std::to_string(n_samples) +
         " Monte-Carlo samples failed and were excluded");
    // compact the ensemble to successful samples only
    const auto kept = n_samples - static_cast<Eigen::Index>(out.failed_samples.size());
    Mat gd(kept, ng), rd(kept, nr);
    Vec obj(kept);
    std::vector<int> iters;
    Eigen::Index w = 0;
    for (Eigen::Index s = 0; s < n_samples; ++s) {
      if (failed[static_cast<std::size_t>(s)]) continue;
      gd.row(w) = out.gen_dispatch.row(s);
      rd.row(w) = out.res_dispatch.row(s);
      obj(w) = out.objectives(s);
      iters.push_back(out.iterations[static_cast<std::size_t>(s)]);
      ++w;
    }
    out.gen_dispatch = std::move(gd);
    out.res_dispatch = std::move(rd);
    out.objectives = std::move(obj);
    out.iterations = std::move(iters);
  }
  if (out.clipped_samples > 0)
    warn(std::to_string(out.clipped_samples) +
         " samples had base dispatch clipped into [0, p_max]");

  out.wall_time_s = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
  return out;
}

std::vector<ComparisonRow> compare(const EnsembleResult& ensemble,
                                   const StochSolution& stoch,
                                   const PceBasis& basis, const Mat& omegas) {
  Mat pce_samples = evaluate_samples(stoch.p_gen, basis, omegas); // N x |G|
  const auto ng = pce_samples.cols();
  const double n = static_cast<double>(pce_samples.rows());

  std::vector<ComparisonRow> rows;
  rows.reserve(static_cast<std::size_t>(ng));
  Vec mc_mean = ensemble.gen_mean();
  Vec mc_std = ensemble.gen_std();
  for (Eigen::Index g = 0; g < ng; ++g) {
    ComparisonRow r;
    r.gen_index = static_cast<int>(g);
    r.mean_pce = pce_samples.col(g).mean();
    r.std_pce = std::sqrt(
        (pce_samples.col(g).array() - r.mean_pce).square().sum() / (n - 1.0));
    r.mean_mc = mc_mean(g);
    r.std_mc = mc_std(g);
    rows.push_back(r);
  }
  return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream os;
  os << "generator,mean_pce,mean_mc,std_pce,std_mc\n";
  for (const auto& r : rows)
    os << r.gen_index + 1 << "," << fmt6(r.mean_pce) << "," << fmt6(r.mean_mc)
       << "," << fmt6(r.std_pce) << "," << fmt6(r.std_mc) << "\n";
  return os.str();
}

std::string density_csv(const EnsembleResult& ensemble, const StochSolution& stoch,
                        const PceBasis& basis, const Mat& omegas, int gen_index) {
  Vec pce = (evaluate_samples(stoch.p_gen, basis, omegas)).col(gen_index);
  Vec mc = ensemble.gen_dispatch.col(gen_index);

  // Freedman-Diaconis width from the pooled samples
  Vec pooled(pce.size() + mc.size());
  pooled << pce, mc;
  std::sort(pooled.begin(), pooled.end());
  auto quantile = [&](double q) {
    double idx = q * static_cast<double>(pooled.size() - 1);
    auto lo = static_cast<Eigen::Index>(idx);
    double frac = idx - static_cast<double>(lo);
    return pooled(lo) * (1 - frac) +
           pooled(std::min(lo + 1, pooled.size() - 1)) * frac;
  };
  double iqr = quantile(0.75) - quantile(0.25);
  double width = 2.0 * iqr / std::cbrt(static_cast<double>(pooled.size()));
  double lo = pooled(0), hi = pooled(pooled.size() - 1);
  if (width <= 0.0 || hi - lo < 1e-12) width = std::max(1e-6, (hi - lo) / 20.0);
  int bins = std::max(1, static_cast<int>(std::ceil((hi - lo) / width)));
  bins = std::min(bins, 400);
  width = (hi - lo) / bins;
  if (width <= 0.0) {
    width = 1e-6;
    bins = 1;
  }

  Vec dens_pce = Vec::Zero(bins), dens_mc = Vec::Zero(bins);
  auto accumulate = [&](const Vec& v, Vec& dens) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      int bin = std::clamp(static_cast<int>((v(i) - lo) / width), 0, bins - 1);
      dens(bin) += 1.0;
    }
    dens /= static_cast<double>(v.size()) * width;
  };
  accumulate(pce, dens_pce);
  accumulate(mc, dens_mc);

  std::ostringstream os;
  os << "bin_center,density_pce,density_mc\n";
  for (int b = 0; b < bins; ++b)
    os << fmt6(lo + (b + 0.5) * width) << "," << fmt6(dens_pce(b)) << ","
       << fmt6(dens_mc(b)) << "\n";
  return os.str();
}

std::string ensemble_csv(const EnsembleResult& ensemble) {
  std::ostringstream os;
  os << "sample";
  for (Eigen::Index g = 0; g < ensemble.gen_dispatch.cols(); ++g)
    os << ",gen" << g + 1;
  os << ",objective,iterations\n";
  for (Eigen::Index s = 0; s < ensemble.gen_dispatch.rows(); ++s) {
    os << s;
    for (Eigen::Index g = 0; g < ensemble.gen_dispatch.cols(); ++g)
      os << "," << fmt6(ensemble.gen_dispatch(s, g));
    os << "," << fmt6(ensemble.objectives(s)) << ","
       << ensemble.iterations[static_cast<std::size_t>(s)] << "\n";
  }
  return os.str();
}

}  // namespace redopt
