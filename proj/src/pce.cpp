#include "redopt/pce.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "redopt/errors.hpp"
#include "redopt/util.hpp"

namespace redopt {

double BetaParams::std01() const {
  double s = alpha + beta;
  return std::sqrt(alpha * beta / (s * s * (s + 1.0)));
}

double beta_cdf(double alpha, double beta, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return boost::math::ibeta(alpha, beta, x);
}

double beta_quantile(double alpha, double beta, double p) {
  if (!(p > 0.0 && p < 1.0))
    throw DomainError("quantile probability must lie in (0,1)");
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-10) {
    double mid = 0.5 * (lo + hi);
    if (beta_cdf(alpha, beta, mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

struct FitTargets {
  double mu, q5, q95;
};

double fit_objective(double a, double b, const FitTargets& t) {
  double e5 = beta_quantile(a, b, 0.05) - t.q5;
  double e95 = beta_quantile(a, b, 0.95) - t.q95;
  double em = a / (a + b) - t.mu;
  return e5 * e5 + e95 * e95 + em * em;
}

using Point = std::array<double, 2>;

Point clamp_box(Point p, const FitOptions& o) {
  p[0] = std::clamp(p[0], o.param_min, o.alpha_max);
  p[1] = std::clamp(p[1], o.param_min, o.beta_max);
  return p;
}

// Nelder-Mead on the clamped box, followed by a compass polish with
// shrinking steps. Two dimensions, so the simplex logic stays simple.
std::pair<Point, double> local_search(Point start, const FitTargets& t,
                                      const FitOptions& o) {
  auto f = [&](const Point& p) { return fit_objective(p[0], p[1], t); };

  std::array<Point, 3> xs = {start, start, start};
  xs[1][0] = std::min(o.alpha_max, start[0] * 1.3 + 0.05);
  xs[2][1] = std::min(o.beta_max, start[1] * 1.3 + 0.05);
  std::array<double, 3> fs = {f(xs[0]), f(xs[1]), f(xs[2])};

  auto order = [&] {
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2 - i; ++j)
        if (fs[j] > fs[j + 1]) {
          std::swap(fs[j], fs[j + 1]);
          std::swap(xs[j], xs[j + 1]);
        }
  };
  order();

  for (int it = 0; it < 250; ++it) {
    double spread = fs[2] - fs[0];
    double size = std::max(std::abs(xs[2][0] - xs[0][0]) + std::abs(xs[1][0] - xs[0][0]),
                           std::abs(xs[2][1] - xs[0][1]) + std::abs(xs[1][1] - xs[0][1]));
    if (spread < 1e-16 && size < 1e-9) break;

    Point c = {0.5 * (xs[0][0] + xs[1][0]), 0.5 * (xs[0][1] + xs[1][1])};
    auto along = [&](double s) {
      return clamp_box({c[0] + s * (c[0] - xs[2][0]), c[1] + s * (c[1] - xs[2][1])}, o);
    };
    Point xr = along(1.0);
    double fr = f(xr);
    if (fr < fs[0]) {
      Point xe = along(2.0);
      double fe = f(xe);
      if (fe < fr) {
        xs[2] = xe;
        fs[2] = fe;
      } else {
        xs[2] = xr;
        fs[2] = fr;
      }
    } else if (fr < fs[1]) {
      xs[2] = xr;
      fs[2] = fr;
    } else {
      Point xc = along(fr < fs[2] ? 0.5 : -0.5);
      double fc = f(xc);
      if (fc < std::min(fr, fs[2])) {
        xs[2] = xc;
        fs[2] = fc;
      } else {
        for (int i = 1; i < 3; ++i) {
          xs[i] = clamp_box({0.5 * (xs[i][0] + xs[0][0]), 0.5 * (xs[i][1] + xs[0][1])}, o);
          fs[i] = f(xs[i]);
        }
      }
    }
    order();
  }

  Point best = xs[0];
  double fbest = fs[0];
  for (double h = 1e-3; h >= 1e-9; h *= 0.25) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (int d = 0; d < 2; ++d) {
        for (double s : {+1.0, -1.0}) {
          Point cand = best;
          cand[d] += s * h;
          cand = clamp_box(cand, o);
          double fc = f(cand);
          if (fc < fbest) {
            best = cand;
            fbest = fc;
            improved = true;
          }
        }
      }
    }
  }
  return {best, fbest};
}

}  // namespace

FitResult fit_beta(double mu, double q5, double q95, const FitOptions& opts) {
  if (q95 - q5 < opts.degenerate_tol)
    throw DegenerateData("q95 - q5 below tolerance; quantiles carry no spread");
  if (!(q5 > 0.0 && q5 <= mu && mu <= q95 && q95 < 1.0))
    throw ValidationError("scaled forecast data must satisfy 0 < q5 <= mu <= q95 < 1");

  FitTargets t{mu, q5, q95};
  double m = std::clamp(mu, 0.02, 0.98);

  FitResult best;
  best.objective = std::numeric_limits<double>::infinity();
  for (double s : {2.0, 8.0, 32.0, 128.0}) {
    Point start = clamp_box({m * s, (1.0 - m) * s}, opts);
    auto [p, fp] = local_search(start, t, opts);
    if (fp < best.objective) {
      best.alpha = p[0];
      best.beta = p[1];
      best.objective = fp;
    }
    if (best.objective < 1e-18) break;
  }
  if (best.objective > opts.objective_threshold)
    throw FitDivergence("beta fit residual " + fmt6(best.objective) +
                        " exceeds threshold " + fmt6(opts.objective_threshold));
  return best;
}

double PceBasis::phi1(int j, double omega) const {
  const BetaParams& m = marginals[static_cast<std::size_t>(j)];
  return (omega - m.mean01()) / m.std01();
}

double PceBasis::phi1_max_abs(int j) const {
  const BetaParams& m = marginals[static_cast<std::size_t>(j)];
  return std::max(m.mean01(), 1.0 - m.mean01()) / m.std01();
}

Mat PceBasis::design_matrix(const Mat& omegas) const {
  if (omegas.cols() != index_set.n_dims)
    throw DimensionMismatch("omega matrix has wrong dimension count");
  Mat d(omegas.rows(), n_terms());
  d.col(0).setOnes();
  for (int j = 0; j < index_set.n_dims; ++j) {
    const BetaParams& m = marginals[static_cast<std::size_t>(j)];
    d.col(j + 1) = (omegas.col(j).array() - m.mean01()) / m.std01();
  }
  return d;
}

Mat PceBasis::sample(std::size_t n, std::uint64_t seed, std::uint64_t stream) const {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::mt19937_64 rng(seq);
  Mat out(static_cast<Eigen::Index>(n), index_set.n_dims);
  std::vector<std::gamma_distribution<double>> ga, gb;
  for (const auto& m : marginals) {
    ga.emplace_back(m.alpha, 1.0);
    gb.emplace_back(m.beta, 1.0);
  }
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (int j = 0; j < index_set.n_dims; ++j) {
      double x = ga[static_cast<std::size_t>(j)](rng);
      double y = gb[static_cast<std::size_t>(j)](rng);
      out(i, j) = x / (x + y);
    }
  return out;
}

Vec PceCoefficients::variance() const {
  if (coeffs.cols() < 2) return Vec::Zero(coeffs.rows());
  return coeffs.rightCols(coeffs.cols() - 1).array().square().rowwise().sum();
}

BasisBuildResult build_basis(const std::vector<ForecastRecord>& records,
                             const Mat& correlation, const FitOptions& opts) {
  const auto nr = static_cast<Eigen::Index>(records.size());
  if (correlation.rows() != nr || correlation.cols() != nr)
    throw DimensionMismatch("correlation matrix does not match record count");

  BasisBuildResult out;
  out.basis.index_set.n_dims = static_cast<int>(nr);
  out.basis.marginals.resize(records.size());
  out.fits.resize(records.size());

  Vec sigma_mw(nr);
  for (Eigen::Index j = 0; j < nr; ++j) {
    const auto& rec = records[static_cast<std::size_t>(j)];
    double c = rec.hi - rec.lo;
    double mu_s = (rec.mu - rec.lo) / c;
    double q5_s = (rec.q5 - rec.lo) / c;
    double q95_s = (rec.q95 - rec.lo) / c;
    FitResult fit = fit_beta(mu_s, q5_s, q95_s, opts);
    out.fits[static_cast<std::size_t>(j)] = fit;
    BetaParams& m = out.basis.marginals[static_cast<std::size_t>(j)];
    m.alpha = fit.alpha;
    m.beta = fit.beta;
    m.offset = rec.lo;
    m.scale = c;
    sigma_mw(j) = c * m.std01();
  }

  out.covariance = correlation.cwiseProduct(sigma_mw * sigma_mw.transpose());

  Mat first_order;
  Eigen::LLT<Mat> llt(out.covariance);
  if (llt.info() == Eigen::Success) {
    first_order = llt.matrixL();
  } else {
    // Semidefinite fallback: pivoted LDL^T with negative pivots clamped
    // (within tolerance); the factor still reproduces the covariance.
    Eigen::LDLT<Mat> ldlt(out.covariance);
    Vec d = ldlt.vectorD();
    double scale = out.covariance.diagonal().maxCoeff();
    if (d.minCoeff() < -1e-8 * std::max(1.0, scale))
      throw NotPSD("covariance matrix is not positive semidefinite");
    Mat l = ldlt.matrixL();
    Mat pl = ldlt.transpositionsP().transpose() * l;
    first_order = pl * d.cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }

  out.res_forecast.coeffs.resize(nr, nr + 1);
  for (Eigen::Index j = 0; j < nr; ++j)
    out.res_forecast.coeffs(j, 0) = records[static_cast<std::size_t>(j)].mu;
  out.res_forecast.coeffs.rightCols(nr) = first_order;
  return out;
}

Vec evaluate(const PceCoefficients& x, const PceBasis& basis, const Vec& omega) {
  if (omega.size() != basis.index_set.n_dims)
    throw DimensionMismatch("omega has wrong dimension");
  if (x.coeffs.cols() != basis.n_terms())
    throw DimensionMismatch("coefficient columns do not match basis terms");
  for (Eigen::Index j = 0; j < omega.size(); ++j)
    if (omega(j) < 0.0 || omega(j) > 1.0)
      throw OutOfSupport("omega_" + std::to_string(j) + " outside [0,1]");
  Vec out = x.coeffs.col(0);
  for (int j = 0; j < basis.index_set.n_dims; ++j)
    out += x.coeffs.col(j + 1) * basis.phi1(j, omega(j));
  return out;
}

Mat evaluate_samples(const PceCoefficients& x, const PceBasis& basis,
                     const Mat& omegas) {
  return basis.design_matrix(omegas) * x.coeffs.transpose();
}

Vec participation_factors(const Network& net) {
  Vec w(static_cast<Eigen::Index>(net.generators.size()));
  for (std::size_t i = 0; i < net.generators.size(); ++i)
    w(static_cast<Eigen::Index>(i)) = net.generators[i].p_max;
  double total = w.sum();
  if (total <= 0.0) throw ValidationError("total generator capacity must be positive");
  return w / total;
}

Vec rebalance_dispatch(const Network& net, const Vec& dispatch,
                       const Vec& res_mean, const Vec& p_demand,
                       const Vec& weights) {
  double residual = p_demand.sum() - dispatch.sum() - res_mean.sum();
  Vec out = dispatch + weights * residual;
  for (std::size_t i = 0; i < net.generators.size(); ++i) {
    double v = out(static_cast<Eigen::Index>(i));
    if (v < -1e-9 || v > net.generators[i].p_max + 1e-9)
      warn("rebalanced base dispatch of generator at bus " +
           std::to_string(net.generators[i].bus) + " (" + fmt6(v) +
           " MW) leaves [0, p_max]");
  }
  return out;
}

PceCoefficients market_clearing_pce(const PceCoefficients& res_coeffs,
                                    const Network& net, const Vec& base_dispatch,
                                    const Vec& p_demand,
                                    const MarketClearingOptions& opts) {
  const auto ng = static_cast<Eigen::Index>(net.generators.size());
  if (base_dispatch.size() != ng)
    throw DimensionMismatch("base dispatch size does not match generator count");

  Vec w = opts.weights.size() ? opts.weights : participation_factors(net);
  if (w.size() != ng) throw DimensionMismatch("participation factor size mismatch");
  if (w.minCoeff() < 0.0 || std::abs(w.sum() - 1.0) > 1e-9)
    throw ValidationError("participation factors must be nonnegative and sum to 1");

  double residual = base_dispatch.sum() + res_coeffs.mean().sum() - p_demand.sum();
  if (std::abs(residual) > opts.balance_tol)
    throw Unbalanced("mean balance residual " + fmt6(residual) + " MW");

  PceCoefficients out;
  out.coeffs.resize(ng, res_coeffs.n_terms());
  out.coeffs.col(0) = base_dispatch;
  for (Eigen::Index a = 1; a < res_coeffs.n_terms(); ++a)
    out.coeffs.col(a) = -w * res_coeffs.coeffs.col(a).sum();
  return out;
}

}  // namespace redopt
