#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "redopt/case_parser.hpp"
#include "redopt/network.hpp"

namespace redopt {

// Shape parameters of a Beta marginal on [0,1] plus the MW support
// transform x = offset + scale * omega.
struct BetaParams {
  double alpha = 1.0;
  double beta = 1.0;
  double offset = 0.0; // a [MW]
  double scale = 1.0;  // c = b - a [MW]

  double mean01() const { return alpha / (alpha + beta); }
  // Closed-form standard deviation of Beta(alpha, beta) on [0,1].
  double std01() const;
};

// CDF / inverse CDF of Beta(alpha, beta) on [0,1]. The inverse is a
// monotone bisection on the regularized incomplete beta function,
// resolved to 1e-10.
double beta_cdf(double alpha, double beta, double x);
double beta_quantile(double alpha, double beta, double p);

struct FitOptions {
  double alpha_max = 100.0;
  double beta_max = 100.0;
  double param_min = 1e-2;        // keeps the box away from the invalid 0 edge
  double objective_threshold = 1e-4; // FitDivergence above this
  double degenerate_tol = 1e-10;  // DegenerateData when q95-q5 below this
};

struct FitResult {
  double alpha = 0.0;
  double beta = 0.0;
  double objective = 0.0; // final squared-mismatch value
};

// Fits Beta shape parameters to (mu, q5, q95) on [0,1] by minimizing the
// squared quantile/mean mismatch inside the box, via a multistart
// derivative-free local search. Throws DegenerateData / FitDivergence.
FitResult fit_beta(double mu, double q5, double q95, const FitOptions& opts = {});

// Affine multi-index set {alpha : |alpha| <= 1}; element 0 is the zero
// multi-index, element j is the unit index of dimension j-1.
struct MultiIndexSet {
  int n_dims = 0;
  int size() const { return n_dims + 1; }
};

// Per-dimension marginals plus the first-order polynomial evaluation rule
// used by every PCE in a run. The stored polynomials are the first-order
// Jacobi polynomials standardized to unit variance, so a coefficient
// matrix reproduces its covariance exactly under sampling.
struct PceBasis {
  MultiIndexSet index_set;
  std::vector<BetaParams> marginals; // size n_dims

  int n_terms() const { return index_set.size(); }

  // phi for the unit multi-index of dimension j at omega in [0,1].
  double phi1(int j, double omega) const;
  // Largest |phi1| over the support, for interval bounds.
  double phi1_max_abs(int j) const;

  // n x |M| matrix [1, phi1(0, w0), ..., phi1(d-1, w_{d-1})] per sample row.
  Mat design_matrix(const Mat& omegas) const;

  // n x n_dims i.i.d. draws, dimension j ~ Beta(alpha_j, beta_j).
  // Deterministic for a fixed (seed, stream).
  Mat sample(std::size_t n, std::uint64_t seed, std::uint64_t stream = 0) const;
};

// Coefficients of a vector-valued random variable over a shared basis.
// Column 0 is the mean.
struct PceCoefficients {
  Mat coeffs; // n_x x |M|

  Eigen::Index dim() const { return coeffs.rows(); }
  Eigen::Index n_terms() const { return coeffs.cols(); }
  Vec mean() const { return coeffs.col(0); }
  // Row-wise sum of squares over the non-mean columns.
  Vec variance() const;
};

struct BasisBuildResult {
  PceBasis basis;
  PceCoefficients res_forecast; // |R| x |M| coefficients of P_R
  std::vector<FitResult> fits;  // per-unit fit diagnostics
  Mat covariance;               // assembled MW^2 covariance
};

// Fits every marginal, assembles the MW-scale covariance from the
// correlation matrix, and takes its Cholesky factor as the first-order
// coefficient block. Throws NotPSD if the covariance fails to factor.
BasisBuildResult build_basis(const std::vector<ForecastRecord>& records,
                             const Mat& correlation,
                             const FitOptions& opts = {});

// Realization sum_ceof x^alpha phi^alpha(omega). Throws OutOfSupport if any
// omega_j falls outside [0,1].
Vec evaluate(const PceCoefficients& x, const PceBasis& basis, const Vec& omega);

// Realizations for many samples at once: n x n_x.
Mat evaluate_samples(const PceCoefficients& x, const PceBasis& basis,
                     const Mat& omegas);

struct MarketClearingOptions {
  // Participation weights; empty means proportional to p_max.
  Vec weights;
  double balance_tol = 1e-6; // MW
};

// PCE coefficients of the conventional market clearing: mean column is the
// (rebalanced) base dispatch; each higher-order column offsets the RES
// column sum through the participation factors so power conservation holds
// coefficient-wise. Throws Unbalanced if the alpha=0 residual exceeds the
// tolerance after rebalancing is disabled.
PceCoefficients market_clearing_pce(const PceCoefficients& res_coeffs,
                                    const Network& net, const Vec& base_dispatch,
                                    const Vec& p_demand,
                                    const MarketClearingOptions& opts = {});

// Capacity-proportional participation factors.
Vec participation_factors(const Network& net);

// Case-file dispatch rebalanced through the participation factors so that
// conservation holds at the mean.
Vec rebalance_dispatch(const Network& net, const Vec& dispatch,
                       const Vec& res_mean, const Vec& p_demand,
                       const Vec& weights);

}  // namespace redopt
