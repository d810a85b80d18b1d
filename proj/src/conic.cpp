#include "redopt/conic.hpp"
#include <cstdio>

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "redopt/errors.hpp"

namespace redopt {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

ConicProblem ConicProblem::make(Eigen::Index n) {
  ConicProblem p;
  p.n = n;
  p.quadratic.resize(n, n);
  p.linear = Vec::Zero(n);
  p.eq.resize(0, n);
  p.eq_rhs.resize(0);
  p.lower = Vec::Constant(n, -kInf);
  p.upper = Vec::Constant(n, kInf);
  return p;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

namespace {

// Cone layout of the inequality block: first `l` nonnegative rows, then
// second-order cones of the given dimensions.
struct ConeLayout {
  Eigen::Index l = 0;
  std::vector<Eigen::Index> soc;
  Eigen::Index total = 0;
  Eigen::Index degree() const { return l + static_cast<Eigen::Index>(soc.size()); }
};

// Nesterov-Todd scaling state. For nonnegative rows W = diag(w); for each
// SOC, W = eta * H(wbar) with the hyperbolic Householder matrix H.
struct Scaling {
  Vec w;                  // nonneg part, size l
  std::vector<double> eta;
  std::vector<Vec> wbar;  // per cone, wbar0^2 - |wbar1|^2 = 1
};

struct BlockOps {
  const ConeLayout& lay;

  template <typename F>
  void per_soc(F&& f) const {
    Eigen::Index off = lay.l;
    for (std::size_t k = 0; k < lay.soc.size(); ++k) {
      f(k, off, lay.soc[k]);
      off += lay.soc[k];
    }
  }

  // Largest step in [0, cap] keeping u + alpha*du in the cone.
  double max_step(const Vec& u, const Vec& du, double cap) const {
    double alpha = cap;
    for (Eigen::Index i = 0; i < lay.l; ++i)
      if (du(i) < 0.0) alpha = std::min(alpha, -u(i) / du(i));
    per_soc([&](std::size_t, Eigen::Index off, Eigen::Index dm) {
      double u0 = u(off), d0 = du(off);
      auto u1 = u.segment(off + 1, dm - 1);
      auto d1 = du.segment(off + 1, dm - 1);
      double a = d0 * d0 - d1.squaredNorm();
      double b = 2.0 * (u0 * d0 - u1.dot(d1));
      double c = u0 * u0 - u1.squaredNorm();
      double root = kInf;
      if (std::abs(a) < 1e-14) {
        if (b < 0.0) root = -c / b;
      } else {
        double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
          double sq = std::sqrt(disc);
          double r1 = (-b - sq) / (2.0 * a);
          double r2 = (-b + sq) / (2.0 * a);
          if (r1 > r2) std::swap(r1, r2);
          if (r1 > 0.0)
            root = r1;
          else if (r2 > 0.0)
            root = r2;
        } else if (a < 0.0) {
          root = 0.0;  // should not happen for interior u
        }
      }
      alpha = std::min(alpha, root);
    });
    return std::max(alpha, 0.0);
  }

  // Jordan product u o v.
  Vec jordan_mul(const Vec& u, const Vec& v) const {
    Vec out(lay.total);
    out.head(lay.l) = u.head(lay.l).cwiseProduct(v.head(lay.l));
    per_soc([&](std::size_t, Eigen::Index off, Eigen::Index dm) {
      auto u1 = u.segment(off + 1, dm - 1);
      auto v1 = v.segment(off + 1, dm - 1);
      out(off) = u.segment(off, dm).dot(v.segment(off, dm));
      out.segment(off + 1, dm - 1) = u(off) * v1 + v(off) * u1;
    });
    return out;
  }

  // Solves lambda o v = d for v.
  Vec jordan_solve(const Vec& lambda, const Vec& d) const {
    Vec out(lay.total);
    out.head(lay.l) = d.head(lay.l).cwiseQuotient(lambda.head(lay.l));
    per_soc([&](std::size_t, Eigen::Index off, Eigen::Index dm) {
      double l0 = lambda(off);
      auto l1 = lambda.segment(off + 1, dm - 1);
      double det = l0 * l0 - l1.squaredNorm();
      double v0 = (l0 * d(off) - l1.dot(d.segment(off + 1, dm - 1))) / det;
      out(off) = v0;
      out.segment(off + 1, dm - 1) =
          (d.segment(off + 1, dm - 1) - v0 * l1) / l0;
    });
    return out;
  }

  Vec identity() const {
    Vec e = Vec::Zero(lay.total);
    e.head(lay.l).setOnes();
    per_soc([&](std::size_t, Eigen::Index off, Eigen::Index) { e(off) = 1.0; });
    return e;
  }

  // Shifts a vector into the cone interior (used for initialization).
  void shift_interior(Vec& u) const {
    if (lay.l > 0) {
      double m = u.head(lay.l).minCoeff();
      if (m <= 0.0) u.head(lay.l).array() += 1.0 - m;
    }
    per_soc([&](std::size_t, Eigen::Index off, Eigen::Index dm) {
      double margin = u(off) - u.segment(off + 1, dm - 1).norm();
      if (margin <= 0.0) u(off) += 1.0 - margin;
    });
  }

  Scaling compute_scaling(const Vec& s, const Vec& z) const {
    Scaling sc;
    sc.w = (s.head(lay.l).cwiseQuotient(z.head(lay.l))).cwiseSqrt();
    sc.eta.resize(lay.soc.size());
    sc.wbar.resize(lay.soc.size());
    per_soc([&](std::size_t k, Eigen::Index off, Eigen::Index dm) {
      double rs = std::sqrt(s(off) * s(off) -
                            s.segment(off + 1, dm - 1).squaredNorm());
      double rz = std::sqrt(z(off) * z(off) -
                            z.segment(off + 1, dm - 1).squaredNorm());
      Vec sb = s.segment(off, dm) / rs;
      Vec zb = z.segment(off, dm) / rz;
      double gamma = std::sqrt((1.0 + sb.dot(zb)) / 2.0);
      Vec wb(dm);
      wb(0) = (sb(0) + zb(0)) / (2.0 * gamma);
      wb.tail(dm - 1) =
          (sb.tail(dm - 1) - zb.tail(dm - 1)) / (2.0 * gamma);
      sc.eta[k] = std::sqrt(rs / rz);
      sc.wbar[k] = std::move(wb);
    });
    return sc;
  }

  // W u (W is symmetric per block).
  Vec w_apply(const Scaling& sc, const Vec& u) const {
    Vec out(lay.total);
    out.head(lay.l) = sc.w.cwiseProduct(u.head(lay.l));
    per_soc([&](std::size_t k, Eigen::Index off, Eigen::Index dm) {
      const Vec& wb = sc.wbar[k];
      double dot1 = wb.tail(dm - 1).dot(u.segment(off + 1, dm - 1));
      out(off) = sc.eta[k] * (wb(0) * u(off) + dot1);
      out.segment(off + 1, dm - 1) =
          sc.eta[k] * (u.segment(off + 1, dm - 1) +
                       (u(off) + dot1 / (1.0 + wb(0))) * wb.tail(dm - 1));
    });
    return out;
  }

  Vec w_inv_apply(const Scaling& sc, const Vec& u) const {
    Vec out(lay.total);
    out.head(lay.l) = u.head(lay.l).cwiseQuotient(sc.w);
    per_soc([&](std::size_t k, Eigen::Index off, Eigen::Index dm) {
      const Vec& wb = sc.wbar[k];
      double dot1 = wb.tail(dm - 1).dot(u.segment(off + 1, dm - 1));
      out(off) = (wb(0) * u(off) - dot1) / sc.eta[k];
      out.segment(off + 1, dm - 1) =
          (u.segment(off + 1, dm - 1) +
           (dot1 / (1.0 + wb(0)) - u(off)) * wb.tail(dm - 1)) /
          sc.eta[k];
    });
    return out;
  }

  // W^T W u = W^2 u.
  Vec w2_apply(const Scaling& sc, const Vec& u) const {
    Vec out(lay.total);
    out.head(lay.l) =
        sc.w.cwiseProduct(sc.w).cwiseProduct(u.head(lay.l));
    per_soc([&](std::size_t k, Eigen::Index off, Eigen::Index dm) {
      const Vec& wb = sc.wbar[k];
      double e2 = sc.eta[k] * sc.eta[k];
      double dot = wb.dot(u.segment(off, dm));
      // eta^2 (2 wbar wbar^T - J) u
      out(off) = e2 * (2.0 * wb(0) * dot - u(off));
      out.segment(off + 1, dm - 1) =
          e2 * (2.0 * dot * wb.tail(dm - 1) + u.segment(off + 1, dm - 1));
    });
    return out;
  }

  // Distance-like violation of u from the cone (0 when inside).
  double cone_violation(const Vec& u) const {
    double v = 0.0;
    for (Eigen::Index i = 0; i < lay.l; ++i) v = std::max(v, -u(i));
    per_soc([&](std::size_t, Eigen::Index off, Eigen::Index dm) {
      v = std::max(v, u.segment(off + 1, dm - 1).norm() - u(off));
    });
    return v;
  }
};

struct Standardized {
  SpMat g;  // m x n
  Vec h;
  ConeLayout lay;
};

Standardized standardize(const ConicProblem& p) {
  Standardized st;
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> h;

  for (Eigen::Index i = 0; i < p.n; ++i) {
    if (p.upper.size() && p.upper(i) < kInf) {
      trips.emplace_back(static_cast<int>(h.size()), static_cast<int>(i), 1.0);
      h.push_back(p.upper(i));
    }
    if (p.lower.size() && p.lower(i) > -kInf) {
      trips.emplace_back(static_cast<int>(h.size()), static_cast<int>(i), -1.0);
      h.push_back(-p.lower(i));
    }
  }
  st.lay.l = static_cast<Eigen::Index>(h.size());

  for (const auto& cone : p.cones) {
    Eigen::Index dm = cone.a.rows() + 1;
    Eigen::Index base = static_cast<Eigen::Index>(h.size());
    // s0 = c^T z + d  ->  G row -c, h = d
    for (SpVec::InnerIterator it(cone.c); it; ++it)
      trips.emplace_back(static_cast<int>(base), static_cast<int>(it.index()),
                         -it.value());
    h.push_back(cone.d);
    // s1 = A z + b  ->  G rows -A, h = b
    for (Eigen::Index col = 0; col < cone.a.outerSize(); ++col)
      for (SpMat::InnerIterator it(cone.a, col); it; ++it)
        trips.emplace_back(static_cast<int>(base + 1 + it.row()),
                           static_cast<int>(col), -it.value());
    for (Eigen::Index r = 0; r < cone.a.rows(); ++r) h.push_back(cone.b(r));
    st.lay.soc.push_back(dm);
  }

  st.lay.total = static_cast<Eigen::Index>(h.size());
  st.g.resize(st.lay.total, p.n);
  st.g.setFromTriplets(trips.begin(), trips.end());
  st.h = Eigen::Map<Vec>(h.data(), static_cast<Eigen::Index>(h.size()));
  return st;
}

// Sparse lower-triangular KKT matrix
//   [ P + eps      .          .      ]
//   [ A         -delta        .      ]
//   [ G            0     -(W^2+delta)]
// with cached slots for the scaling-dependent block.
class KktSystem {
public:
  KktSystem(const ConicProblem& p, const Standardized& st, double reg)
      : n_(p.n), np_(p.eq.rows()), m_(st.lay.total), lay_(st.lay), reg_(reg) {
    const Eigen::Index big = n_ + np_ + m_;
    std::vector<Eigen::Triplet<double>> trips;

    for (Eigen::Index i = 0; i < big; ++i)
      trips.emplace_back(static_cast<int>(i), static_cast<int>(i),
                         i < n_ ? reg_ : -reg_);
    for (Eigen::Index col = 0; col < p.quadratic.outerSize(); ++col)
      for (SpMat::InnerIterator it(p.quadratic, col); it; ++it)
        if (it.row() >= it.col())
          trips.emplace_back(static_cast<int>(it.row()),
                             static_cast<int>(it.col()), it.value());

    for (Eigen::Index col = 0; col < p.eq.outerSize(); ++col)
      for (SpMat::InnerIterator it(p.eq, col); it; ++it)
        trips.emplace_back(static_cast<int>(n_ + it.row()),
                           static_cast<int>(it.col()), it.value());
    for (Eigen::Index col = 0; col < st.g.outerSize(); ++col)
      for (SpMat::InnerIterator it(st.g, col); it; ++it)
        trips.emplace_back(static_cast<int>(n_ + np_ + it.row()),
                           static_cast<int>(it.col()), it.value());

    // scaling block slots: nonneg diagonal, dense lower SOC blocks
    for (Eigen::Index i = 0; i < lay_.l; ++i)
      trips.emplace_back(static_cast<int>(n_ + np_ + i),
                         static_cast<int>(n_ + np_ + i), -1.0);
    Eigen::Index off = lay_.l;
    for (Eigen::Index dm : lay_.soc) {
      for (Eigen::Index c = 0; c < dm; ++c)
        for (Eigen::Index r = c; r < dm; ++r)
          trips.emplace_back(static_cast<int>(n_ + np_ + off + r),
                             static_cast<int>(n_ + np_ + off + c),
                             r == c ? -1.0 : 0.0);
      off += dm;
    }

    kkt_.resize(big, big);
    kkt_.setFromTriplets(trips.begin(), trips.end());
    kkt_.makeCompressed();

    cache_slots();
    solver_.analyzePattern(kkt_);
  }

  // Writes the current scaling into the cached slots and refactorizes.
  bool factorize(const Scaling& sc) {
    double* vals = kkt_.valuePtr();
    std::size_t slot = 0;
    for (Eigen::Index i = 0; i < lay_.l; ++i)
      vals[nn_slots_[static_cast<std::size_t>(i)]] =
          -(sc.w(i) * sc.w(i)) - reg_;
    std::size_t k = 0;
    for (Eigen::Index dm : lay_.soc) {
      const Vec& wb = sc.wbar[k];
      double e2 = sc.eta[k] * sc.eta[k];
      for (Eigen::Index c = 0; c < dm; ++c)
        for (Eigen::Index r = c; r < dm; ++r) {
          double jrc = (r == c) ? (r == 0 ? 1.0 : -1.0) : 0.0;
          double v = -e2 * (2.0 * wb(r) * wb(c) - jrc);
          if (r == c) v -= reg_;
          vals[soc_slots_[slot++]] = v;
        }
      ++k;
    }
    solver_.factorize(kkt_);
    return solver_.info() == Eigen::Success;
  }

  Vec solve(const Vec& rhs) const { return solver_.solve(rhs); }

private:
  void cache_slots() {
    auto index_of = [&](Eigen::Index r, Eigen::Index c) {
      for (Eigen::Index k = kkt_.outerIndexPtr()[c];
           k < kkt_.outerIndexPtr()[c + 1]; ++k)
        if (kkt_.innerIndexPtr()[k] == r) return k;
      throw Error("internal: missing KKT slot");
    };
    for (Eigen::Index i = 0; i < lay_.l; ++i)
      nn_slots_.push_back(index_of(n_ + np_ + i, n_ + np_ + i));
    Eigen::Index off = lay_.l;
    for (Eigen::Index dm : lay_.soc) {
      for (Eigen::Index c = 0; c < dm; ++c)
        for (Eigen::Index r = c; r < dm; ++r)
          soc_slots_.push_back(index_of(n_ + np_ + off + r, n_ + np_ + off + c));
      off += dm;
    }
  }

  Eigen::Index n_, np_, m_;
  ConeLayout lay_;
  double reg_;
  SpMat kkt_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower> solver_;
  std::vector<Eigen::Index> nn_slots_;
  std::vector<Eigen::Index> soc_slots_;
};

// Phase-1 feasibility probe: minimize the single violation slack u >= 0
// over all relaxed constraints. Always strictly feasible and bounded, so
// the IPM solves it reliably; a macroscopic optimal u certifies
// infeasibility of the original problem.
ConicProblem make_phase1(const ConicProblem& p) {
  ConicProblem f = ConicProblem::make(p.n + 1);
  const Eigen::Index u = p.n;
  f.linear(u) = 1.0;
  f.lower(u) = 0.0;

  auto linear_row = [&](const SpVec& coeffs, double rhs) {
    // 0 <= rhs - coeffs^T x + u as a one-dimensional cone
    SocConstraint c;
    c.a.resize(0, f.n);
    c.b.resize(0);
    c.c.resize(f.n);
    for (SpVec::InnerIterator it(coeffs); it; ++it)
      c.c.coeffRef(it.index()) = -it.value();
    c.c.coeffRef(u) = 1.0;
    c.d = rhs;
    f.cones.push_back(std::move(c));
  };

  for (Eigen::Index r = 0; r < p.eq.rows(); ++r) {
    SpVec row(p.n + 1);
    for (Eigen::Index col = 0; col < p.eq.outerSize(); ++col)
      for (SpMat::InnerIterator it(p.eq, col); it; ++it)
        if (it.row() == r) row.coeffRef(col) = it.value();
    linear_row(row, p.eq_rhs(r));
    SpVec neg = (-row).eval();
    linear_row(neg, -p.eq_rhs(r));
  }
  for (Eigen::Index i = 0; i < p.n; ++i) {
    if (p.upper(i) < kInf) {
      SpVec row(p.n + 1);
      row.coeffRef(i) = 1.0;
      linear_row(row, p.upper(i));
    }
    if (p.lower(i) > -kInf) {
      SpVec row(p.n + 1);
      row.coeffRef(i) = -1.0;
      linear_row(row, -p.lower(i));
    }
  }
  for (const auto& cone : p.cones) {
    SocConstraint c;
    c.a.resize(cone.a.rows(), f.n);
    std::vector<Eigen::Triplet<double>> trips;
    for (Eigen::Index col = 0; col < cone.a.outerSize(); ++col)
      for (SpMat::InnerIterator it(cone.a, col); it; ++it)
        trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(col),
                           it.value());
    c.a.setFromTriplets(trips.begin(), trips.end());
    c.b = cone.b;
    c.c.resize(f.n);
    for (SpVec::InnerIterator it(cone.c); it; ++it)
      c.c.coeffRef(it.index()) = it.value();
    c.c.coeffRef(u) = 1.0;
    c.d = cone.d;
    f.cones.push_back(std::move(c));
  }
  return f;
}

SolveReport solve_impl(const ConicProblem& p, const SolveOptions& opts,
                       bool allow_phase1);

SolveReport classify_with_phase1(const ConicProblem& p, const SolveOptions& opts,
                                 SolveReport rep) {
  SolveOptions probe_opts;
  probe_opts.tol = 1e-8;
  probe_opts.max_iterations = opts.max_iterations;
  SolveReport probe = solve_impl(make_phase1(p), probe_opts, false);
  if (probe.status != SolveStatus::optimal) return rep;

  double scale = 1.0;
  if (p.eq_rhs.size()) scale = std::max(scale, p.eq_rhs.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < p.n; ++i) {
    if (p.upper(i) < kInf) scale = std::max(scale, std::abs(p.upper(i)));
    if (p.lower(i) > -kInf) scale = std::max(scale, std::abs(p.lower(i)));
  }
  if (probe.objective > 1e-6 * scale) {
    rep.status = SolveStatus::infeasible;
  }
  return rep;
}

}  // namespace

SolveReport solve(const ConicProblem& p, const SolveOptions& opts) {
  return solve_impl(p, opts, true);
}

namespace {

SolveReport solve_impl(const ConicProblem& p, const SolveOptions& opts,
                       bool allow_phase1) {
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t_start)
        .count();
  };

  if (p.linear.size() != p.n)
    throw DimensionMismatch("objective vector size mismatch");
  if (p.eq.rows() != p.eq_rhs.size())
    throw DimensionMismatch("equality rhs size mismatch");

  Standardized st = standardize(p);
  const BlockOps ops{st.lay};
  const Eigen::Index n = p.n, np = p.eq.rows(), m = st.lay.total;

  SolveReport rep;

  const SpMat& q_mat = p.quadratic;
  const Vec& q_lin = p.linear;
  const SpMat& a_mat = p.eq;
  const Vec& b_vec = p.eq_rhs;
  const SpMat& g_mat = st.g;
  const Vec& h_vec = st.h;

  const double norm_b = std::max(1.0, b_vec.norm());
  const double norm_h = std::max(1.0, h_vec.norm());
  const double norm_q = std::max(1.0, q_lin.norm());

  KktSystem kkt(p, st, 1e-9);

  // Unregularized KKT application, for iterative refinement.
  Scaling sc;
  auto kkt_apply = [&](const Vec& v) {
    Vec out(n + np + m);
    Vec vx = v.head(n), vy = v.segment(n, np), vz = v.tail(m);
    out.head(n) = q_mat.selfadjointView<Eigen::Lower>() * vx +
                  a_mat.transpose() * vy + g_mat.transpose() * vz;
    out.segment(n, np) = a_mat * vx;
    if (m > 0) out.tail(m) = g_mat * vx - ops.w2_apply(sc, vz);
    return out;
  };
  auto kkt_solve = [&](const Vec& rhs) {
    Vec x = kkt.solve(rhs);
    for (int it = 0; it < 2; ++it) x += kkt.solve(rhs - kkt_apply(x));
    return x;
  };

  // Initialization at the identity scaling.
  sc.w = Vec::Ones(st.lay.l);
  sc.eta.assign(st.lay.soc.size(), 1.0);
  sc.wbar.clear();
  for (Eigen::Index dm : st.lay.soc) {
    Vec e = Vec::Zero(dm);
    e(0) = 1.0;
    sc.wbar.push_back(e);
  }
  if (!kkt.factorize(sc)) {
    rep.status = SolveStatus::numerical_failure;
    rep.wall_time_s = elapsed();
    return rep;
  }

  Vec x, y, s, z;
  {
    Vec rhs(n + np + m);
    rhs.head(n) = -q_lin;
    rhs.segment(n, np) = b_vec;
    rhs.tail(m) = h_vec;
    Vec sol = kkt_solve(rhs);
    x = sol.head(n);
    y = sol.segment(n, np);
    z = sol.tail(m);
    s = -z;
    ops.shift_interior(s);
    ops.shift_interior(z);
  }
  if (opts.initial_point.size() == n && m > 0) {
    x = opts.initial_point;
    s = h_vec - g_mat * x;
    ops.shift_interior(s);
  }

  const double degree = static_cast<double>(std::max<Eigen::Index>(1, st.lay.degree()));

  auto pcost_of = [&](const Vec& xv) {
    return 0.5 * xv.dot(q_mat.selfadjointView<Eigen::Lower>() * xv) +
           q_lin.dot(xv);
  };

  double best_cert_p = kInf, best_cert_d = kInf;

  for (int iter = 0; iter <= opts.max_iterations; ++iter) {
    Vec px = q_mat.selfadjointView<Eigen::Lower>() * x;
    Vec rx = px + q_lin + a_mat.transpose() * y + g_mat.transpose() * z;
    Vec ry = a_mat * x - b_vec;
    Vec rz = m > 0 ? Vec(g_mat * x + s - h_vec) : Vec();

    double gap = m > 0 ? s.dot(z) : 0.0;
    double pcost = pcost_of(x);
    double pres = std::max(ry.norm() / norm_b, m > 0 ? rz.norm() / norm_h : 0.0);
    double dres = rx.norm() / norm_q;
    double relgap = gap / std::max(1.0, std::abs(pcost));

    rep.iterations = iter;
    rep.primal_residual = pres;
    rep.dual_residual = dres;

    if (opts.verbose)
      std::fprintf(stderr,
                   "ipm %3d: pcost=%+.6e gap=%.3e pres=%.3e dres=%.3e "
                   "|y|+|z|=%.3e bty+htz=%+.3e\n",
                   iter, pcost, gap, pres, dres,
                   y.norm() + (m > 0 ? z.norm() : 0.0),
                   b_vec.dot(y) + (m > 0 ? h_vec.dot(z) : 0.0));

    if (pres <= opts.tol && dres <= opts.tol && relgap <= opts.tol) {
      rep.status = SolveStatus::optimal;
      rep.solution = x;
      rep.objective = pcost;
      rep.wall_time_s = elapsed();
      return rep;
    }

    // Farkas-type certificate checks. Primal infeasibility: (y,z) with
    // A^T y + G^T z ~ 0, z in K*, b^T y + h^T z < 0.
    {
      double t = -(b_vec.dot(y) + (m > 0 ? h_vec.dot(z) : 0.0));
      double yz = y.norm() + (m > 0 ? z.norm() : 0.0);
      if (t > 1e-6 * (norm_b + norm_h) * yz && pres > 10 * opts.tol) {
        Vec aty = a_mat.transpose() * y + g_mat.transpose() * z;
        double cert = aty.norm() / t;
        best_cert_p = std::min(best_cert_p, cert);
        if (cert <= opts.tol_infeasible) {
          rep.status = SolveStatus::infeasible;
          rep.solution = x;
          rep.objective = pcost;
          rep.wall_time_s = elapsed();
          return rep;
        }
      }
    }
    // Dual infeasibility (primal unboundedness): x with P x ~ 0, A x ~ 0,
    // -G x in K, q^T x < 0.
    {
      double t = -q_lin.dot(x);
      if (t > 1e-6 * norm_q * std::max(1.0, x.norm()) && dres > 10 * opts.tol) {
        double cert = px.norm() + (np > 0 ? (a_mat * x).norm() : 0.0);
        double viol = m > 0 ? ops.cone_violation(-(g_mat * x)) : 0.0;
        double total = (cert + viol) / t;
        best_cert_d = std::min(best_cert_d, total);
        if (total <= opts.tol_infeasible) {
          rep.status = SolveStatus::unbounded;
          rep.solution = x;
          rep.objective = pcost;
          rep.wall_time_s = elapsed();
          return rep;
        }
      }
    }

    if (iter == opts.max_iterations) break;
    if (m == 0) {
      // equality-constrained QP: one Newton solve reaches the optimum
      Vec rhs(n + np);
      rhs.head(n) = -rx;
      rhs.tail(np) = -ry;
      Vec full(n + np + m);
      full.head(n + np) = rhs;
      Vec sol = kkt_solve(full);
      x += sol.head(n);
      y += sol.segment(n, np);
      continue;
    }

    double mu = gap / degree;

    sc = ops.compute_scaling(s, z);
    if (!kkt.factorize(sc)) {
      rep.status = SolveStatus::numerical_failure;
      break;
    }
    Vec lambda = ops.w_apply(sc, z);

    // Affine (predictor) direction.
    Vec rhs(n + np + m);
    rhs.head(n) = -rx;
    rhs.segment(n, np) = -ry;
    rhs.tail(m) = -rz + s;
    Vec sol = kkt_solve(rhs);
    Vec dx_a = sol.head(n);
    Vec dz_a = sol.tail(m);
    Vec ds_a = -rz - g_mat * dx_a;

    double alpha_a = std::min(ops.max_step(s, ds_a, 1.0),
                              ops.max_step(z, dz_a, 1.0));
    double gap_a = (s + alpha_a * ds_a).dot(z + alpha_a * dz_a);
    double sigma = std::clamp(std::pow(gap_a / gap, 3.0), 0.0, 1.0);

    // Combined (corrector) direction.
    Vec d = ops.jordan_mul(lambda, lambda) +
            ops.jordan_mul(ops.w_inv_apply(sc, ds_a), ops.w_apply(sc, dz_a));
    d -= sigma * mu * ops.identity();
    rhs.tail(m) = -rz + ops.w_apply(sc, ops.jordan_solve(lambda, d));
    sol = kkt_solve(rhs);
    Vec dx = sol.head(n);
    Vec dy = sol.segment(n, np);
    Vec dz = sol.tail(m);
    Vec ds = -rz - g_mat * dx;

    double alpha = 0.99 * std::min(ops.max_step(s, ds, 1.0 / 0.99),
                                   ops.max_step(z, dz, 1.0 / 0.99));
    alpha = std::min(alpha, 1.0);
    if (alpha < 1e-13 || !std::isfinite(alpha)) {
      rep.status = SolveStatus::numerical_failure;
      break;
    }

    x += alpha * dx;
    y += alpha * dy;
    s += alpha * ds;
    z += alpha * dz;

    if (x.norm() > 1e14 || y.norm() + z.norm() > 1e14) break;
  }

  // No convergence: classify with relaxed certificate thresholds.
  if (m == 0 && np > 0) {
    // For pure equality systems the Newton residual is the least-squares
    // one, orthogonal to range(A); it is itself a Farkas certificate.
    Vec ry = a_mat * x - b_vec;
    if (ry.norm() > opts.tol * norm_b) {
      Vec cand = -ry;
      if (b_vec.dot(cand) < 0.0 &&
          (a_mat.transpose() * cand).norm() <=
              1e-6 * std::max(1.0, a_mat.norm()) * cand.norm())
        best_cert_p = 0.0;
    }
  }
  if (best_cert_p < 1e-6) {
    rep.status = SolveStatus::infeasible;
  } else if (best_cert_d < 1e-6) {
    rep.status = SolveStatus::unbounded;
  } else {
    rep.status = SolveStatus::numerical_failure;
  }
  rep.solution = x;
  rep.objective = pcost_of(x);
  if (rep.status == SolveStatus::numerical_failure && allow_phase1)
    rep = classify_with_phase1(p, opts, std::move(rep));
  rep.wall_time_s = elapsed();
  return rep;
}

}  // namespace

SolveReport solve(const ConicProblem& problem, double tol) {
  SolveOptions o;
  o.tol = tol;
  return solve(problem, o);
}

}  // namespace redopt
