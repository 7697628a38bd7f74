#pragma once
// Independent cross-checks for the contour-integral evaluator:
//
//  * fornberg_weights   - finite-difference weights on arbitrary nodes
//  * fd_solve           - constrained Crank-Nicolson marching: the evolution
//    equation is collocated on a uniform grid and one grid row per condition
//    is replaced by the discretised condition itself
//  * series_reference_dirichlet - classical sine series for the second-order
//    equation with homogeneous two-point value conditions
//  * global_relation_check[_fd] - residual of the interval-wise transform
//    identity coupling q(.,tau), the initial datum and the boundary traces;
//    any solution of the problem makes it vanish for every complex lambda,
//    so a small residual is evidence independent of how q was produced.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/LU>

#include "utpde/contour.hpp"
#include "utpde/error.hpp"
#include "utpde/problem.hpp"
#include "utpde/quadrature.hpp"
#include "utpde/represent.hpp"
#include "utpde/transforms.hpp"

namespace utpde {

// ---------------------------------------------------------------------------
// Fornberg weights. Returns a (nodes x (m+1)) matrix whose column k holds
// the weights of f(x_i) in the k-th derivative at z; exact for polynomials
// of degree < x.size().
// ---------------------------------------------------------------------------
inline Eigen::MatrixXd fornberg_weights(double z, const std::vector<double>& x,
                                        int m) {
  const int nd = int(x.size()) - 1;
  if (nd < m)
    throw ValidationError(
        "fornberg_weights: need at least m+1 nodes for an m-th derivative");
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(nd + 1, m + 1);
  double c1 = 1.0, c4 = x[0] - z;
  c(0, 0) = 1.0;
  for (int i = 1; i <= nd; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0, c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c(i, k) = c1 * (k * c(i - 1, k - 1) - c5 * c(i - 1, k)) / c2;
        c(i, 0) = -c1 * c5 * c(i - 1, 0) / c2;
      }
      for (int k = mn; k >= 1; --k)
        c(j, k) = (c4 * c(j, k) - k * c(j, k - 1)) / c3;
      c(j, 0) = c4 * c(j, 0) / c3;
    }
    c1 = c2;
  }
  return c;
}

namespace detail {

// Leftmost index of the s grid nodes nearest z on {0, 1/N, ..., 1}, clipped
// to the grid.
inline int stencil_lo(double z, int N, int s) {
  int i0 = int(std::lround(z * N));
  int lo = i0 - (s - 1) / 2;
  return std::clamp(lo, 0, N + 1 - s);
}

// Weights of the k-th derivative at z on its s nearest grid nodes.
inline std::pair<int, Eigen::VectorXd> grid_stencil(double z, int N, int k,
                                                    int s) {
  const double h = 1.0 / N;
  const int lo = stencil_lo(z, N, s);
  std::vector<double> nodes(static_cast<std::size_t>(s), 0.0);
  for (int q = 0; q < s; ++q) nodes[std::size_t(q)] = (lo + q) * h;
  Eigen::MatrixXd w = fornberg_weights(z, nodes, k);
  return {lo, w.col(k)};
}

// Composite Newton-Cotes weights on `cells` uniform cells of width h:
// Simpson where the cell count is even, a trailing 3/8 block when odd,
// trapezoid for a single cell.
inline std::vector<double> composite_weights(int cells, double h) {
  std::vector<double> w(std::size_t(cells) + 1, 0.0);
  if (cells == 1) {
    w[0] = w[1] = 0.5 * h;
    return w;
  }
  int even = cells % 2 == 0 ? cells : cells - 3;
  if (even > 0) {
    for (int i = 0; i <= even; ++i) {
      double c = (i == 0 || i == even) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      w[std::size_t(i)] += c * h / 3.0;
    }
  }
  if (even < cells) {
    const double c = 3.0 * h / 8.0;
    w[std::size_t(even)] += c;
    w[std::size_t(even) + 1] += 3.0 * c;
    w[std::size_t(even) + 2] += 3.0 * c;
    w[std::size_t(even) + 3] += c;
  }
  return w;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Constrained Crank-Nicolson solver.
// ---------------------------------------------------------------------------
struct FdOptions {
  int N = 400;      // grid intervals; every eta_r must land on a node
  double dt = 0.0;  // time step; <= 0 selects 1e-4 * (final output time)
};

struct FdResult {
  std::vector<double> xs;                // grid nodes
  std::vector<double> snap_ts;           // requested output times (sorted)
  std::vector<Eigen::VectorXcd> snaps;   // profile at each output time
  std::vector<double> trace_ts;          // every time level, starting at 0
  std::vector<Eigen::MatrixXcd> traces;  // (k, r) -> d^k q(eta_r, t)
  std::vector<int> condition_rows;       // grid rows replaced per condition
};

inline FdResult fd_solve(const ProblemSpec& p, std::vector<double> snap_ts,
                         FdOptions opt = {}) {
  const int n = p.pde.n, m = p.m(), N = opt.N;
  if (N < 4 * n) throw ValidationError("fd_solve: grid too coarse");
  if (snap_ts.empty())
    throw ValidationError("fd_solve: at least one output time is required");
  std::sort(snap_ts.begin(), snap_ts.end());
  snap_ts.erase(std::unique(snap_ts.begin(), snap_ts.end()), snap_ts.end());
  if (snap_ts.front() <= 0.0)
    throw ValidationError("fd_solve: output times must be positive");
  const double t_end = snap_ts.back();
  const double dt = opt.dt > 0.0 ? opt.dt : 1e-4 * t_end;
  const double h = 1.0 / N;

  // Every condition point must be a grid node so condition rows collocate
  // exactly.
  std::vector<int> eta_idx(std::size_t(m) + 1);
  for (int r = 0; r <= m; ++r) {
    int i = int(std::lround(p.eta[std::size_t(r)] * N));
    if (std::abs(p.eta[std::size_t(r)] - i * h) > 1e-9)
      throw ValidationError(
          "fd_solve: eta[" + std::to_string(r) +
          "] is not a grid node; choose N so every condition point is one");
    eta_idx[std::size_t(r)] = i;
  }

  // Spatial operator q_t = c d^n q / dx^n with a 5-point stencil (centred in
  // the interior, one-sided at the ends); odd orders keep an odd stencil so
  // the interior discretisation stays antisymmetric.
  const Cplx c = -a_minus_i_pow_n(p.pde);
  const int s_pde = n + (n % 2 ? 2 : 3);
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(N + 1, N + 1);
  for (int i = 0; i <= N; ++i) {
    auto [lo, w] = detail::grid_stencil(i * h, N, n, s_pde);
    for (int q = 0; q < s_pde; ++q) A(i, lo + q) += c * w(q);
  }

  // Condition rows replace the collocation rows at the condition points,
  // preferring for each row the point it weights most heavily.
  std::vector<int> crow_idx;
  std::vector<Eigen::RowVectorXcd> crows;
  std::vector<char> taken(std::size_t(N) + 1, 0);
  for (int j = 0; j < n; ++j) {
    std::vector<std::pair<double, int>> cand;
    for (int r = 0; r <= m; ++r) {
      double wmax = 0.0;
      for (int k = 0; k < n; ++k)
        wmax = std::max(wmax, std::abs(p.b.at(k, j, r)));
      if (wmax > 0.0) cand.push_back({-wmax, r});
    }
    std::sort(cand.begin(), cand.end());
    if (cand.empty())
      throw ValidationError("fd_solve: condition row " + std::to_string(j) +
                            " is identically zero");
    int row = -1;
    for (const auto& [negw, r] : cand) {
      int i = eta_idx[std::size_t(r)];
      if (!taken[std::size_t(i)]) {
        row = i;
        break;
      }
    }
    if (row < 0) {
      const int base = eta_idx[std::size_t(cand.front().second)];
      for (int d = 1; d <= N && row < 0; ++d) {
        if (base - d >= 0 && !taken[std::size_t(base - d)])
          row = base - d;
        else if (base + d <= N && !taken[std::size_t(base + d)])
          row = base + d;
      }
    }
    if (row < 0)
      throw NumericalError("fd_solve: no free matrix row for condition " +
                           std::to_string(j));
    taken[std::size_t(row)] = 1;
    crow_idx.push_back(row);
    Eigen::RowVectorXcd cr = Eigen::RowVectorXcd::Zero(N + 1);
    for (int k = 0; k < n; ++k)
      for (int r = 0; r <= m; ++r) {
        const Cplx bw = p.b.at(k, j, r);
        if (bw == Cplx(0)) continue;
        if (k == 0) {
          cr(eta_idx[std::size_t(r)]) += bw;
          continue;
        }
        auto [lo, w] = detail::grid_stencil(p.eta[std::size_t(r)], N, k, k + 3);
        for (int q = 0; q < k + 3; ++q) cr(lo + q) += bw * w(q);
      }
    crows.push_back(std::move(cr));
  }

  // Trace extraction stencils (k-th derivative at each eta_r).
  std::vector<std::vector<std::pair<int, Eigen::VectorXd>>> tr_stencil;
  tr_stencil.resize(std::size_t(n));
  for (int k = 0; k < n; ++k)
    for (int r = 0; r <= m; ++r)
      tr_stencil[std::size_t(k)].push_back(
          detail::grid_stencil(p.eta[std::size_t(r)], N, k, k + 3));

  FdResult out;
  out.xs.resize(std::size_t(N) + 1);
  for (int i = 0; i <= N; ++i) out.xs[std::size_t(i)] = i * h;
  out.snap_ts = snap_ts;
  out.condition_rows = crow_idx;

  Eigen::VectorXcd q(N + 1);
  for (int i = 0; i <= N; ++i) q(i) = p.q0.eval(i * h);

  auto record = [&](double tt) {
    Eigen::MatrixXcd tr(n, m + 1);
    for (int k = 0; k < n; ++k)
      for (int r = 0; r <= m; ++r) {
        if (k == 0) {
          tr(0, r) = q(eta_idx[std::size_t(r)]);
          continue;
        }
        const auto& [lo, w] = tr_stencil[std::size_t(k)][std::size_t(r)];
        Cplx s = 0.0;
        for (int qq = 0; qq < w.size(); ++qq) s += w(qq) * q(lo + qq);
        tr(k, r) = s;
      }
    out.trace_ts.push_back(tt);
    out.traces.push_back(std::move(tr));
  };
  record(0.0);

  // March; the factorisation is reused while the step length is unchanged
  // (it only changes when a step is shortened to land on an output time).
  Eigen::MatrixXcd M0;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu;
  double cur_len = -1.0;
  auto rebuild = [&](double len) {
    Eigen::MatrixXcd M1 =
        Eigen::MatrixXcd::Identity(N + 1, N + 1) - (0.5 * len) * A;
    M0 = Eigen::MatrixXcd::Identity(N + 1, N + 1) + (0.5 * len) * A;
    for (std::size_t j = 0; j < crows.size(); ++j) {
      M1.row(crow_idx[j]) = crows[j];
      M0.row(crow_idx[j]).setZero();
    }
    lu.compute(M1);
    cur_len = len;
  };

  const std::size_t est = std::size_t(t_end / dt) + snap_ts.size() + 2;
  out.trace_ts.reserve(est);
  out.traces.reserve(est);

  double t = 0.0;
  std::size_t si = 0;
  while (t < t_end - 1e-13) {
    double tn = t + dt;
    if (si < snap_ts.size() && snap_ts[si] < tn - 1e-13) tn = snap_ts[si];
    if (tn > t_end) tn = t_end;
    const double len = tn - t;
    if (cur_len < 0.0 || std::abs(len - cur_len) > 1e-12 * dt) rebuild(len);
    Eigen::VectorXcd rhs = M0 * q;
    for (std::size_t j = 0; j < crows.size(); ++j)
      rhs(crow_idx[j]) = p.g[j].eval(tn);
    q = lu.solve(rhs);
    t = tn;
    record(t);
    if (si < snap_ts.size() && std::abs(t - snap_ts[si]) <= 1e-12) {
      out.snaps.push_back(q);
      ++si;
    }
  }
  if (out.snaps.size() != snap_ts.size())
    throw NumericalError("fd_solve: marching missed an output time");
  return out;
}

// ---------------------------------------------------------------------------
// Classical sine series for the second-order equation (a = 1) with
// homogeneous value conditions at both ends:
//   q(x,t) = sum_k b_k e^{-k^2 pi^2 t} sin(k pi x),
//   b_k    = (qhat0(-k pi) - qhat0(k pi)) / i = 2 integral q0 sin(k pi x).
// ---------------------------------------------------------------------------
inline Cplx series_reference_dirichlet(const DataFunction& q0, double x,
                                       double t, int kmax = 4000) {
  if (!(t > 0.0))
    throw ValidationError("series reference requires a positive time");
  Cplx acc = 0.0;
  for (int k = 1; k <= kmax; ++k) {
    const double w = double(k) * kPi;
    const double decay = std::exp(-w * w * t);
    if (decay < 1e-15) break;
    const Cplx bk = (transform_on<Cplx>(q0, 0.0, 1.0, Cplx(-w, 0.0)) -
                     transform_on<Cplx>(q0, 0.0, 1.0, Cplx(w, 0.0))) /
                    Cplx(0.0, 1.0);
    acc += bk * decay * std::sin(w * x);
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Global-relation residual. For the true solution and any complex lambda,
//   e^{a lambda^n tau} qhat_tau^r - qhat_0^r
//     = -a(-i)^n integral_0^tau e^{a lambda^n s} (F_r(s) - F_{r-1}(s)) ds,
//   F_r(s) = e^{-i lambda eta_r} sum_{k<n} (i lambda)^{n-1-k} d^k q(eta_r, s),
// on every subinterval (eta_{r-1}, eta_r). The residual of this identity
// measures how well a candidate solution satisfies the equation and data.
// ---------------------------------------------------------------------------
struct GlobalRelationReport {
  std::vector<Cplx> lambdas;
  std::vector<double> residuals;  // max over subintervals, one per lambda
  double max_residual = 0.0;
};

// Sample points away from the axes where the time weight stays moderate.
inline std::vector<Cplx> default_gr_lambdas() {
  std::vector<Cplx> out;
  for (double arg : {kPi / 4.0, 3.0 * kPi / 4.0})
    for (double rho : {0.4, 0.8, 1.2, 1.6, 2.0})
      out.push_back(std::polar(rho, arg));
  return out;
}

namespace detail {

// Quadrature data shared by both residual flavours: nodes/weights and trace
// matrices on [0, tau], and per-interval quadrature samples of q(., tau).
struct GrSamples {
  std::vector<double> ts, ws;
  std::vector<Eigen::MatrixXcd> traces;  // traces[ti](k, r)
  std::vector<std::vector<double>> qx, qw;
  std::vector<std::vector<Cplx>> qv;
};

inline double gr_residual(const ProblemSpec& p, double tau,
                          const GrSamples& s, Cplx lam) {
  const int n = p.pde.n, m = p.m();
  const Cplx W = p.pde.a * pow_int(lam, n);
  const Cplx An = a_minus_i_pow_n(p.pde);
  const Cplx il = Cplx(0.0, 1.0) * lam;

  auto boundary_fn = [&](const Eigen::MatrixXcd& tr) {
    Eigen::VectorXcd F(m + 1);
    for (int r = 0; r <= m; ++r) {
      Cplx P = 0.0, pw = 1.0;
      for (int k = n - 1; k >= 0; --k) {
        P += pw * tr(k, r);
        pw *= il;
      }
      F(r) = std::exp(-il * p.eta[std::size_t(r)]) * P;
    }
    return F;
  };

  Eigen::VectorXcd I = Eigen::VectorXcd::Zero(m + 1);
  for (std::size_t ti = 0; ti < s.ts.size(); ++ti)
    I += (std::exp(W * s.ts[ti]) * s.ws[ti]) * boundary_fn(s.traces[ti]);

  const Cplx grow = std::exp(W * tau);
  double worst = 0.0;
  for (int r = 1; r <= m; ++r) {
    Cplx qt = 0.0;
    const auto& xs = s.qx[std::size_t(r) - 1];
    const auto& ws = s.qw[std::size_t(r) - 1];
    const auto& vs = s.qv[std::size_t(r) - 1];
    for (std::size_t i = 0; i < xs.size(); ++i)
      qt += vs[i] * ws[i] * std::exp(-il * xs[i]);
    const Cplx qhat0 = transform_on<Cplx>(p.q0, p.eta[std::size_t(r) - 1],
                                          p.eta[std::size_t(r)], lam);
    const Cplx resid = grow * qt - qhat0 + An * (I(r) - I(r - 1));
    worst = std::max(worst, std::abs(resid));
  }
  return worst;
}

}  // namespace detail

// Residual of the finite-difference history: trapezoid in time over the
// stored levels, composite Newton-Cotes in x over the stored profile at tau
// (which must be one of the solver's output times).
inline GlobalRelationReport global_relation_check_fd(
    const ProblemSpec& p, const FdResult& fd, double tau,
    const std::vector<Cplx>& lambdas = default_gr_lambdas()) {
  const int m = p.m();
  int si = -1;
  for (std::size_t i = 0; i < fd.snap_ts.size(); ++i)
    if (std::abs(fd.snap_ts[i] - tau) <= 1e-10) si = int(i);
  if (si < 0)
    throw ValidationError(
        "global relation: the solver history has no profile at the requested "
        "time");
  std::size_t last = 0;
  while (last + 1 < fd.trace_ts.size() &&
         fd.trace_ts[last + 1] <= tau + 1e-12)
    ++last;
  if (std::abs(fd.trace_ts[last] - tau) > 1e-10)
    throw ValidationError(
        "global relation: the trace history does not reach the requested "
        "time");

  detail::GrSamples s;
  s.ts.assign(fd.trace_ts.begin(), fd.trace_ts.begin() + long(last) + 1);
  s.traces.assign(fd.traces.begin(), fd.traces.begin() + long(last) + 1);
  s.ws.assign(s.ts.size(), 0.0);
  for (std::size_t i = 0; i + 1 < s.ts.size(); ++i) {
    const double half = 0.5 * (s.ts[i + 1] - s.ts[i]);
    s.ws[i] += half;
    s.ws[i + 1] += half;
  }

  const int N = int(fd.xs.size()) - 1;
  const double h = 1.0 / N;
  for (int r = 1; r <= m; ++r) {
    const int i0 = int(std::lround(p.eta[std::size_t(r) - 1] * N));
    const int i1 = int(std::lround(p.eta[std::size_t(r)] * N));
    auto w = detail::composite_weights(i1 - i0, h);
    std::vector<double> xs(w.size()), qws = w;
    std::vector<Cplx> vs(w.size());
    for (std::size_t q = 0; q < w.size(); ++q) {
      xs[q] = (i0 + int(q)) * h;
      vs[q] = fd.snaps[std::size_t(si)](i0 + int(q));
    }
    s.qx.push_back(std::move(xs));
    s.qw.push_back(std::move(qws));
    s.qv.push_back(std::move(vs));
  }

  GlobalRelationReport rep;
  rep.lambdas = lambdas;
  for (const Cplx& lam : lambdas) {
    rep.residuals.push_back(detail::gr_residual(p, tau, s, lam));
    rep.max_residual = std::max(rep.max_residual, rep.residuals.back());
  }
  return rep;
}

namespace detail {

// Time before which the slowest contour leg (the rays just outside a decay
// sector, whose kernel decays like e^{-|a| sin(n*outset) rho^n t}) cannot
// exhaust the 40-budget within the given radius cap.
inline double gr_reachable_time(const PdeSpec& pde, double rho_cap) {
  const double rate =
      std::abs(pde.a) * std::sin(pde.n * sector_outset(pde));
  return 40.0 / std::max(1e-300, rate * std::pow(rho_cap, double(pde.n)));
}

// Smallest grid count >= 400 that puts every condition point on a node.
inline int gr_grid_count(const std::vector<double>& eta) {
  for (int N = 400; N <= 4000; ++N) {
    bool ok = true;
    for (double e : eta)
      if (std::abs(e * N - std::lround(e * N)) > 1e-9 * N) {
        ok = false;
        break;
      }
    if (ok) return N;
  }
  throw ValidationError(
      "global relation: no uniform grid up to 4000 intervals contains every "
      "condition point");
}

}  // namespace detail

// Residual of the contour-integral evaluation itself. Boundary traces are
// evaluated on Gauss-Legendre panels over geometrically refined time edges,
// with the radius cap widened for the earliest panels so the kernel decay
// still exhausts; the profile at tau is sampled on Gauss-Legendre panels per
// subinterval. The initial strip [0, eps] -- too early for any contour to
// resolve, and where incompatible data make the traces non-smooth -- is
// integrated from a short finite-difference run instead, so the identity
// stays anchored at the exact transform of the initial datum.
inline GlobalRelationReport global_relation_check(
    const ProblemSpec& p, double tau,
    const std::vector<Cplx>& lambdas = default_gr_lambdas(),
    EvalOptions opt = {}) {
  if (tau <= 0.0) tau = p.T;
  const int n = p.pde.n, m = p.m();
  const double cap_hi = 4200.0;
  const double eps =
      std::min(1.15 * detail::gr_reachable_time(p.pde, cap_hi), 0.25 * tau);

  detail::GrSamples s;

  // Initial strip by constrained marching, trapezoid over every level.
  {
    FdOptions fo;
    fo.N = detail::gr_grid_count(p.eta);
    fo.dt = eps / 400.0;
    const FdResult fd = fd_solve(p, {eps}, fo);
    s.ts = fd.trace_ts;
    s.traces = fd.traces;
    s.ws.assign(s.ts.size(), 0.0);
    for (std::size_t i = 0; i + 1 < s.ts.size(); ++i) {
      const double half = 0.5 * (s.ts[i + 1] - s.ts[i]);
      s.ws[i] += half;
      s.ws[i + 1] += half;
    }
  }

  // Remaining window [eps, tau] from the contour evaluation, in two radius
  // buckets: panels earlier than the default cap can reach get a wider one.
  const double t_split =
      1.15 * detail::gr_reachable_time(p.pde, std::max(opt.rho_cap, 1.0));
  std::vector<double> lo_t, lo_w, hi_t, hi_w;
  const auto edges = refined_time_edges(tau, eps / tau);  // descending
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    const double hi = edges[e], lo = edges[e + 1];
    const double mid = 0.5 * (hi + lo), half = 0.5 * (hi - lo);
    for (const auto& node : gauss16()) {
      const double t = mid + half * node.x;
      auto& ts = t < t_split ? lo_t : hi_t;
      auto& ws = t < t_split ? lo_w : hi_w;
      ts.push_back(t);
      ws.push_back(half * node.w);
    }
  }
  auto eval_bucket = [&](const std::vector<double>& ts,
                         const std::vector<double>& ws) {
    if (ts.empty()) return;
    const double t_min = *std::min_element(ts.begin(), ts.end());
    EvalOptions eo = opt;
    eo.tau = tau;
    if (t_min < t_split) {
      const double rate =
          std::abs(p.pde.a) * std::sin(n * sector_outset(p.pde));
      eo.rho_cap = std::min(
          cap_hi, 1.05 * std::pow(40.0 / (rate * t_min), 1.0 / double(n)));
    }
    std::vector<GridResult> per_k;
    per_k.reserve(std::size_t(n));
    for (int k = 0; k < n; ++k) {
      EvalOptions ek = eo;
      ek.deriv = k;
      per_k.push_back(evaluate_solution(p, p.eta, ts, ek));
    }
    for (std::size_t ti = 0; ti < ts.size(); ++ti) {
      Eigen::MatrixXcd tr(n, m + 1);
      for (int k = 0; k < n; ++k)
        for (int r = 0; r <= m; ++r)
          tr(k, r) = per_k[std::size_t(k)].q[ti][std::size_t(r)];
      s.ts.push_back(ts[ti]);
      s.ws.push_back(ws[ti]);
      s.traces.push_back(std::move(tr));
    }
  };
  eval_bucket(lo_t, lo_w);
  eval_bucket(hi_t, hi_w);

  // Profile at tau, four Gauss-Legendre panels per subinterval.
  std::vector<double> all_x, all_w;
  for (int r = 1; r <= m; ++r) {
    const double a = p.eta[std::size_t(r) - 1], b = p.eta[std::size_t(r)];
    for (int pan = 0; pan < 4; ++pan) {
      const double lo = a + (b - a) * pan / 4.0;
      const double hi = a + (b - a) * (pan + 1) / 4.0;
      const double mid = 0.5 * (hi + lo), half = 0.5 * (hi - lo);
      for (const auto& node : gauss16()) {
        all_x.push_back(mid + half * node.x);
        all_w.push_back(half * node.w);
      }
    }
  }
  EvalOptions ep = opt;
  ep.tau = tau;
  const GridResult prof = evaluate_solution(p, all_x, {tau}, ep);
  std::size_t off = 0;
  for (int r = 1; r <= m; ++r) {
    const std::size_t cnt = 64;
    s.qx.emplace_back(all_x.begin() + long(off), all_x.begin() + long(off + cnt));
    s.qw.emplace_back(all_w.begin() + long(off), all_w.begin() + long(off + cnt));
    std::vector<Cplx> vs(cnt);
    for (std::size_t i = 0; i < cnt; ++i) vs[i] = prof.q[0][off + i];
    s.qv.push_back(std::move(vs));
    off += cnt;
  }

  GlobalRelationReport rep;
  rep.lambdas = lambdas;
  for (const Cplx& lam : lambdas) {
    rep.residuals.push_back(detail::gr_residual(p, tau, s, lam));
    rep.max_residual = std::max(rep.max_residual, rep.residuals.back());
  }
  return rep;
}

}  // namespace utpde
