#pragma once

// Reduction of nonlocal (integral) constraints to multipoint trace
// constraints.  A condition row
//
//     integral_0^1 W_j(x) q(x, t) dx = g_j(t),
//
// with W_j polynomial of degree < n on each sub-interval (eta_p, eta_{p+1}),
// is differentiated in time once; the evolution equation
// q_t = -a (-i)^n q^(n) and repeated integration by parts turn the left side
// into a combination of the traces d^k q(eta_r, t), k = 0..n-1.  The library
// stores the resulting trace tensor with an overall minus sign so that the
// reduced datum is (i^n / a) g_j'(t); with this pairing
//
//     d/dt [nonlocal row applied to u] == (a / i^n) [trace row applied to u]
//
// holds identically for every smooth u, which is what verify_reduction
// measures.
//
// The derivative flavour instead constrains integral_{piece} d^k q dx with a
// constant weight per piece.  For k >= 1 the integral telescopes directly to
// a difference of (k-1)-th traces and the datum is unchanged; rows with only
// k = 0 weights go through the time-derivative route above.  Rows mixing the
// two would need incompatible data transforms and are rejected by
// validation.

#include <complex>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "utpde/error.hpp"
#include "utpde/problem.hpp"
#include "utpde/quadrature.hpp"
#include "utpde/transforms.hpp"

namespace utpde {

struct RowReduction {
  int row = 0;
  // "time-derivative" (datum becomes (i^n/a) g') or "telescoping"
  // (datum unchanged).
  std::string method;
  std::string note;
};

struct ReduceResult {
  ProblemSpec problem;
  std::vector<RowReduction> rows;
  std::vector<Finding> findings;
};

namespace detail {

inline double falling_factorial(int l, int low) {
  // l! / low!  ==  l (l-1) ... (low+1)
  double f = 1.0;
  for (int q = low + 1; q <= l; ++q) f *= q;
  return f;
}

// Trace tensor of one value-variant row: the boundary terms produced by
// integrating  integral W_j d^n q dx  by parts n times, where W_j has
// polynomial coefficients w(l, j, p) of x^l on piece p.  Entry (k, r)
// multiplies d^k q(eta_r).
inline void boundary_trace_row(const NonlocalSpec& nl, int j,
                               ConditionTensor& bhat) {
  const int n = nl.pde.n;
  const int m = nl.m();
  auto wpiece = [&](int l, int p) -> Cplx {
    if (p < 0 || p >= m) return Cplx(0);
    return nl.w.at(l, j, p);
  };
  for (int k = 0; k < n; ++k) {
    double sign = ((n - 1 - k) % 2 == 0) ? 1.0 : -1.0;
    for (int r = 0; r <= m; ++r) {
      Cplx acc = 0.0;
      for (int l = n - 1 - k; l <= n - 1; ++l) {
        int pw = l + k + 1 - n;
        double coef = falling_factorial(l, pw) * std::pow(nl.eta[r], pw);
        acc += coef * (wpiece(l, r - 1) - wpiece(l, r));
      }
      // Library sign convention: negate the raw boundary-term tensor (see
      // the header comment); the datum then carries +(i^n/a) g'.
      bhat.at(k, j, r) = -(sign * acc);
    }
  }
}

// (i^n / a) * g'  as a DataFunction, with findings for inexact cases.
inline DataFunction scaled_time_derivative(const DataFunction& g, Cplx scale,
                                           int row,
                                           std::vector<Finding>& findings) {
  switch (g.kind()) {
    case DataFunction::Kind::Expression: {
      Expr d = Expr::binary(Expr::Kind::Mul, Expr::constant(scale),
                            g.expr().derivative());
      return DataFunction::from_expr(d, d.to_string(g.var()), g.var());
    }
    case DataFunction::Kind::PiecewisePoly: {
      std::vector<std::vector<Cplx>> dc;
      for (const auto& row_c : g.coefficients()) {
        std::vector<Cplx> d(std::max<std::size_t>(row_c.size(), 2) - 1,
                            Cplx(0));
        for (std::size_t p = 1; p < row_c.size(); ++p)
          d[p - 1] = scale * double(p) * row_c[p];
        if (d.empty()) d.push_back(Cplx(0));
        dc.push_back(std::move(d));
      }
      return DataFunction::piecewise(g.breakpoints(), std::move(dc));
    }
    case DataFunction::Kind::Sampled: {
      const auto& xs = g.sample_points();
      std::vector<Cplx> vs(xs.size());
      for (std::size_t q = 0; q < xs.size(); ++q)
        vs[q] = scale * g.deriv(xs[q], 1);
      findings.push_back(
          {Finding::Severity::Warning, "datum",
           "row " + std::to_string(row) +
               ": sampled datum differentiated by finite differences; the "
               "reduced datum is approximate",
           true});
      return DataFunction::sampled(xs, std::move(vs));
    }
  }
  throw ValidationError("unknown data kind");
}

}  // namespace detail

// Reduce a nonlocal specification to an equivalent multipoint problem.
inline ReduceResult reduce_nonlocal(const NonlocalSpec& nl) {
  auto findings = validate_nonlocal(nl);
  if (has_errors(findings))
    throw ValidationError("nonlocal specification failed validation: " +
                          findings.front().message);

  const int n = nl.pde.n;
  const int m = nl.m();
  ReduceResult out;
  out.findings = std::move(findings);
  out.problem.pde = nl.pde;
  out.problem.eta = nl.eta;
  out.problem.q0 = nl.q0;
  out.problem.T = nl.T;
  out.problem.b = ConditionTensor(n, m + 1);
  out.problem.g.resize(n);

  Cplx in = 1.0;
  for (int q = 0; q < n; ++q) in *= Cplx(0, 1);
  const Cplx scale = in / nl.pde.a;  // i^n / a

  for (int j = 0; j < n; ++j) {
    bool direct = false;
    if (nl.variant == "derivative") {
      for (int k = 1; k < n && !direct; ++k)
        for (int p = 0; p < m; ++p)
          if (nl.w.at(k, j, p) != Cplx(0)) {
            direct = true;
            break;
          }
    }
    RowReduction rr;
    rr.row = j;
    if (direct) {
      // integral_{eta_p}^{eta_{p+1}} d^k q dx telescopes to
      // d^{k-1} q(eta_{p+1}) - d^{k-1} q(eta_p); no time derivative needed.
      for (int k = 1; k < n; ++k)
        for (int p = 0; p < m; ++p) {
          Cplx w = nl.w.at(k, j, p);
          if (w == Cplx(0)) continue;
          out.problem.b.at(k - 1, j, p + 1) += w;
          out.problem.b.at(k - 1, j, p) -= w;
        }
      out.problem.g[j] = nl.g[j];
      rr.method = "telescoping";
      rr.note = "derivative weights telescoped to endpoint traces; datum "
                "unchanged";
    } else {
      detail::boundary_trace_row(nl, j, out.problem.b);
      out.problem.g[j] =
          detail::scaled_time_derivative(nl.g[j], scale, j, out.findings);
      rr.method = "time-derivative";
      rr.note = "row differentiated in time; trace tensor stores the negated "
                "boundary terms and the datum becomes (i^n/a) g'";
    }
    out.rows.push_back(std::move(rr));
  }

  auto post = validate_problem(out.problem);
  for (auto& f : post) out.findings.push_back(std::move(f));
  return out;
}

// Largest mismatch, over condition rows and the supplied times, of the
// identity linking the nonlocal rows to the reduced trace rows when both are
// applied to a smooth test function u:
//   time-derivative rows:  | d/dt N_j(u)(t) - (a/i^n) M_j(u)(t) |
//   telescoping rows:      | N_j(u)(t) - M_j(u)(t) |
// where N_j is the nonlocal row, M_j the reduced trace row, du(k, x, t) the
// k-th spatial derivative of u and dtu its time derivative.
inline double verify_reduction(
    const NonlocalSpec& nl, const ReduceResult& red,
    const std::function<Cplx(int, double, double)>& du,
    const std::function<Cplx(double, double)>& dtu,
    const std::vector<double>& times) {
  const int n = nl.pde.n;
  const int m = nl.m();
  Cplx in = 1.0;
  for (int q = 0; q < n; ++q) in *= Cplx(0, 1);
  const Cplx a_over_in = nl.pde.a / in;

  double worst = 0.0;
  for (std::size_t jr = 0; jr < red.rows.size(); ++jr) {
    const auto& rr = red.rows[jr];
    int j = rr.row;
    for (double t : times) {
      Cplx traces = 0.0;
      for (int k = 0; k < n; ++k)
        for (int r = 0; r <= m; ++r) {
          Cplx b = red.problem.b.at(k, j, r);
          if (b != Cplx(0)) traces += b * du(k, nl.eta[r], t);
        }
      Cplx lhs;
      if (rr.method == "telescoping") {
        lhs = 0.0;
        for (int k = 1; k < n; ++k)
          for (int p = 0; p < m; ++p) {
            Cplx w = nl.w.at(k, j, p);
            if (w == Cplx(0)) continue;
            lhs += w * adaptive_gl([&](double x) { return du(k, x, t); },
                                   nl.eta[p], nl.eta[p + 1]);
          }
        worst = std::max(worst, std::abs(lhs - traces));
      } else {
        lhs = 0.0;  // d/dt of the nonlocal row
        for (int p = 0; p < m; ++p) {
          auto f = [&](double x) {
            Cplx w = 0.0;
            double xl = 1.0;
            for (int l = 0; l < n; ++l) {
              w += nl.w.at(l, j, p) * xl;
              xl *= x;
            }
            return w * dtu(x, t);
          };
          lhs += adaptive_gl(f, nl.eta[p], nl.eta[p + 1]);
        }
        worst = std::max(worst, std::abs(lhs - a_over_in * traces));
      }
    }
  }
  return worst;
}

}  // namespace utpde
