#pragma once
// Finite-interval Fourier-type transforms of the data functions and the
// time transforms of the boundary data. Everything is templated on a field
// type F (std::complex<double> or ScaledComplex<double> via FieldTraits) so
// the same formulas serve both moderate and exponentially large arguments.

#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include "utpde/error.hpp"
#include "utpde/expression.hpp"
#include "utpde/problem.hpp"
#include "utpde/quadrature.hpp"
#include "utpde/scaled.hpp"

namespace utpde {

inline Cplx pow_int(Cplx z, int n) {
  Cplx r = 1.0;
  for (int i = 0; i < n; ++i) r *= z;
  return r;
}

// a * (-i)^n, the coefficient tying spatial traces to the time transforms.
inline Cplx a_minus_i_pow_n(const PdeSpec& pde) {
  Cplx r = pde.a;
  for (int i = 0; i < pde.n; ++i) r *= Cplx(0.0, -1.0);
  return r;
}

// ---------------------------------------------------------------------------
// integral_{x0}^{x1} x^d e^{mu x} dx, exactly.
//
// Small |mu| uses the Taylor series (avoids the subtractive cancellation of
// the antiderivative form); otherwise the closed antiderivative
//   A(x) = e^{mu x} * sum_{p=0}^{d} (-1)^p d!/(d-p)! x^{d-p} / mu^{p+1}
// evaluated in the field F, which tolerates |Re(mu x)| far past 709.
// ---------------------------------------------------------------------------
template <class F>
F int_power_exp(int d, Cplx mu, double x0, double x1) {
  using T = FieldTraits<F>;
  const double scale = std::max({std::abs(x0), std::abs(x1), 1.0});
  if (std::abs(mu) * scale < 0.8) {
    Cplx sum = 0.0;
    Cplx muj = 1.0;  // mu^j / j!
    double p0 = 1.0, p1 = 1.0;
    for (int q = 0; q < d + 1; ++q) {
      p0 *= x0;
      p1 *= x1;
    }
    // p0/p1 now hold x^{d+1}; update incrementally per series index.
    for (int j = 0; j < 80; ++j) {
      Cplx term = muj * (p1 - p0) / double(d + j + 1);
      sum += term;
      if (std::abs(term) <= 1e-18 * (1.0 + std::abs(sum)) && j > 2) break;
      muj *= mu / double(j + 1);
      p0 *= x0;
      p1 *= x1;
    }
    return T::from(sum);
  }
  auto poly = [&](double x) {
    Cplx s = 0.0;
    double fall = 1.0;  // d!/(d-p)!
    double mono = 1.0;
    for (int q = 0; q < d; ++q) mono *= x;  // x^d
    Cplx invmu = Cplx(1.0) / mu;
    Cplx invpow = invmu;
    double sign = 1.0;
    for (int p = 0; p <= d; ++p) {
      s += sign * fall * mono * invpow;
      sign = -sign;
      fall *= double(d - p);
      if (x != 0.0)
        mono /= x;
      else
        mono = (p == d - 1) ? 1.0 : 0.0;  // x^{d-p-1} at x = 0
      invpow *= invmu;
    }
    return s;
  };
  F hi = T::expc(mu * x1) * T::from(poly(x1));
  F lo = T::expc(mu * x0) * T::from(poly(x0));
  return hi - lo;
}

// ---------------------------------------------------------------------------
// integral_a^b e^{-i z x} f(x) dx for a data function f.
// Exact for exponential-polynomial data; Gauss-Legendre panels between the
// sample points otherwise.
// ---------------------------------------------------------------------------
template <class F>
F transform_on(const DataFunction& f, double a, double b, Cplx z) {
  using T = FieldTraits<F>;
  const Cplx miz = Cplx(0.0, -1.0) * z;
  if (auto pieces = f.ep_pieces(a, b)) {
    F total{};
    for (const auto& pc : *pieces) {
      F phase = T::expc(miz * pc.origin);
      F acc{};
      for (const auto& t : pc.p.terms)
        acc = acc + T::from(t.c) * int_power_exp<F>(t.d, t.nu + miz,
                                                    pc.a - pc.origin,
                                                    pc.b - pc.origin);
      total = total + phase * acc;
    }
    return total;
  }
  // Numerical fallback (sampled data): panels bounded by the sample grid.
  std::vector<double> edges{a};
  for (double x : f.sample_points())
    if (x > a + 1e-14 && x < b - 1e-14) edges.push_back(x);
  edges.push_back(b);
  F total{};
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    double lo = edges[p], hi = edges[p + 1];
    double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    for (const auto& node : gauss16()) {
      double x = mid + half * node.x;
      total = total + T::from(f.eval(x) * (half * node.w)) * T::expc(miz * x);
    }
  }
  return total;
}

// Transforms over the m subintervals (eta_{r-1}, eta_r); element r-1 of the
// result corresponds to interval r = 1..m.
template <class F>
std::vector<F> interval_transforms(const DataFunction& f,
                                   const std::vector<double>& eta, Cplx z) {
  std::vector<F> out;
  out.reserve(eta.size() - 1);
  for (std::size_t r = 1; r < eta.size(); ++r)
    out.push_back(transform_on<F>(f, eta[r - 1], eta[r], z));
  return out;
}

// ---------------------------------------------------------------------------
// Time transforms of a boundary datum g.
// ---------------------------------------------------------------------------

// Exponential-polynomial view of a time datum (single global piece), or
// nullopt when the datum needs the numerical route.
inline std::optional<ExpPoly> time_exp_poly(const DataFunction& g) {
  if (g.kind() != DataFunction::Kind::Expression) return std::nullopt;
  return g.expr().exp_poly();
}

// Full transform: -a(-i)^n * integral_0^tau e^{a z^n s} g(s) ds (exact).
template <class F>
F h_exact(const PdeSpec& pde, const ExpPoly& g, Cplx z, double tau) {
  using T = FieldTraits<F>;
  const Cplx W = pde.a * pow_int(z, pde.n);
  F acc{};
  for (const auto& t : g.terms)
    acc = acc + T::from(t.c) * int_power_exp<F>(t.d, W + t.nu, 0.0, tau);
  return T::from(-a_minus_i_pow_n(pde)) * acc;
}

// tau-independent part of h_exact: the terms without the factor e^{(a z^n +
// nu) tau}. On the deformed contours that dropped factor decays for every
// evaluation time t < tau, so this is the value the representation uses.
//   h_eff(z) = a(-i)^n sum_q c_q (-1)^{d_q} d_q! / (a z^n + nu_q)^{d_q+1}
template <class F>
F h_effective(const PdeSpec& pde, const ExpPoly& g, Cplx z) {
  using T = FieldTraits<F>;
  const Cplx W = pde.a * pow_int(z, pde.n);
  Cplx sum = 0.0;
  for (const auto& t : g.terms) {
    Cplx mu = W + t.nu;
    double fact = 1.0;
    for (int q = 2; q <= t.d; ++q) fact *= double(q);
    double sign = (t.d % 2 == 0) ? 1.0 : -1.0;
    sum += t.c * sign * fact / pow_int(mu, t.d + 1);
  }
  return T::from(a_minus_i_pow_n(pde) * sum);
}

// Radius below which a z^n + nu_q can vanish for some datum term: the
// rational h_eff has poles there, so quadrature contours must stay outside.
inline double data_pole_radius(const PdeSpec& pde,
                               const std::vector<DataFunction>& gs) {
  double rmax = 0.0;
  for (const auto& g : gs) {
    auto p = time_exp_poly(g);
    if (!p) continue;
    for (const auto& t : p->terms)
      if (t.c != Cplx(0) && t.nu != Cplx(0))
        rmax = std::max(rmax,
                        std::pow(std::abs(t.nu / pde.a), 1.0 / double(pde.n)));
  }
  return rmax;
}

// True when every datum admits the exact exponential-polynomial route; the
// representation otherwise integrates the data-driven part on contours
// inside the decay sectors.
inline bool all_data_exp_poly(const std::vector<DataFunction>& gs) {
  for (const auto& g : gs)
    if (!time_exp_poly(g)) return false;
  return true;
}

}  // namespace utpde
