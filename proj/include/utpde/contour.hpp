#pragma once

// Contour geometry for the integral representation of the solution.
//
// The time kernel e^{-a lambda^n t} grows, as |lambda| -> infinity, exactly
// in the sectors where Re(a lambda^n) < 0 ("growth sectors").  The solution
// formula integrates over the boundaries of the upper-half-plane and
// lower-half-plane growth sectors; numerically each boundary is deformed
// slightly *outward* (into the decay region) so every quadrature node sees
// exponential time decay, and the two boundary rays are joined by a circular
// arc at |lambda| = R that keeps determinant zeros and data poles inside the
// excluded disk.
//
// One deformed sector boundary is traversed as
//     in-ray  at angle hi+eps  from infinity down to R     (weight -1),
//     arc     at radius R      from angle hi+eps to lo-eps (weight i lambda),
//     out-ray at angle lo-eps  from R out to infinity      (weight +1),
// and a half-plane contour is the sum over that half-plane's sectors.
//
// The whole-line leg of the representation is the real axis when the time
// kernel decays there (even order with Re a > 0).  For odd order the kernel
// is purely oscillatory on the axis; both half-axes are then rotated by a
// small lift angle into the adjacent sectors where the kernel decays, which
// is a valid deformation because the integrand gains cubic-exponent decay
// while the data transform grows at most linearly in the exponent.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <vector>

#include "utpde/error.hpp"
#include "utpde/problem.hpp"
#include "utpde/quadrature.hpp"

namespace utpde {

struct Sector {
  double lo = 0.0, hi = 0.0;  // angles, lo < hi, within [-pi, pi] after split
  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
};

// Growth sectors of the time kernel: maximal angular intervals where
// Re(a e^{i n phi}) < 0.  Returned within (-pi, pi], split at the seam.
inline std::vector<Sector> growth_sectors(const PdeSpec& pde) {
  const int n = pde.n;
  const double theta_a = std::arg(pde.a);
  // Boundary angles solve cos(theta_a + n phi) = 0.
  std::vector<double> cuts;
  int k_lo = int(std::floor((-n * kPi - theta_a - kPi / 2) / kPi)) - 1;
  int k_hi = int(std::ceil((n * kPi - theta_a + kPi / 2) / kPi)) + 1;
  for (int k = k_lo; k <= k_hi; ++k) {
    double phi = (kPi / 2 + k * kPi - theta_a) / n;
    if (phi > -kPi - 1e-12 && phi <= kPi + 1e-12) cuts.push_back(phi);
  }
  cuts.push_back(-kPi);  // seam bounds so straddling sectors are kept
  cuts.push_back(kPi);
  std::sort(cuts.begin(), cuts.end());
  std::vector<Sector> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double lo = cuts[i], hi = cuts[i + 1];
    if (hi - lo < 1e-12) continue;
    double mid = 0.5 * (lo + hi);
    if (std::cos(theta_a + n * mid) < 0.0)
      out.push_back({std::max(lo, -kPi), std::min(hi, kPi)});
  }
  return out;
}

// Growth sectors clipped to the open upper (or lower) half plane.
inline std::vector<Sector> half_plane_growth_sectors(const PdeSpec& pde,
                                                     bool upper) {
  double lo_clip = upper ? 0.0 : -kPi;
  double hi_clip = upper ? kPi : 0.0;
  std::vector<Sector> out;
  for (const auto& s : growth_sectors(pde)) {
    double lo = std::max(s.lo, lo_clip);
    double hi = std::min(s.hi, hi_clip);
    if (hi - lo > 1e-9) out.push_back({lo, hi});
  }
  return out;
}

// Angular outset of the deformed boundary rays.
inline double sector_outset(const PdeSpec& pde) {
  return std::min(1e-2, 0.2 * kPi / pde.n);
}

// Wider outset used for sector rays that run alongside the real axis in the
// dispersive case.  The determinant zeros sit on the axis there; a ray this
// far off keeps the quadrature path clear of their poles (the residues of
// everything inside the swept wedge are restored separately), and the
// off-axis kernel decay shortens the ray considerably.
inline constexpr double kDispersiveAxisOutset = 0.15;

// True when the ray angle phi hugs the real axis (within 3x the standard
// outset of a multiple of pi).
inline bool near_real_axis(const PdeSpec& pde, double phi) {
  double axis = std::round(phi / kPi) * kPi;
  return std::abs(phi - axis) <= 3.0 * sector_outset(pde);
}

// Exponential time-decay rate of the kernel at angle phi and |lambda| = 1:
// Re(a e^{i n phi}); positive means decay of e^{-a lambda^n t}.
inline double kernel_decay_rate(const PdeSpec& pde, double phi) {
  return std::cos(std::arg(pde.a) + pde.n * phi);
}

// Radius at which |e^{-a lambda^n t}| ~ e^{-budget} on a ray with decay
// rate `rate` (per unit rho^n).
inline double decay_truncation_radius(const PdeSpec& pde, double rate,
                                      double t, double budget = 40.0) {
  if (rate <= 0.0 || t <= 0.0) return std::numeric_limits<double>::infinity();
  return std::pow(budget / (std::abs(pde.a) * rate * t), 1.0 / pde.n);
}

// Panel edges along a radial ray with the width of each panel limited so
// the worst-case per-panel phase stays within `budget` radians (a 16-point
// panel is accurate up to ~12). The integrand phase has two sources: the
// e^{i lambda s} factors of the spectral densities with |s| up to ~3
// (kernel position plus interval endpoints), and the kernel's time factor,
// whose local rate is n |a| rho^{n-1} t. The largest evaluation time t_hi
// governs the latter, but only while this radius still contributes at that
// time: beyond the decay budget the tail is dropped anyway, so the binding
// time shrinks like 1/(rate rho^n) and the widths relax again.
// `pole_frac`, when positive, additionally caps the width at pole_frac*rho:
// used when a string of density poles runs parallel to the ray at distance
// proportional to rho, so panels never straddle a pole's influence zone.
inline std::vector<double> oscillation_ray_edges(const PdeSpec& pde,
                                                 double rate_decay, double r0,
                                                 double r_max, double t_hi,
                                                 double budget = 8.0,
                                                 double pole_frac = 0.0) {
  std::vector<double> edges{r0};
  const double aa = std::abs(pde.a);
  while (edges.back() < r_max) {
    double rho = edges.back();
    double t_eff = t_hi;
    if (rate_decay > 1e-9 && rho > 0.0) {
      double t_alive = 40.0 / (aa * rate_decay * std::pow(rho, pde.n));
      t_eff = std::min(t_eff, t_alive);
    }
    double rate = 3.0 + pde.n * aa * std::pow(rho, pde.n - 1) * t_eff;
    double w = std::clamp(budget / rate, 1e-3, 3.0);
    if (pole_frac > 0.0) w = std::min(w, std::max(pole_frac * rho, 1e-3));
    edges.push_back(std::min(r_max, rho + w));
    if (edges.size() > 60000) break;
  }
  return edges;
}

// One quadrature leg: nodes in traversal order with complete weights, so a
// contour integral is just sum_i weight[i] * f(lambda[i]).  Ray legs are
// ordered by increasing radius and may be truncated early; `tail_scale`
// converts the magnitude of the last retained term into a truncation
// estimate (remaining arc/ray length).
struct Leg {
  std::vector<Cplx> lambda;
  std::vector<Cplx> weight;
  bool ray = false;                 // supports early truncation
  std::vector<double> rho;          // |lambda| per node (ray legs)
  double rho_end = 0.0;             // nominal outer truncation radius
};

// Deformed boundary of one growth sector (three legs, traversal order).
// `t_min` sets the reach of the rays (smallest evaluation time decays the
// slowest); `t_hi` sets how finely they must be sampled (largest time
// oscillates the fastest).
inline std::vector<Leg> sector_boundary_legs(const PdeSpec& pde,
                                             const Sector& sec, double R,
                                             double t_min, double t_hi,
                                             double rho_cap,
                                             bool dispersive = false) {
  const double eps = sector_outset(pde);
  // Dispersive case: push axis-hugging rays further out, clear of the
  // on-axis determinant-zero string (swept residues restored separately).
  auto outset_angle = [&](double phi) {
    if (!dispersive || !near_real_axis(pde, phi)) return phi;
    double axis = std::round(phi / kPi) * kPi;
    return axis + (phi >= axis ? 1.0 : -1.0) * kDispersiveAxisOutset;
  };
  const bool in_axis = dispersive && near_real_axis(pde, sec.hi + eps);
  const bool out_axis = dispersive && near_real_axis(pde, sec.lo - eps);
  const double phi_in = outset_angle(sec.hi + eps);
  const double phi_out = outset_angle(sec.lo - eps);
  std::vector<Leg> legs;

  auto make_ray = [&](double phi, double sign, bool axis_ray) {
    Leg leg;
    leg.ray = true;
    double rate = kernel_decay_rate(pde, phi);
    double rmax = std::min(rho_cap, decay_truncation_radius(pde, rate, t_min));
    rmax = std::max(rmax, R + 1.0);
    leg.rho_end = rmax;
    // Poles sit on the axis at distance ~ rho * sin(outset) from an
    // axis-hugging ray; keep panels below that scale.
    double pole_frac = axis_ray ? 0.8 * std::sin(kDispersiveAxisOutset) : 0.0;
    auto edges = oscillation_ray_edges(pde, rate, R, rmax, t_hi, 8.0,
                                       pole_frac);
    std::vector<double> xs, ws;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
      append_panel(edges[i], edges[i + 1], xs, ws);
    Cplx dir = std::exp(Cplx(0, phi));
    leg.lambda.reserve(xs.size());
    leg.weight.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      leg.lambda.push_back(xs[i] * dir);
      leg.weight.push_back(sign * dir * ws[i]);
      leg.rho.push_back(xs[i]);
    }
    return leg;
  };

  legs.push_back(make_ray(phi_in, -1.0, in_axis));

  // Arc at radius R from phi_in down to phi_out: the reversed panel bounds
  // produce negative weights, which encode the orientation.  The phase per
  // unit angle is bounded by 3R (densities) plus n |a| R^n t_hi (kernel).
  Leg arc;
  double span = phi_in - phi_out;
  double phase_rate =
      3.0 * R + pde.n * std::abs(pde.a) * std::pow(R, pde.n) * t_hi;
  int panels = std::max(8, int(std::ceil(span * (phase_rate + 6.0) / 8.0)));
  panels = std::min(panels, 400);
  std::vector<double> xs, ws;
  append_uniform(phi_in, phi_out, panels, xs, ws);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Cplx lam = R * std::exp(Cplx(0, xs[i]));
    arc.lambda.push_back(lam);
    arc.weight.push_back(Cplx(0, 1) * lam * ws[i]);
  }
  legs.push_back(std::move(arc));

  legs.push_back(make_ray(phi_out, +1.0, out_axis));
  return legs;
}

// All legs of the deformed contour bounding the growth sectors in one half
// plane.
inline std::vector<Leg> half_plane_contour_legs(const PdeSpec& pde, bool upper,
                                                double R, double t_min,
                                                double t_hi, double rho_cap,
                                                bool dispersive = false) {
  std::vector<Leg> out;
  for (const auto& sec : half_plane_growth_sectors(pde, upper))
    for (auto& leg :
         sector_boundary_legs(pde, sec, R, t_min, t_hi, rho_cap, dispersive))
      out.push_back(std::move(leg));
  return out;
}

// ---------------------------------------------------------------------------
// Whole-line leg.

// Lift direction for odd order: +1 if both wedges just above the real axis
// are decay regions, -1 if both below are, 0 if neither (no valid lift).
inline int line_lift_sign(const PdeSpec& pde) {
  const double probe = 1e-3;
  auto decays = [&](double phi) { return kernel_decay_rate(pde, phi) > 0.0; };
  if (decays(probe) && decays(kPi - probe)) return +1;
  if (decays(-probe) && decays(-kPi + probe)) return -1;
  return 0;
}

// Quadrature legs replacing the integral over the real line.  Even order
// with decay on the axis: symmetric truncated interval.  Odd order: two
// rays lifted by a small angle into the decaying half plane.  Returns an
// empty list when no stable deformation exists (dispersive even case); the
// caller then falls back to a plain truncated axis with a warning.
// Symmetric truncated axis [-L, L] with oscillation-aware panels mirrored
// about the origin.  `rate_decay` caps the binding time once the kernel
// decays (pass 0 when it never does, e.g. the dispersive fallback).
inline Leg mirrored_axis_leg(const PdeSpec& pde, double L, double rate_decay,
                             double t_hi) {
  Leg leg;
  leg.ray = false;
  leg.rho_end = L;
  auto pos = oscillation_ray_edges(pde, rate_decay, 0.0, L, t_hi);
  std::vector<double> edges;
  edges.reserve(2 * pos.size());
  for (auto it = pos.rbegin(); it != pos.rend(); ++it) edges.push_back(-*it);
  for (std::size_t i = 1; i < pos.size(); ++i) edges.push_back(pos[i]);
  std::vector<double> xs, ws;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    append_panel(edges[i], edges[i + 1], xs, ws);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    leg.lambda.push_back(Cplx(xs[i], 0.0));
    leg.weight.push_back(Cplx(ws[i], 0.0));
  }
  return leg;
}

inline std::vector<Leg> line_legs(const PdeSpec& pde, double t_min,
                                  double t_hi, double rho_cap) {
  std::vector<Leg> out;
  if (pde.n % 2 == 0) {
    double rate0 = kernel_decay_rate(pde, 0.0);
    double rate_pi = kernel_decay_rate(pde, kPi);
    // A rate at rounding-noise scale (e.g. cos(pi/2)) is no decay at all.
    if (rate0 < 1e-9 || rate_pi < 1e-9) return out;  // dispersive
    double rate = std::min(rate0, rate_pi);
    double L = std::min(rho_cap, decay_truncation_radius(pde, rate, t_min));
    out.push_back(mirrored_axis_leg(pde, L, rate, t_hi));
    return out;
  }

  int sgn = line_lift_sign(pde);
  if (sgn == 0) return out;
  const double delta = 0.05;
  auto lifted_arm = [&](double phi, double orient) {
    Leg leg;
    leg.ray = true;
    double rate = kernel_decay_rate(pde, phi);
    double rmax = std::min(rho_cap, decay_truncation_radius(pde, rate, t_min));
    leg.rho_end = rmax;
    auto edges = oscillation_ray_edges(pde, rate, 0.0, rmax, t_hi);
    std::vector<double> xs, ws;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
      append_panel(edges[i], edges[i + 1], xs, ws);
    Cplx dir = std::exp(Cplx(0, phi));
    for (std::size_t i = 0; i < xs.size(); ++i) {
      leg.lambda.push_back(xs[i] * dir);
      leg.weight.push_back(orient * dir * ws[i]);
      leg.rho.push_back(xs[i]);
    }
    return leg;
  };
  // Right arm: angle sgn*delta traversed outward (+).  Left arm: angle
  // pi - sgn*delta traversed from infinity inward (-).
  out.push_back(lifted_arm(kPi - sgn * delta, -1.0));
  out.push_back(lifted_arm(sgn * delta, +1.0));
  return out;
}

// Plain truncated real axis (dispersive fallback; truncation error decays
// only algebraically, reported through the truncation estimate).  The
// kernel never decays here, so the oscillation budget is governed by t_hi
// all the way out.
inline Leg plain_axis_leg(const PdeSpec& pde, double L, double t_hi) {
  return mirrored_axis_leg(pde, L, 0.0, t_hi);
}

}  // namespace utpde
