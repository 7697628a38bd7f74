#pragma once

// Well-posedness diagnostics.
//
// Admissibility: the solution representation converges when the two contour
// unknowns decay at least like 1/lambda along the closed growth sectors.
// This is probed directly: the interface system is solved (in scaled
// arithmetic) along rays spanning each sector with the surrogate data
// y_p^r = qhat^r(alpha^p lambda), and the log-magnitude of the upper unknown
// (resp. the lower unknown with its unit-interval growth factor e^{i lambda}
// removed) is fitted against log |lambda|.  Slopes <= -1 + tol on every ray
// mean the problem is admissible.
//
// Zeros: the interface determinant Delta is a meromorphic function whose
// finite-lambda zeros must stay inside the excluded disk |lambda| < R of the
// contour.  lambda^{n(n-1)} Delta is analytic, so zeros are located by the
// argument principle (adaptive continuous-phase winding along closed paths)
// with recursive box subdivision and a Newton polish.
//
// choose_R: starts from the data-pole bound (poles of the effective forcing
// tail at a lambda^n = -nu) and grows R until the winding number of
// lambda^{n(n-1)} Delta vanishes on every outset wedge R <= |lambda| <= Rmax
// of every growth sector, certifying a zero-free contour.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "utpde/contour.hpp"
#include "utpde/error.hpp"
#include "utpde/problem.hpp"
#include "utpde/scaled.hpp"
#include "utpde/spectral.hpp"
#include "utpde/transforms.hpp"

namespace utpde {

// ---------------------------------------------------------------------------
// Admissibility
// ---------------------------------------------------------------------------

struct RayFit {
  double angle = 0.0;
  bool lower_unknown = false;  // fitted x_m e^{i lambda} instead of x_0
  double slope = 0.0;
  int points = 0;
};

struct AdmissibilityReport {
  bool admissible = false;
  double tol = 0.2;        // slope tolerance around the critical -1
  double worst_slope = 0;  // largest fitted slope over all rays
  std::vector<RayFit> fits;
  std::vector<Finding> findings;
};

namespace detail {

inline double ls_slope(const std::vector<double>& xs,
                       const std::vector<double>& ys) {
  double xm = 0, ym = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) xm += xs[i], ym += ys[i];
  xm /= double(xs.size());
  ym /= double(xs.size());
  double num = 0, den = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - xm) * (ys[i] - ym);
    den += (xs[i] - xm) * (xs[i] - xm);
  }
  return num / den;
}

// Ray angles probing one sector: both edges (inset) and the middle.
inline std::vector<double> probe_angles(const Sector& sec) {
  double inset = std::min(kPi / 12.0, 0.45 * sec.width());
  return {sec.lo + inset, sec.mid(), sec.hi - inset};
}

}  // namespace detail

// Decay of the contour unknowns along the growth-sector rays.
inline AdmissibilityReport check_admissibility(const ProblemSpec& p) {
  using SC = ScaledComplex<double>;
  AdmissibilityReport rep;
  const int n = p.pde.n;
  const int m = p.m();
  const Cplx al = p.pde.alpha();

  // Data surrogate: the actual initial state when its transforms can be
  // evaluated exactly at huge |lambda|; otherwise a constant probe.
  DataFunction probe = p.q0;
  bool degenerate = true;
  for (int i = 0; i <= 8; ++i) {
    double x = p.eta.front() + (p.eta.back() - p.eta.front()) * i / 8.0;
    if (std::abs(probe.eval(x)) > 1e-14) degenerate = false;
  }
  if (degenerate || !probe.ep_pieces(p.eta.front(), p.eta.back())) {
    if (!degenerate)
      rep.findings.push_back(
          {Finding::Severity::Note, "surrogate",
           "initial state has no exact transform; admissibility probed with "
           "a constant surrogate",
           true});
    probe = DataFunction::parse("1", 'x');
  }

  auto solve_at = [&](Cplx lam) {
    auto B = assemble_beta<SC>(p.pde, lam, p.eta, p.b);
    std::vector<SC> ys(std::size_t(n) * (m + 1));
    for (int pp = 0; pp < n; ++pp) {
      auto tr = interval_transforms<SC>(probe, p.eta, pow_int(al, pp) * lam);
      for (int r = 1; r <= m; ++r)
        ys[std::size_t(pp) * (m + 1) + r] = tr[std::size_t(r) - 1];
    }
    std::vector<SC> hs(n);
    return solve_dtn_closed(p.pde, B, ys, hs, lam);
  };

  rep.worst_slope = -std::numeric_limits<double>::infinity();
  for (int side = 0; side < 2; ++side) {
    bool upper = side == 0;
    for (const auto& sec : half_plane_growth_sectors(p.pde, upper)) {
      for (double ang : detail::probe_angles(sec)) {
        std::vector<double> lx, ly;
        int singular = 0;
        for (int i = 0; i < 20; ++i) {
          double r = 1e2 * std::pow(1e4 / 1e2, i / 19.0);
          Cplx lam = r * std::exp(Cplx(0, ang));
          bool ok = false;
          for (int tries = 0; tries < 4 && !ok; ++tries) {
            try {
              auto sol = solve_at(lam);
              double v = upper ? sol.upper().log_abs()
                               : sol.lower().log_abs() - std::imag(lam);
              if (std::isfinite(v)) {
                lx.push_back(std::log(std::abs(lam)));
                ly.push_back(v);
              }
              ok = true;
            } catch (const NearSingularError&) {
              lam *= 1.013;  // may be a discrete determinant zero; nudge
            }
          }
          if (!ok) ++singular;
        }
        RayFit fit;
        fit.angle = ang;
        fit.lower_unknown = !upper;
        fit.points = int(lx.size());
        if (singular >= 10) {
          // The system stays numerically singular along the whole ray: the
          // determinant is exponentially small against its own terms, so
          // the unknowns are exponentially large in the data.  Growth.
          fit.slope = 10.0;
          rep.findings.push_back(
              {Finding::Severity::Warning, "ray",
               "interface system persistently near-singular along a growth "
               "ray; unknowns are not controlled there",
               true});
        } else if (lx.size() >= 5) {
          fit.slope = detail::ls_slope(lx, ly);
        } else {
          fit.slope = -2.0;  // identically vanishing unknown on this ray
          rep.findings.push_back({Finding::Severity::Note, "ray",
                                  "unknown vanished along a probe ray; "
                                  "treated as decaying",
                                  true});
        }
        rep.worst_slope = std::max(rep.worst_slope, fit.slope);
        rep.fits.push_back(fit);
      }
    }
  }
  rep.admissible = rep.worst_slope <= -1.0 + rep.tol;
  return rep;
}

// ---------------------------------------------------------------------------
// Argument-principle zero location
// ---------------------------------------------------------------------------

struct ZeroInfo {
  Cplx lambda;
  double absdelta = 0.0;  // |Delta| at the reported point
  int multiplicity = 1;
  int region = 0;  // id of the search region that produced it
};

namespace detail {

// arg of lambda^{n(n-1)} Delta(lambda) via scaled arithmetic (the magnitude
// may overflow doubles; only the mantissa's phase is needed).  At the
// singular point lambda = 0 the phase is undefined; NaN makes the adaptive
// marching subdivide away from it and eventually report failure, which the
// callers handle by jittering the path.
template <typename Field>
inline double normalized_phase(const PdeSpec& pde, Cplx lam,
                               const std::vector<double>& eta,
                               const ConditionTensor& b) {
  if (std::abs(lam) < 1e-12)
    return std::numeric_limits<double>::quiet_NaN();
  Field d = delta_at<Field>(pde, lam, eta, b);
  Field lp = Field::from(Cplx(1.0));
  Field lf = Field::from(lam);
  for (int i = 0; i < pde.n * (pde.n - 1); ++i) lp = lp * lf;
  Field g = lp * d;
  return std::arg(g.mantissa());
}

inline double wrap_pi(double x) {
  while (x > kPi) x -= 2 * kPi;
  while (x < -kPi) x += 2 * kPi;
  return x;
}

struct PathSegment {
  std::function<Cplx(double)> at;  // t in [0, 1]
};

// Step-size policy that rules out phase aliasing: the tracked functions are
// lambda^p times sums of products of exponentials e^{i alpha^s lambda eta}
// with |eta| <= 1, so the phase moves at most `rate` per unit arclength plus
// p / |lambda| from the power factor.  Keeping every accepted step within a
// fraction of a radian of guaranteed phase change makes a hidden full turn
// impossible (the wrapped-difference test alone can silently alias by 2 pi
// on smooth fast-rotating stretches).
struct PhaseStep {
  double rate = 2.0;  // exponential phase rate bound (= problem order)
  int p = 2;          // power of the lambda prefactor
  bool small_enough(Cplx z0, Cplx z1) const {
    double gap = std::abs(z1 - z0);
    if (gap * rate > 0.45) return false;
    double rmin = std::min(std::abs(z0), std::abs(z1));
    return gap * p <= 0.45 * rmin;
  }
};

// Total continuous-phase increment along one segment, or nullopt when the
// phase cannot be tracked (path passes too close to a zero).
inline std::optional<double> phase_increment(
    const std::function<double(Cplx)>& phase, const PathSegment& seg,
    const PhaseStep& st, double t0, double t1, Cplx z0, Cplx z1, double p0,
    double p1, int depth) {
  double d = wrap_pi(p1 - p0);
  if (std::abs(d) <= 1.2 && st.small_enough(z0, z1)) return d;
  if (depth > 48 || t1 - t0 < 1e-12) return std::nullopt;
  double tm = 0.5 * (t0 + t1);
  Cplx zm = seg.at(tm);
  double pm = phase(zm);
  auto left =
      phase_increment(phase, seg, st, t0, tm, z0, zm, p0, pm, depth + 1);
  if (!left) return std::nullopt;
  auto right =
      phase_increment(phase, seg, st, tm, t1, zm, z1, pm, p1, depth + 1);
  if (!right) return std::nullopt;
  return *left + *right;
}

// Winding number of `phase`'s underlying function around a closed path.
inline std::optional<int> winding_number(
    const std::function<double(Cplx)>& phase,
    const std::vector<PathSegment>& path, const PhaseStep& st) {
  double total = 0.0;
  for (const auto& seg : path) {
    Cplx z0 = seg.at(0.0), z1 = seg.at(1.0);
    double p0 = phase(z0);
    double p1 = phase(z1);
    auto inc = phase_increment(phase, seg, st, 0.0, 1.0, z0, z1, p0, p1, 0);
    if (!inc) return std::nullopt;
    total += *inc;
  }
  double w = total / (2 * kPi);
  double r = std::round(w);
  if (std::abs(w - r) > 1e-3) return std::nullopt;
  return int(r);
}

inline std::vector<PathSegment> rect_path(double re0, double re1, double im0,
                                          double im1) {
  auto line = [](Cplx a, Cplx b) {
    return PathSegment{[a, b](double t) { return a + (b - a) * t; }};
  };
  Cplx c00(re0, im0), c10(re1, im0), c11(re1, im1), c01(re0, im1);
  return {line(c00, c10), line(c10, c11), line(c11, c01), line(c01, c00)};
}

// Boundary of an annular wedge (radii r0 < r1, angles a0 < a1),
// counter-clockwise.
inline std::vector<PathSegment> wedge_path(double r0, double r1, double a0,
                                           double a1) {
  auto ray = [](double ang, double ra, double rb) {
    return PathSegment{[ang, ra, rb](double t) {
      return (ra + (rb - ra) * t) * std::exp(Cplx(0, ang));
    }};
  };
  auto arc = [](double r, double aa, double ab) {
    return PathSegment{[r, aa, ab](double t) {
      return r * std::exp(Cplx(0, aa + (ab - aa) * t));
    }};
  };
  return {ray(a0, r0, r1), arc(r1, a0, a1), ray(a1, r1, r0), arc(r0, a1, a0)};
}

struct Box {
  double re0, re1, im0, im1;
  double diag() const { return std::hypot(re1 - re0, im1 - im0); }
};

// Axis-aligned bounding box of the annular wedge r in [r0, r1],
// angle in [a0, a1] (angles may leave the principal branch).
inline Box wedge_bbox(double r0, double r1, double a0, double a1) {
  std::vector<double> angs{a0, a1};
  for (int k = int(std::floor(a0 / (kPi / 2))) - 1;
       k <= int(std::ceil(a1 / (kPi / 2))) + 1; ++k) {
    double c = k * kPi / 2;
    if (c > a0 && c < a1) angs.push_back(c);
  }
  Box bx{1e300, -1e300, 1e300, -1e300};
  for (double ang : angs)
    for (double r : {r0, r1}) {
      bx.re0 = std::min(bx.re0, r * std::cos(ang));
      bx.re1 = std::max(bx.re1, r * std::cos(ang));
      bx.im0 = std::min(bx.im0, r * std::sin(ang));
      bx.im1 = std::max(bx.im1, r * std::sin(ang));
    }
  return bx;
}

// Whether arg(z) falls in [lo, hi] modulo 2 pi.
inline bool angle_in(Cplx z, double lo, double hi) {
  double a = std::arg(z);
  for (double s : {-2 * kPi, 0.0, 2 * kPi})
    if (a + s >= lo && a + s <= hi) return true;
  return false;
}

}  // namespace detail

// Zeros of the interface determinant inside a rectangle, by recursive
// argument-principle subdivision with Newton polish.  Zeros indistinguishable
// from lambda = 0 (where the spectral functions are singular rather than
// zero) are dropped.
inline std::vector<ZeroInfo> locate_zeros(const PdeSpec& pde,
                                          const std::vector<double>& eta,
                                          const ConditionTensor& b, Cplx lo,
                                          Cplx hi, int region_id = 0,
                                          int max_zeros = 128) {
  using SC = ScaledComplex<double>;
  auto phase = [&](Cplx lam) {
    return detail::normalized_phase<SC>(pde, lam, eta, b);
  };
  const detail::PhaseStep step{double(pde.n), pde.n * (pde.n - 1)};
  auto winding_box = [&](const detail::Box& bx) {
    return detail::winding_number(
        phase, detail::rect_path(bx.re0, bx.re1, bx.im0, bx.im1), step);
  };
  // A box whose boundary passes through (or too close to) a zero defeats
  // phase tracking; retry with slightly shifted bounds.
  auto winding_robust = [&](detail::Box& bx) -> std::optional<int> {
    for (int k = 0; k < 4; ++k) {
      auto w = winding_box(bx);
      if (w) return w;
      double j = 3e-4 * (k + 1) * (1.0 + bx.diag());
      bx = {bx.re0 - j, bx.re1 + j * 1.07, bx.im0 - j * 0.93, bx.im1 + j};
    }
    return std::nullopt;
  };

  const int p = pde.n * (pde.n - 1);
  std::vector<ZeroInfo> out;
  std::vector<detail::Box> stack{{std::real(lo), std::real(hi), std::imag(lo),
                                  std::imag(hi)}};
  int processed = 0;
  while (!stack.empty()) {
    if (++processed > 6000)
      throw NumericalError("zero search did not converge (too many boxes)");
    detail::Box bx = stack.back();
    stack.pop_back();
    auto w = winding_robust(bx);
    if (!w)
      throw NumericalError(
          "argument-principle phase tracking failed; a zero may lie on the "
          "search boundary");
    if (*w == 0) continue;
    if (int(out.size()) + *w > max_zeros)
      throw NumericalError("zero search exceeded the zero budget");
    if (bx.diag() > 1e-2) {
      bool split_re = (bx.re1 - bx.re0) >= (bx.im1 - bx.im0);
      // Jittered split so a zero sitting on the cut cannot stall progress.
      for (double frac : {0.5, 0.57, 0.43, 0.64}) {
        detail::Box b1 = bx, b2 = bx;
        if (split_re) {
          double c = bx.re0 + frac * (bx.re1 - bx.re0);
          b1.re1 = c;
          b2.re0 = c;
        } else {
          double c = bx.im0 + frac * (bx.im1 - bx.im0);
          b1.im1 = c;
          b2.im0 = c;
        }
        auto w1 = winding_box(b1), w2 = winding_box(b2);
        if (w1 && w2 && *w1 + *w2 == *w) {
          if (*w1 != 0) stack.push_back(b1);
          if (*w2 != 0) stack.push_back(b2);
          w = 0;
          break;
        }
      }
      if (*w == 0) continue;
      if (bx.diag() > 0.5)
        throw NumericalError(
            "zero search could not isolate a cluster; subdivision kept "
            "failing on a large box");
      // fall through: treat the small box as a converged cluster
    }
    ZeroInfo z;
    z.lambda = Cplx(0.5 * (bx.re0 + bx.re1), 0.5 * (bx.im0 + bx.im1));
    z.multiplicity = *w;
    z.region = region_id;
    // Newton polish on lambda^p Delta (plain arithmetic is safe at the
    // moderate radii where polishing matters).
    if (std::abs(z.lambda) * pde.n < 280.0) {
      Cplx lam = z.lambda;
      for (int it = 0; it < 60; ++it) {
        auto [d, dd] = delta_and_derivative(pde, lam, eta, b);
        Cplx g = pow_int(lam, p) * d;
        Cplx gp = pow_int(lam, p) * dd +
                  double(p) * pow_int(lam, p - 1) * d;
        if (std::abs(gp) == 0.0) break;
        Cplx step = g / gp * double(z.multiplicity);
        lam -= step;
        if (std::abs(step) < 1e-13 * (1.0 + std::abs(lam))) break;
      }
      // Accept the polished point only if it stayed near the box.
      if (std::abs(lam - z.lambda) < 4.0 * bx.diag() + 1e-6) z.lambda = lam;
    }
    SC dval = delta_at<SC>(pde, z.lambda, eta, b);
    double la = dval.log_abs();
    z.absdelta = la > 700 ? std::numeric_limits<double>::infinity()
                          : (la < -745 ? 0.0 : std::exp(la));
    if (std::abs(z.lambda) > 1e-8) out.push_back(z);
  }
  // Merge duplicates produced by jittered boxes.
  std::vector<ZeroInfo> merged;
  for (const auto& z : out) {
    bool dup = false;
    for (auto& q : merged)
      if (std::abs(q.lambda - z.lambda) < 1e-6) {
        dup = true;
        if (z.absdelta < q.absdelta) q = z;
      }
    if (!dup) merged.push_back(z);
  }
  std::sort(merged.begin(), merged.end(), [](const ZeroInfo& x,
                                             const ZeroInfo& y) {
    return std::abs(x.lambda) < std::abs(y.lambda);
  });
  return merged;
}

// ---------------------------------------------------------------------------
// Contour radius selection
// ---------------------------------------------------------------------------

struct RadiusChoice {
  double R = 0.0;
  double pole_radius = 0.0;            // largest data-pole radius
  std::vector<ZeroInfo> cleared;       // determinant zeros pushed inside
  std::vector<Finding> findings;
};

// Smallest certified contour radius: beyond R every outset wedge of every
// growth sector is free of determinant zeros, and the poles of the
// effective forcing tail lie inside the excluded disk.
inline RadiusChoice choose_R(const ProblemSpec& p, double R_floor = 1.5) {
  using SC = ScaledComplex<double>;
  RadiusChoice rc;
  rc.pole_radius = data_pole_radius(p.pde, p.g);
  double R = std::max(R_floor, 1.05 * rc.pole_radius);
  const double eps = sector_outset(p.pde);
  auto phase = [&](Cplx lam) {
    return detail::normalized_phase<SC>(p.pde, lam, p.eta, p.b);
  };
  const detail::PhaseStep step{double(p.pde.n), p.pde.n * (p.pde.n - 1)};

  std::vector<Sector> sectors;
  for (bool upper : {true, false})
    for (const auto& s : half_plane_growth_sectors(p.pde, upper))
      sectors.push_back(s);

  for (int iter = 0; iter < 8; ++iter) {
    bool clear = true;
    for (const auto& sec : sectors) {
      double rmax = std::max(4.0 * R, 100.0);
      auto w = detail::winding_number(
          phase, detail::wedge_path(R, rmax, sec.lo - eps, sec.hi + eps),
          step);
      if (!w) {
        // A zero sits on (or hugs) the wedge boundary: nudge the radius.
        R *= 1.07;
        clear = false;
        break;
      }
      if (*w != 0) {
        // Find the offending zeros and push R past them.
        auto bb = detail::wedge_bbox(0.9 * R, 1.02 * rmax, sec.lo - 2 * eps,
                                     sec.hi + 2 * eps);
        auto zs = locate_zeros(p.pde, p.eta, p.b, Cplx(bb.re0, bb.im0),
                               Cplx(bb.re1, bb.im1), 0, 256);
        double worst = 0.0;
        for (const auto& z : zs) {
          double rad = std::abs(z.lambda);
          if (rad >= 0.95 * R &&
              detail::angle_in(z.lambda, sec.lo - 2 * eps,
                               sec.hi + 2 * eps)) {
            worst = std::max(worst, rad);
            rc.cleared.push_back(z);
          }
        }
        if (worst == 0.0) {
          R *= 1.3;  // winding disagreed with the box search; be generous
        } else {
          R = 1.05 * worst;
        }
        clear = false;
        break;
      }
    }
    if (clear) {
      rc.R = R;
      return rc;
    }
  }
  throw NumericalError(
      "could not certify a zero-free contour radius; the interface "
      "determinant keeps zeros arbitrarily far out in a growth sector");
}

}  // namespace utpde
