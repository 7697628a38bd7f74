#pragma once
// Composite Gauss-Legendre quadrature building blocks. All contour and time
// integrals in the library are sums over panels of the fixed 16-point rule;
// panel layout (geometric growth with a hard length cap) is decided here so
// every consumer resolves unit-scale oscillations the same way.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace utpde {

struct QuadNode {
  double x;
  double w;
};

// 16-point Gauss-Legendre rule on [-1, 1].
inline const std::array<QuadNode, 16>& gauss16() {
  static const std::array<QuadNode, 16> nodes = {{
      {-9.89400934991649939e-01, 2.71524594117540374e-02},
      {-9.44575023073232600e-01, 6.22535239386477063e-02},
      {-8.65631202387831755e-01, 9.51585116824925914e-02},
      {-7.55404408355002999e-01, 1.24628971255534030e-01},
      {-6.17876244402643771e-01, 1.49595988816576764e-01},
      {-4.58016777657227370e-01, 1.69156519395002619e-01},
      {-2.81603550779258915e-01, 1.82603415044923612e-01},
      {-9.50125098376374544e-02, 1.89450610455068585e-01},
      {+9.50125098376374544e-02, 1.89450610455068585e-01},
      {+2.81603550779258915e-01, 1.82603415044923612e-01},
      {+4.58016777657227370e-01, 1.69156519395002619e-01},
      {+6.17876244402643771e-01, 1.49595988816576764e-01},
      {+7.55404408355002999e-01, 1.24628971255534030e-01},
      {+8.65631202387831755e-01, 9.51585116824925914e-02},
      {+9.44575023073232600e-01, 6.22535239386477063e-02},
      {+9.89400934991649939e-01, 2.71524594117540374e-02},
  }};
  return nodes;
}

// Append the 16 nodes of one panel [a, b] to xs/ws.
inline void append_panel(double a, double b, std::vector<double>& xs,
                         std::vector<double>& ws) {
  double mid = 0.5 * (a + b);
  double half = 0.5 * (b - a);
  for (const auto& n : gauss16()) {
    xs.push_back(mid + half * n.x);
    ws.push_back(half * n.w);
  }
}

// Uniformly split [a, b] into `panels` panels of the 16-point rule.
inline void append_uniform(double a, double b, int panels,
                           std::vector<double>& xs, std::vector<double>& ws) {
  for (int i = 0; i < panels; ++i) {
    double lo = a + (b - a) * i / panels;
    double hi = a + (b - a) * (i + 1) / panels;
    append_panel(lo, hi, xs, ws);
  }
}

// Geometrically refined panel edges on (0, tau] accumulating toward 0:
// splits at tau/2, tau/4, ... until `floor_frac*tau`, then one final panel
// [0 .. floor] handled by the caller (often via a series expansion).
inline std::vector<double> refined_time_edges(double tau, double floor_frac) {
  std::vector<double> edges;
  double lo = tau;
  edges.push_back(tau);
  while (lo > floor_frac * tau * 2.0) {
    lo *= 0.5;
    edges.push_back(lo);
  }
  edges.push_back(floor_frac * tau);
  // edges descending: tau, tau/2, ..., floor
  return edges;
}

// Adaptive Gauss-Legendre on a finite interval for smooth complex
// integrands: bisect until the 16 vs 2x16 panel estimates agree.
template <class Fn>
std::complex<double> adaptive_gl(Fn&& f, double a, double b,
                                 double rel_tol = 1e-12, int depth = 0) {
  auto panel = [&](double lo, double hi) {
    std::complex<double> s = 0.0;
    double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    for (const auto& n : gauss16()) s += half * n.w * f(mid + half * n.x);
    return s;
  };
  std::complex<double> whole = panel(a, b);
  double m = 0.5 * (a + b);
  std::complex<double> split = panel(a, m) + panel(m, b);
  double err = std::abs(whole - split);
  if (depth >= 24 || err <= rel_tol * (1.0 + std::abs(split))) return split;
  return adaptive_gl(f, a, m, rel_tol, depth + 1) +
         adaptive_gl(f, m, b, rel_tol, depth + 1);
}

}  // namespace utpde
