#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "utpde/quadrature.hpp"
#include "utpde/scaled.hpp"
#include "utpde/transforms.hpp"

using namespace utpde;
using doctest::Approx;
using C = std::complex<double>;
using SC = ScaledComplex<double>;

TEST_CASE("int_power_exp matches adaptive quadrature across regimes") {
  struct Case {
    int d;
    C mu;
    double x0, x1;
  };
  const Case cases[] = {
      {0, C(0.0, 0.0), 0.0, 1.0},        {3, C(0.1, -0.2), 0.2, 0.9},
      {0, C(3.0, 40.0), 0.0, 1.0},       {5, C(-12.0, 7.0), 0.0, 0.5},
      {2, C(0.79, 0.0), 0.0, 1.0},       {1, C(0.0, 200.0), 0.3, 0.6},
      {4, C(25.0, -3.0), 0.5, 1.0},
  };
  for (const auto& cs : cases) {
    C exact = int_power_exp<C>(cs.d, cs.mu, cs.x0, cs.x1);
    C quad = adaptive_gl(
        [&](double x) {
          double mono = 1.0;
          for (int q = 0; q < cs.d; ++q) mono *= x;
          return mono * std::exp(cs.mu * x);
        },
        cs.x0, cs.x1, 1e-14);
    CHECK(std::abs(exact - quad) <= 1e-11 * (1.0 + std::abs(quad)));
  }
}

TEST_CASE("int_power_exp in scaled arithmetic survives huge exponents") {
  // integral_0^1 e^{mu x} dx = (e^mu - 1)/mu, log-magnitude ~ mu - log mu.
  double mu = 900.0;
  SC v = int_power_exp<SC>(0, C(mu, 0.0), 0.0, 1.0);
  CHECK(v.log_abs() == Approx(mu - std::log(mu)).epsilon(1e-12));

  // Decaying direction stays finite and accurate in plain complex terms.
  SC w = int_power_exp<SC>(0, C(-900.0, 0.0), 0.0, 1.0);
  CHECK(std::abs(w.to_complex() - C(1.0 / 900.0)) < 1e-16);
}

TEST_CASE("transform of sin(pi x) matches its closed form") {
  DataFunction q0 = DataFunction::parse("sin(pi*x)", 'x');
  for (C lam : {C(2.3, 0.0), C(-1.1, 0.7), C(40.0, 3.0)}) {
    C got = transform_on<C>(q0, 0.0, 1.0, lam);
    C want = kPi * (1.0 + std::exp(C(0, -1) * lam)) / (kPi * kPi - lam * lam);
    CHECK(std::abs(got - want) <= 1e-12 * (1.0 + std::abs(want)));
  }
}

TEST_CASE("piece transforms sum to the whole-interval transform") {
  DataFunction q0 = DataFunction::parse("1 + 6*x*(1-x)", 'x');
  std::vector<double> eta{0.0, 0.35, 0.8, 1.0};
  C lam(3.7, -0.4);
  auto parts = interval_transforms<C>(q0, eta, lam);
  C sum = 0.0;
  for (const auto& p : parts) sum += p;
  C whole = transform_on<C>(q0, 0.0, 1.0, lam);
  CHECK(std::abs(sum - whole) <= 1e-13 * (1.0 + std::abs(whole)));
}

TEST_CASE("piecewise-polynomial transforms are exact") {
  DataFunction f = DataFunction::piecewise({0.0, 0.5, 1.0},
                                           {{1.0}, {1.0, 2.0}});
  C lam(5.0, 1.0);
  C got = transform_on<C>(f, 0.0, 1.0, lam);
  C quad = adaptive_gl(
      [&](double x) { return f.eval(x) * std::exp(C(0, -1) * lam * x); }, 0.0,
      1.0, 1e-14);
  CHECK(std::abs(got - quad) <= 1e-12 * (1.0 + std::abs(quad)));
}

TEST_CASE("sampled transforms agree with the underlying function") {
  std::vector<double> xs;
  std::vector<C> vs;
  for (int i = 0; i <= 400; ++i) {
    double x = i / 400.0;
    xs.push_back(x);
    vs.push_back(std::sin(kPi * x));
  }
  DataFunction f = DataFunction::sampled(xs, vs);
  C lam(4.0, 0.5);
  C want = kPi * (1.0 + std::exp(C(0, -1) * lam)) / (kPi * kPi - lam * lam);
  C got = transform_on<C>(f, 0.0, 1.0, lam);
  CHECK(std::abs(got - want) < 1e-8);
}

TEST_CASE("transforms at exponentially large arguments via scaled field") {
  DataFunction q0 = DataFunction::parse("sin(pi*x)", 'x');
  C lam(0.0, 800.0);  // |e^{-i lam x}| = e^{800 x}: overflows plain doubles
  SC got = transform_on<SC>(q0, 0.0, 1.0, lam);
  // Closed form ~ pi e^{-i lam} / (pi^2 - lam^2): log|.| = 800 + log(pi/|..|)
  double logwant = 800.0 + std::log(kPi / std::abs(kPi * kPi - lam * lam));
  CHECK(got.log_abs() == Approx(logwant).epsilon(1e-10));
}

TEST_CASE("time transform of sin(4t) for the second-order equation") {
  PdeSpec pde{2, C(1.0, 0.0)};
  DataFunction g = DataFunction::parse("sin(4*t)", 't');
  auto p = time_exp_poly(g);
  REQUIRE(p.has_value());

  // Effective (tau-free) part has the closed form 4 / ((a z^2)^2 + 16).
  for (C z : {C(1.3, 0.2), C(0.4, -1.0), C(2.0, 2.0)}) {
    C got = h_effective<C>(pde, *p, z);
    C W = pde.a * z * z;
    C want = 4.0 / (W * W + 16.0);
    CHECK(std::abs(got - want) <= 1e-13 * (1.0 + std::abs(want)));
  }

  // Exact transform matches direct quadrature of -a(-i)^n e^{W s} g(s).
  C z(1.1, 0.6);
  double tau = 0.7;
  C W = pde.a * z * z;
  C pref = -a_minus_i_pow_n(pde);
  C quad = pref * adaptive_gl(
                      [&](double s) { return std::exp(W * s) * std::sin(4 * s); },
                      0.0, tau, 1e-14);
  C got = h_exact<C>(pde, *p, z, tau);
  CHECK(std::abs(got - quad) <= 1e-12 * (1.0 + std::abs(quad)));
}

TEST_CASE("h_exact minus the dropped terms reproduces h_effective") {
  // For g = e^{nu t}: kept part is -pref/(W+nu) with the e^{(W+nu) tau}
  // term dropped; verify h_effective == h_exact - pref * e^{mu tau}/mu.
  PdeSpec pde{3, C(0.0, -1.0)};
  DataFunction g = DataFunction::parse("exp(-2*t)", 't');
  auto p = time_exp_poly(g);
  REQUIRE(p.has_value());
  C z(1.4, 0.5);
  double tau = 0.9;
  C W = pde.a * z * z * z;
  C mu = W + C(-2.0, 0.0);
  C pref = -a_minus_i_pow_n(pde);
  C dropped = pref * std::exp(mu * tau) / mu;
  C diff = h_exact<C>(pde, *p, z, tau) - dropped;
  C eff = h_effective<C>(pde, *p, z);
  CHECK(std::abs(diff - eff) <= 1e-12 * (1.0 + std::abs(eff)));
}

TEST_CASE("pole radius of the boundary data") {
  PdeSpec pde{2, C(1.0, 0.0)};
  std::vector<DataFunction> gs{DataFunction::parse("sin(4*t)", 't'),
                               DataFunction::parse("0", 't')};
  CHECK(data_pole_radius(pde, gs) == Approx(2.0));  // |4i|^{1/2}

  std::vector<DataFunction> poly{DataFunction::parse("1 + t^2", 't')};
  CHECK(data_pole_radius(pde, poly) == Approx(0.0));
  CHECK(all_data_exp_poly(gs));
}

TEST_CASE("polynomial time data keeps only the algebraic part") {
  // g = t: integral_0^tau e^{W s} s ds has kept part 1/W^2 (times prefactor).
  PdeSpec pde{2, C(1.0, 0.0)};
  DataFunction g = DataFunction::parse("t", 't');
  auto p = time_exp_poly(g);
  REQUIRE(p.has_value());
  C z(1.7, 0.3);
  C W = pde.a * z * z;
  C want = a_minus_i_pow_n(pde) * (-1.0) / (W * W);
  C got = h_effective<C>(pde, *p, z);
  CHECK(std::abs(got - want) <= 1e-13 * (1.0 + std::abs(want)));
}
