#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "doctest.h"
#include "utpde/spectral.hpp"

using namespace utpde;
using doctest::Approx;
using C = std::complex<double>;
using SC = ScaledComplex<double>;

namespace {

std::mt19937 rng(20260816);
double rnd() {
  static std::normal_distribution<double> d(0.0, 1.0);
  return d(rng);
}
C crnd() { return C(rnd(), rnd()); }

std::vector<double> random_eta(int m) {
  std::vector<double> eta{0.0};
  if (m > 1) {
    std::vector<double> mid(m - 1);
    std::uniform_real_distribution<double> u(0.1, 0.9);
    for (auto& x : mid) x = u(rng);
    std::sort(mid.begin(), mid.end());
    for (double x : mid) eta.push_back(x);
  }
  eta.push_back(1.0);
  return eta;
}

ConditionTensor random_tensor(int n, int m) {
  ConditionTensor b(n, m + 1);
  for (auto& z : b.v) z = rnd();
  return b;
}

// Exact unknowns and data for the manufactured solution
// q(x, t) = exp(i mu x - a mu^n t).
struct Manufactured {
  Eigen::VectorXcd u;
  std::vector<C> hs;
  std::vector<C> ys;  // p-major, slot r = 0 unused
};

Manufactured manufactured(const PdeSpec& pde, C lam,
                          const std::vector<double>& eta,
                          const ConditionTensor& b, C mu, double tau) {
  const int n = pde.n;
  const int m = int(eta.size()) - 1;
  const C al = pde.alpha();
  const C I(0, 1);
  C dif = pde.a * (pow_int(lam, n) - pow_int(mu, n));
  C Itau = (std::exp(dif * tau) - 1.0) / dif;

  std::vector<C> f(std::size_t(n) * (m + 1));
  for (int k = 0; k < n; ++k)
    for (int r = 0; r <= m; ++r)
      f[std::size_t(k) * (m + 1) + r] = c_coef(pde, lam, k) *
                                        pow_int(I * mu, k) *
                                        std::exp(I * mu * eta[r]) * Itau;
  Manufactured out;
  out.u.resize(n * (m + 1));
  for (int r = 0; r <= m; ++r)
    for (int s = 0; s < n; ++s) {
      C als = pow_int(al, s);
      C acc = 0.0;
      for (int k = 0; k < n; ++k)
        acc += pow_int(al, ((n - 1 - k) * s) % n) *
               f[std::size_t(k) * (m + 1) + r];
      out.u(r * n + s) = std::exp(-I * als * lam * eta[r]) * acc;
    }
  out.hs.assign(n, C(0));
  C pref_h = -a_minus_i_pow_n(pde);
  for (int j = 0; j < n; ++j) {
    C amp = 0.0;
    for (int k = 0; k < n; ++k)
      for (int r = 0; r <= m; ++r)
        amp += b.at(k, j, r) * pow_int(I * mu, k) * std::exp(I * mu * eta[r]);
    out.hs[j] = pref_h * amp * Itau;
  }
  out.ys.assign(std::size_t(n) * (m + 1), C(0));
  for (int rr = 1; rr <= m; ++rr)
    for (int p = 0; p < n; ++p) {
      C z = pow_int(al, p) * lam;
      C q0hat = (std::exp(I * (mu - z) * eta[rr]) -
                 std::exp(I * (mu - z) * eta[rr - 1])) /
                (I * (mu - z));
      C qtauhat = std::exp(-pde.a * pow_int(mu, n) * tau) * q0hat;
      out.ys[std::size_t(p) * (m + 1) + rr] =
          -q0hat + std::exp(pde.a * pow_int(lam, n) * tau) * qtauhat;
    }
  return out;
}

// integral_{x0}^{x1} e^{-i z x} dx (transform of the constant 1).
C qhat_piece_one(C z, double x0, double x1) {
  const C I(0, 1);
  return (std::exp(-I * z * x0) - std::exp(-I * z * x1)) / (I * z);
}

ConditionTensor two_interface_tensor(double c0, double c1) {
  ConditionTensor b(2, 3);
  b.at(0, 0, 0) = 1.0;
  b.at(0, 0, 1) = -c0;
  b.at(0, 1, 1) = -c1;
  b.at(0, 1, 2) = 1.0;
  return b;
}

ConditionTensor third_order_tensor(double c) {
  ConditionTensor b(3, 3);
  b.at(0, 0, 0) = 1.0;
  b.at(0, 0, 1) = -c;
  b.at(0, 1, 2) = 1.0;
  b.at(1, 2, 2) = 1.0;
  return b;
}

}  // namespace

TEST_CASE("symbol coefficients: a / (-(i^n) c_{n-1}) == 1") {
  for (int n : {2, 3}) {
    PdeSpec pde{n, crnd()};
    C lam = crnd();
    C in = 1.0;
    for (int q = 0; q < n; ++q) in *= C(0, 1);
    C ratio = pde.a / (-in * c_coef(pde, lam, n - 1));
    CHECK(std::abs(ratio - 1.0) < 1e-14);
  }
}

TEST_CASE("manufactured exact solution satisfies the assembled system") {
  for (int trial = 0; trial < 12; ++trial) {
    int n = 2 + (trial % 2);
    int m = 1 + (trial % 3);
    PdeSpec pde{n, crnd()};
    auto eta = random_eta(m);
    auto b = random_tensor(n, m);
    C lam = crnd(), mu = crnd();
    if (std::abs(pde.a * (pow_int(lam, n) - pow_int(mu, n))) < 1e-2) continue;
    double tau = 0.4;
    auto mf = manufactured(pde, lam, eta, b, mu, tau);
    Eigen::MatrixXcd A = assemble_system(pde, lam, eta, b);
    Eigen::VectorXcd rhs = assemble_rhs(n, m, mf.hs, mf.ys);
    double res = (A.transpose() * mf.u - rhs).cwiseAbs().maxCoeff();
    double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
    CHECK(res / scale < 1e-10);
  }
}

TEST_CASE("rotation rows are rotations of the first row") {
  SUBCASE("order 2: row 1 at lambda equals row 0 at -lambda") {
    PdeSpec pde{2, C(1.0, 0.0)};
    auto eta = random_eta(2);
    auto b = random_tensor(2, 2);
    C lam = crnd();
    auto B1 = assemble_beta<C>(pde, lam, eta, b);
    auto B2 = assemble_beta<C>(pde, -lam, eta, b);
    for (int j = 0; j < 2; ++j)
      for (int r = 0; r <= 2; ++r)
        CHECK(std::abs(B1.at(1, j, r) - B2.at(0, j, r)) < 1e-12);
  }
  SUBCASE("order 3: row s at lambda equals row 0 at alpha^s lambda") {
    PdeSpec pde{3, C(0.0, -1.0)};
    auto eta = random_eta(2);
    auto b = random_tensor(3, 2);
    C lam = crnd();
    auto B1 = assemble_beta<C>(pde, lam, eta, b);
    for (int s = 1; s < 3; ++s) {
      auto B2 = assemble_beta<C>(pde, pow_int(pde.alpha(), s) * lam, eta, b);
      for (int j = 0; j < 3; ++j)
        for (int r = 0; r <= 2; ++r)
          CHECK(std::abs(B1.at(s, j, r) - B2.at(0, j, r)) < 1e-11);
    }
  }
}

TEST_CASE("determinant factorization: det A == det(sum of blocks)") {
  for (int trial = 0; trial < 8; ++trial) {
    int n = 2 + (trial % 2);
    int m = 1 + (trial % 3);
    PdeSpec pde{n, n == 2 ? C(1.0, 0.0) : C(0.0, -1.0)};
    auto eta = random_eta(m);
    auto b = random_tensor(n, m);
    C lam = crnd();
    Eigen::MatrixXcd A = assemble_system(pde, lam, eta, b);
    C detA = A.determinant();
    C delta = delta_at<C>(pde, lam, eta, b);
    CHECK(std::abs(detA - delta) <= 1e-9 * std::max(1.0, std::abs(delta)));
  }
}

TEST_CASE("closed-form solve equals the dense solve (order 2)") {
  for (int trial = 0; trial < 10; ++trial) {
    int m = 1 + (trial % 4);
    PdeSpec pde{2, C(1.0, 0.0)};
    auto eta = random_eta(m);
    auto b = random_tensor(2, m);
    C lam = crnd();
    std::vector<C> ys(2 * (m + 1), C(0)), hs{crnd(), crnd()};
    for (int p = 0; p < 2; ++p)
      for (int r = 1; r <= m; ++r) ys[p * (m + 1) + r] = crnd();

    auto B = assemble_beta<C>(pde, lam, eta, b);
    DtnSolution<C> sol;
    try {
      sol = solve_dtn_closed(pde, B, ys, hs, lam);
    } catch (const NearSingularError&) {
      continue;
    }
    Eigen::VectorXcd u = solve_dtn_dense(pde, lam, eta, b, hs, ys);
    for (int r = 0; r <= m; ++r)
      for (int s = 0; s < 2; ++s) {
        C want = u(r * 2 + s);
        CHECK(std::abs(sol.total(s, r) - want) <=
              1e-9 * std::max(1.0, std::abs(want)));
      }

    // The two returned parts are the solutions of the split systems.
    std::vector<C> zs(2 * (m + 1), C(0)), zh{C(0), C(0)};
    Eigen::VectorXcd ud = solve_dtn_dense(pde, lam, eta, b, zh, ys);
    Eigen::VectorXcd uh = solve_dtn_dense(pde, lam, eta, b, hs, zs);
    for (int r = 0; r <= m; ++r)
      for (int s = 0; s < 2; ++s) {
        CHECK(std::abs(sol.data_part[sol.uidx(s, r)] - ud(r * 2 + s)) <=
              1e-9 * std::max(1.0, std::abs(ud(r * 2 + s))));
        CHECK(std::abs(sol.h_part[sol.uidx(s, r)] - uh(r * 2 + s)) <=
              1e-9 * std::max(1.0, std::abs(uh(r * 2 + s))));
      }
  }
}

TEST_CASE("closed-form solve equals the dense solve (order 3)") {
  for (int trial = 0; trial < 8; ++trial) {
    int m = 1 + (trial % 3);
    PdeSpec pde{3, C(0.0, -1.0)};
    auto eta = random_eta(m);
    auto b = random_tensor(3, m);
    C lam = crnd();
    std::vector<C> ys(3 * (m + 1), C(0)), hs{crnd(), crnd(), crnd()};
    for (int p = 0; p < 3; ++p)
      for (int r = 1; r <= m; ++r) ys[p * (m + 1) + r] = crnd();

    auto B = assemble_beta<C>(pde, lam, eta, b);
    DtnSolution<C> sol;
    try {
      sol = solve_dtn_closed(pde, B, ys, hs, lam);
    } catch (const NearSingularError&) {
      continue;
    }
    Eigen::VectorXcd u = solve_dtn_dense(pde, lam, eta, b, hs, ys);
    for (int r = 0; r <= m; ++r)
      for (int s = 0; s < 3; ++s) {
        C want = u(r * 3 + s);
        CHECK(std::abs(sol.total(s, r) - want) <=
              1e-8 * std::max(1.0, std::abs(want)));
      }
  }
}

TEST_CASE("difference and annihilation identities") {
  for (int n : {2, 3}) {
    int m = 2;
    PdeSpec pde{n, n == 2 ? C(1.0, 0.0) : C(0.0, -1.0)};
    auto eta = random_eta(m);
    auto b = random_tensor(n, m);
    C lam = crnd();
    std::vector<C> ys(std::size_t(n) * (m + 1), C(0)), hs(n, C(0));
    for (int p = 0; p < n; ++p)
      for (int r = 1; r <= m; ++r) ys[std::size_t(p) * (m + 1) + r] = crnd();
    for (auto& h : hs) h = crnd();

    auto B = assemble_beta<C>(pde, lam, eta, b);
    auto sol = solve_dtn_closed(pde, B, ys, hs, lam);

    // Difference identity holds for the data-driven part (the h part is
    // r-independent, so it holds for the totals too).
    for (int s = 0; s < n; ++s)
      for (int r = 1; r <= m; ++r) {
        C diff = sol.total(s, r) - sol.total(s, r - 1);
        C want = ys[std::size_t(s) * (m + 1) + r];
        CHECK(std::abs(diff - want) <= 1e-8 * std::max(1.0, std::abs(want)));
      }

    // Column annihilation: the blocks applied to the unknowns reproduce the
    // boundary rhs (zero for the data part, h_j for the h part).
    for (int j = 0; j < n; ++j) {
      C col_d = 0.0, col_h = 0.0;
      for (int r = 0; r <= m; ++r)
        for (int s = 0; s < n; ++s) {
          col_d += B.at(s, j, r) * sol.data_part[sol.uidx(s, r)];
          col_h += B.at(s, j, r) * sol.h_part[sol.uidx(s, r)];
        }
      CHECK(std::abs(col_d) < 1e-8);
      CHECK(std::abs(col_h - hs[j]) <= 1e-8 * std::max(1.0, std::abs(hs[j])));
    }
  }
}

TEST_CASE("frozen two-interface determinants") {
  PdeSpec pde{2, C(1.0, 0.0)};
  std::vector<double> eta{0.0, 0.5, 1.0};
  auto b = two_interface_tensor(0.4, 0.4);

  C d1 = delta_at<C>(pde, C(1.7, 0.3), eta, b);
  CHECK(std::abs(d1 - C(-0.04334548054330882, -0.060786090006493564)) < 1e-15);

  C d2 = delta_at<C>(pde, C(1.3, -0.7), eta, b);
  CHECK(std::abs(d2 - C(0.13624263894315583, -0.083082477974957769)) < 1e-15);

  // Closed display: Delta == -( i sin(lam/2)/lam^2 (cos(lam/2)-(c0+c1)/2) ).
  for (int trial = 0; trial < 6; ++trial) {
    C lam = 3.0 * rnd() + C(0, 1) * rnd();
    double c0 = rnd(), c1 = rnd();
    C D = delta_at<C>(pde, lam, eta, two_interface_tensor(c0, c1));
    C printed = C(0, 1) * std::sin(lam / 2.0) / (lam * lam) *
                (std::cos(lam / 2.0) - (c0 + c1) / 2.0);
    CHECK(std::abs(D + printed) <= 1e-9 * std::max(1.0, std::abs(printed)));
  }
}

TEST_CASE("frozen third-order determinant and closed display") {
  PdeSpec pde{3, C(0.0, -1.0)};
  std::vector<double> eta{0.0, 0.5, 1.0};
  auto b = third_order_tensor(0.3);

  C d = delta_at<C>(pde, C(2.1, -0.4), eta, b);
  CHECK(std::abs(d - C(0.0076567347218539552, 0.0064889151865768621)) < 1e-15);

  // Delta == (alpha^2 - alpha)/(27 i lam^5) *
  //          sum_k alpha^k (e^{-i a^k lam} - c e^{-i a^k lam / 2}).
  const C al = pde.alpha();
  const C I(0, 1);
  for (int trial = 0; trial < 6; ++trial) {
    C lam = 2.0 * rnd() + I * rnd();
    double c = rnd();
    C D = delta_at<C>(pde, lam, eta, third_order_tensor(c));
    C sum = 0.0;
    for (int k = 0; k < 3; ++k) {
      C ak = pow_int(al, k);
      sum += ak * (std::exp(-I * ak * lam) - c * std::exp(-I * ak * lam / 2.0));
    }
    C printed = (al * al - al) / (27.0 * I * pow_int(lam, 5)) * sum;
    CHECK(std::abs(D - printed) <= 1e-9 * std::max(1.0, std::abs(printed)));
  }
}

TEST_CASE("frozen third-order contour unknowns (constant initial datum)") {
  PdeSpec pde{3, C(0.0, -1.0)};
  std::vector<double> eta{0.0, 0.5, 1.0};
  auto b = third_order_tensor(0.3);
  C lam(1.7, -0.4);
  const C al = pde.alpha();

  // Interval data of the solve: y_p^r = transform of 1 over interval r at
  // the rotated argument.
  std::vector<C> ys(3 * 3, C(0)), hs(3, C(0));
  for (int p = 0; p < 3; ++p)
    for (int r = 1; r <= 2; ++r)
      ys[std::size_t(p) * 3 + r] =
          qhat_piece_one(pow_int(al, p) * lam, eta[r - 1], eta[r]);

  auto B = assemble_beta<C>(pde, lam, eta, b);
  auto sol = solve_dtn_closed(pde, B, ys, hs, lam);
  CHECK(std::abs(sol.upper() - C(-0.54990997806773767, 0.29615514059281423)) <
        1e-13);
  CHECK(std::abs(sol.lower() - C(-0.036928803867880562, -0.22218284627052212)) <
        1e-13);
}

TEST_CASE("scaled-field solve matches the plain-complex solve") {
  PdeSpec pde{2, C(1.0, 0.0)};
  int m = 2;
  auto eta = random_eta(m);
  auto b = random_tensor(2, m);
  C lam(1.4, 0.9);
  std::vector<C> ysc(2 * (m + 1), C(0)), hsc{crnd(), crnd()};
  for (int p = 0; p < 2; ++p)
    for (int r = 1; r <= m; ++r) ysc[p * (m + 1) + r] = crnd();

  auto Bc = assemble_beta<C>(pde, lam, eta, b);
  auto solc = solve_dtn_closed(pde, Bc, ysc, hsc, lam);

  auto Bs = assemble_beta<SC>(pde, lam, eta, b);
  std::vector<SC> yss, hss;
  for (const auto& v : ysc) yss.push_back(SC::from(v));
  for (const auto& v : hsc) hss.push_back(SC::from(v));
  auto sols = solve_dtn_closed(pde, Bs, yss, hss, lam);

  for (int r = 0; r <= m; ++r)
    for (int s = 0; s < 2; ++s) {
      C want = solc.total(s, r);
      C got = sols.total(s, r).to_complex();
      CHECK(std::abs(got - want) <= 1e-11 * std::max(1.0, std::abs(want)));
    }
}

TEST_CASE("near-singular determinant raises with the offending point") {
  // c0 + c1 = 1 places a determinant zero at 2 pi / 3.
  PdeSpec pde{2, C(1.0, 0.0)};
  std::vector<double> eta{0.0, 0.5, 1.0};
  auto b = two_interface_tensor(0.5, 0.5);
  C lam(2.0 * kPi / 3.0, 0.0);
  auto B = assemble_beta<C>(pde, lam, eta, b);
  std::vector<C> ys(2 * 3, C(1.0)), hs(2, C(0));
  bool threw = false;
  try {
    solve_dtn_closed(pde, B, ys, hs, lam);
  } catch (const NearSingularError& e) {
    threw = true;
    CHECK(std::abs(e.lambda() - lam) < 1e-12);
  }
  CHECK(threw);
}

TEST_CASE("determinant lambda-derivative matches central differences") {
  for (int n : {2, 3}) {
    PdeSpec pde{n, n == 2 ? C(1.0, 0.0) : C(0.0, -1.0)};
    int m = 2;
    auto eta = random_eta(m);
    auto b = random_tensor(n, m);
    C lam(1.3, 0.4);
    auto [d, dd] = delta_and_derivative(pde, lam, eta, b);
    CHECK(std::abs(d - delta_at<C>(pde, lam, eta, b)) < 1e-13);
    double h = 1e-6;
    C fd = (delta_at<C>(pde, lam + h, eta, b) -
            delta_at<C>(pde, lam - h, eta, b)) /
           (2.0 * h);
    CHECK(std::abs(dd - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("selector determinant closed form (spot checks)") {
  for (int n = 2; n <= 4; ++n)
    for (int d = 1; d <= 8; ++d)
      for (int s = -1; s <= n + 1; ++s)
        CHECK(selector_det(n, d, s) == Approx(selector_det_brute(n, d, s)));
}

TEST_CASE("singular point at lambda = 0") {
  PdeSpec pde{2, C(1.0, 0.0)};
  std::vector<double> eta{0.0, 1.0};
  ConditionTensor b(2, 2);
  b.at(0, 0, 0) = 1.0;
  b.at(0, 1, 1) = 1.0;
  CHECK_THROWS_AS(assemble_beta<C>(pde, C(0.0), eta, b), SingularPointError);
}
