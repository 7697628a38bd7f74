#pragma once
// Spectral building blocks: the per-point blocks of the characteristic
// matrix, its determinant, the generic dense solve for the
// Dirichlet-to-Neumann unknowns, and the closed-form solves for orders 2
// and 3.
//
// Conventions (fixed across the whole library):
//   alpha = exp(2 pi i / n), rotations z = alpha^s lambda.
//   Block r (one per point eta_r) has entries, for rotation row s and
//   condition column j,
//     B^r[s][j] = (1/n) e^{+i alpha^s lambda eta_r}
//                 sum_k alpha^{(k+1)s} b[k][j][r] (i lambda)^{k+1-n}.
//   The unknown row vector u (u[r*n+s] pairing block r with rotation s)
//   solves u A = rhs, where A stacks the blocks in its first n columns and
//   carries +/-1 coupling columns for the interior points, rhs carries the
//   time-transformed boundary data h_j in its first n slots and the
//   interval data y_p^r in slot r*n+p. u[0] drives the upper contour and
//   u[m*n] the lower contour (the e^{-i lambda} factor of the latter is
//   part of the unknown itself).
//   Determinant: det A = det(sum_r B^r).

#include <array>
#include <complex>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/LU>

#include "utpde/error.hpp"
#include "utpde/problem.hpp"
#include "utpde/scaled.hpp"
#include "utpde/transforms.hpp"

namespace utpde {

// c_k(lambda) = i a (-i)^k lambda^{n-1-k}: the symbol coefficients tying the
// boundary traces f_k to the combined unknowns.
inline Cplx c_coef(const PdeSpec& pde, Cplx lam, int k) {
  Cplx r = Cplx(0, 1) * pde.a;
  for (int q = 0; q < k; ++q) r *= Cplx(0, -1);
  return r * pow_int(lam, pde.n - 1 - k);
}

// ---------------------------------------------------------------------------
// Beta blocks.
// ---------------------------------------------------------------------------
template <class F>
struct BetaBlocks {
  int n = 0, m = 0;  // blocks r = 0..m
  std::vector<F> v;  // (s, j, r) with s rotation, j condition, r block

  BetaBlocks() = default;
  BetaBlocks(int n_, int m_) : n(n_), m(m_) {
    v.assign(std::size_t(n) * n * (m + 1), F{});
  }
  std::size_t idx(int s, int j, int r) const {
    return (std::size_t(s) * n + j) * (m + 1) + r;
  }
  F& at(int s, int j, int r) { return v[idx(s, j, r)]; }
  const F& at(int s, int j, int r) const { return v[idx(s, j, r)]; }

  // Largest magnitude over the entries, as a natural log.
  double max_log_abs() const {
    double mx = -std::numeric_limits<double>::infinity();
    for (const auto& z : v) {
      double l = FieldTraits<F>::log_abs(z);
      if (l > mx) mx = l;
    }
    return mx;
  }
};

template <class F>
BetaBlocks<F> assemble_beta(const PdeSpec& pde, Cplx lam,
                            const std::vector<double>& eta,
                            const ConditionTensor& b) {
  using T = FieldTraits<F>;
  if (lam == Cplx(0))
    throw SingularPointError();
  const int n = pde.n;
  const int m = int(eta.size()) - 1;
  const Cplx al = pde.alpha();
  BetaBlocks<F> B(n, m);
  const Cplx inv_il = Cplx(1.0) / (Cplx(0, 1) * lam);
  for (int s = 0; s < n; ++s) {
    Cplx als = pow_int(al, s);
    for (int r = 0; r <= m; ++r) {
      F pref = T::expc(Cplx(0, 1) * als * lam * eta[r]) *
               T::from(Cplx(1.0 / double(n)));
      for (int j = 0; j < n; ++j) {
        Cplx acc = 0.0;
        for (int k = 0; k < n; ++k) {
          Cplx w = b.at(k, j, r);
          if (w == Cplx(0)) continue;
          // alpha^{(k+1)s} * (i lam)^{k+1-n}
          acc += pow_int(al, ((k + 1) * s) % n) * w * pow_int(inv_il, n - 1 - k);
        }
        B.at(s, j, r) = pref * T::from(acc);
      }
    }
  }
  return B;
}

// Sum over blocks: S = sum_r B^r (n x n, rotation-major rows).
template <class F>
std::vector<F> block_sum(const BetaBlocks<F>& B) {
  std::vector<F> S(std::size_t(B.n) * B.n, F{});
  for (int s = 0; s < B.n; ++s)
    for (int j = 0; j < B.n; ++j) {
      F acc{};
      for (int r = 0; r <= B.m; ++r) acc = acc + B.at(s, j, r);
      S[std::size_t(s) * B.n + j] = acc;
    }
  return S;
}

// Determinant of an n x n matrix stored row-major, n <= 3 (closed forms keep
// the field arithmetic exact).
template <class F>
F det_small(const std::vector<F>& S, int n) {
  if (n == 1) return S[0];
  if (n == 2) return S[0] * S[3] - S[1] * S[2];
  if (n == 3)
    return S[0] * (S[4] * S[8] - S[5] * S[7]) -
           S[1] * (S[3] * S[8] - S[5] * S[6]) +
           S[2] * (S[3] * S[7] - S[4] * S[6]);
  throw ValidationError("closed-form determinant covers orders up to 3");
}

// Characteristic determinant Delta(lambda) = det(sum_r B^r).
template <class F>
F delta_det(const BetaBlocks<F>& B) {
  return det_small(block_sum(B), B.n);
}

// ---------------------------------------------------------------------------
// Full system assembly and the generic dense solve (plain complex only;
// used for cross-validation and for orders beyond the closed forms).
// ---------------------------------------------------------------------------
inline Eigen::MatrixXcd assemble_system(const PdeSpec& pde, Cplx lam,
                                        const std::vector<double>& eta,
                                        const ConditionTensor& b) {
  const int n = pde.n;
  const int m = int(eta.size()) - 1;
  const int N = n * (m + 1);
  auto B = assemble_beta<Cplx>(pde, lam, eta, b);
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(N, N);
  for (int r = 0; r <= m; ++r)
    for (int s = 0; s < n; ++s)
      for (int j = 0; j < n; ++j) A(r * n + s, j) = B.at(s, j, r);
  for (int rr = 1; rr <= m; ++rr)
    for (int p = 0; p < n; ++p) {
      A(rr * n + p, rr * n + p) += 1.0;
      A((rr - 1) * n + p, rr * n + p) -= 1.0;
    }
  return A;
}

// Assemble the right-hand side from the boundary data transforms hs[j] and
// the interval data ys (p-major: ys[p*(m+1)+r], slot r = 0 unused).
inline Eigen::VectorXcd assemble_rhs(int n, int m, const std::vector<Cplx>& hs,
                                     const std::vector<Cplx>& ys) {
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n * (m + 1));
  for (int j = 0; j < n; ++j) rhs(j) = hs[j];
  for (int rr = 1; rr <= m; ++rr)
    for (int p = 0; p < n; ++p) rhs(rr * n + p) = ys[p * (m + 1) + rr];
  return rhs;
}

// Solve u A = rhs by partial-pivoted LU on A^T, with a near-singularity
// guard and a residual check. Returns u with u[r*n+s].
inline Eigen::VectorXcd solve_dtn_dense(const PdeSpec& pde, Cplx lam,
                                        const std::vector<double>& eta,
                                        const ConditionTensor& b,
                                        const std::vector<Cplx>& hs,
                                        const std::vector<Cplx>& ys) {
  const int n = pde.n;
  const int m = int(eta.size()) - 1;
  Eigen::MatrixXcd A = assemble_system(pde, lam, eta, b);
  Eigen::VectorXcd rhs = assemble_rhs(n, m, hs, ys);

  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A.transpose());
  Cplx det = lu.determinant();
  auto B = assemble_beta<Cplx>(pde, lam, eta, b);
  double bmax = std::exp(B.max_log_abs());
  double scale = std::max(1.0, std::pow(bmax, n));
  if (std::abs(det) < 1e-12 * scale)
    throw NearSingularError(lam, std::abs(det));

  Eigen::VectorXcd u = lu.solve(rhs);
  double res = (A.transpose() * u - rhs).cwiseAbs().maxCoeff();
  double rhsmax = std::max(1.0, rhs.cwiseAbs().maxCoeff());
  if (res > 1e-10 * rhsmax)
    throw NumericalError(
        "dense solve residual exceeds tolerance at lambda = (" +
        std::to_string(lam.real()) + ", " + std::to_string(lam.imag()) + ")");
  return u;
}

// ---------------------------------------------------------------------------
// Closed-form solves (orders 2 and 3). Both accept the interval data ys
// (p-major, slot r = 0 unused) and the boundary transforms hs, and return
// the two linear parts separately: the part driven by ys and the part
// driven by hs. Entries are indexed like the dense unknown u[r*n+s].
// ---------------------------------------------------------------------------
template <class F>
struct DtnSolution {
  int n = 0, m = 0;
  std::vector<F> data_part;  // driven by ys
  std::vector<F> h_part;     // driven by hs
  F delta{};

  std::size_t uidx(int s, int r) const { return std::size_t(r) * n + s; }
  F total(int s, int r) const {
    return data_part[uidx(s, r)] + h_part[uidx(s, r)];
  }
  F upper() const { return total(0, 0); }      // drives the upper contour
  F lower() const { return total(0, m); }      // drives the lower contour
};

namespace detail {
inline int sgn3(int u, int v) { return u < v ? 1 : (u > v ? -1 : 0); }

// Shared near-singularity guard.
template <class F>
void check_delta(const F& delta, const BetaBlocks<F>& B, Cplx lam) {
  double logthr =
      std::log(1e-12) + B.n * std::max(0.0, B.max_log_abs());
  if (FieldTraits<F>::log_abs(delta) < logthr) {
    double ad = FieldTraits<F>::is_zero(delta)
                    ? 0.0
                    : std::exp(FieldTraits<F>::log_abs(delta));
    throw NearSingularError(lam, ad);
  }
}

// Cancellation guard for the closed-form determinant sums: the computed
// value is meaningful only while it is not dwarfed by the largest summand
// (floating-point noise of the sum scales with that summand).
template <class F>
void check_delta_terms(const F& delta, double log_max_term, Cplx lam) {
  if (FieldTraits<F>::log_abs(delta) < std::log(1e-12) + log_max_term) {
    double ad = FieldTraits<F>::is_zero(delta)
                    ? 0.0
                    : std::exp(FieldTraits<F>::log_abs(delta));
    throw NearSingularError(lam, ad);
  }
}
}  // namespace detail

template <class F>
DtnSolution<F> closed_solve_n2(const BetaBlocks<F>& B, const std::vector<F>& ys,
                               const std::vector<F>& hs, Cplx lam) {
  const int m = B.m;
  const int mp1 = m + 1;
  auto Bv = [&](int s, int j, int r) -> const F& { return B.at(s, j, r); };
  auto y = [&](int r) -> const F& { return ys[0 * mp1 + r]; };
  auto Y = [&](int r) -> const F& { return ys[1 * mp1 + r]; };

  // Partial sums of the interval data: sum_{l=lo}^{hi} (empty when lo > hi).
  auto sum_y = [&](int lo, int hi) {
    F acc{};
    for (int l = lo; l <= hi; ++l) acc = acc + y(l);
    return acc;
  };
  auto sum_Y = [&](int lo, int hi) {
    F acc{};
    for (int l = lo; l <= hi; ++l) acc = acc + Y(l);
    return acc;
  };
  auto D00_11 = [&](int j, int k) {
    return Bv(0, 0, j) * Bv(1, 1, k) - Bv(1, 0, k) * Bv(0, 1, j);
  };

  F delta{};
  double dterm = -std::numeric_limits<double>::infinity();
  auto la2 = [&](const F& u, const F& v) {
    return FieldTraits<F>::log_abs(u) + FieldTraits<F>::log_abs(v);
  };
  for (int j = 0; j <= m; ++j)
    for (int k = 0; k <= m; ++k) {
      delta = delta + D00_11(j, k);
      dterm = std::max({dterm, la2(Bv(0, 0, j), Bv(1, 1, k)),
                        la2(Bv(1, 0, k), Bv(0, 1, j))});
    }
  detail::check_delta_terms(delta, dterm, lam);

  DtnSolution<F> sol;
  sol.n = 2;
  sol.m = m;
  sol.delta = delta;
  sol.data_part.assign(2 * mp1, F{});
  sol.h_part.assign(2 * mp1, F{});

  const F half = FieldTraits<F>::from(Cplx(0.5));
  for (int r = 0; r <= m; ++r) {
    F t1{}, t2{}, t3{}, t4{};
    for (int j = 0; j <= m; ++j) {
      for (int k = 0; k <= m; ++k) {
        F D = D00_11(j, k);
        if (int sg = detail::sgn3(j, r); sg != 0) {
          F su = sum_y(std::min(j, r) + 1, std::max(j, r));
          t1 = t1 + D * FieldTraits<F>::from(Cplx(double(sg))) * su;
        }
        if (int sg = detail::sgn3(k, r); sg != 0) {
          F su = sum_Y(std::min(k, r) + 1, std::max(k, r));
          t3 = t3 + D * FieldTraits<F>::from(Cplx(double(sg))) * su;
        }
        if (int sg = detail::sgn3(j, k); sg != 0) {
          F P = Bv(1, 0, j) * Bv(1, 1, k) - Bv(1, 0, k) * Bv(1, 1, j);
          t2 = t2 + P * FieldTraits<F>::from(Cplx(double(sg))) *
                        sum_Y(std::min(j, k) + 1, std::max(j, k));
          F Q = Bv(0, 0, j) * Bv(0, 1, k) - Bv(0, 0, k) * Bv(0, 1, j);
          t4 = t4 + Q * FieldTraits<F>::from(Cplx(double(sg))) *
                        sum_y(std::min(j, k) + 1, std::max(j, k));
        }
      }
    }
    sol.data_part[sol.uidx(0, r)] = (t1 + half * t2) / delta;
    sol.data_part[sol.uidx(1, r)] = (t3 - half * t4) / delta;
  }

  // h-driven part (independent of the block index r).
  F xb{}, Xb{};
  for (int j = 0; j <= m; ++j) {
    xb = xb + (Bv(1, 1, j) * hs[0] - Bv(1, 0, j) * hs[1]);
    Xb = Xb + (Bv(0, 0, j) * hs[1] - Bv(0, 1, j) * hs[0]);
  }
  xb = xb / delta;
  Xb = Xb / delta;
  for (int r = 0; r <= m; ++r) {
    sol.h_part[sol.uidx(0, r)] = xb;
    sol.h_part[sol.uidx(1, r)] = Xb;
  }
  return sol;
}

template <class F>
DtnSolution<F> closed_solve_n3(const BetaBlocks<F>& B, const std::vector<F>& ys,
                               const std::vector<F>& hs, Cplx lam) {
  const int m = B.m;
  const int mp1 = m + 1;
  using T = FieldTraits<F>;

  // Row of block j for rotation s, as a 3-vector over condition columns.
  auto row = [&](int j, int s) {
    return std::array<F, 3>{B.at(s, 0, j), B.at(s, 1, j), B.at(s, 2, j)};
  };
  auto det3 = [](const std::array<F, 3>& r0, const std::array<F, 3>& r1,
                 const std::array<F, 3>& r2) {
    return r0[0] * (r1[1] * r2[2] - r1[2] * r2[1]) -
           r0[1] * (r1[0] * r2[2] - r1[2] * r2[0]) +
           r0[2] * (r1[0] * r2[1] - r1[1] * r2[0]);
  };

  F delta{};
  double dterm = -std::numeric_limits<double>::infinity();
  static constexpr int kPerm3[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                       {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (int j0 = 0; j0 <= m; ++j0)
    for (int j1 = 0; j1 <= m; ++j1)
      for (int j2 = 0; j2 <= m; ++j2) {
        auto r0 = row(j0, 0), r1 = row(j1, 1), r2 = row(j2, 2);
        delta = delta + det3(r0, r1, r2);
        for (const auto& pm : kPerm3)
          dterm = std::max(dterm, T::log_abs(r0[pm[0]]) +
                                      T::log_abs(r1[pm[1]]) +
                                      T::log_abs(r2[pm[2]]));
      }
  detail::check_delta_terms(delta, dterm, lam);

  // L(u, v, p) = sgn(u, v) * sum_{l=min+1}^{max} ys[p][l].
  auto Lfun = [&](int u, int v, int p) {
    if (u == v) return F{};
    int lo = std::min(u, v) + 1, hi = std::max(u, v);
    F acc{};
    for (int l = lo; l <= hi; ++l) acc = acc + ys[p * mp1 + l];
    return detail::sgn3(u, v) == 1 ? acc : -acc;
  };

  DtnSolution<F> sol;
  sol.n = 3;
  sol.m = m;
  sol.delta = delta;
  sol.data_part.assign(3 * mp1, F{});
  sol.h_part.assign(3 * mp1, F{});

  const F half = T::from(Cplx(0.5));
  for (int s = 0; s < 3; ++s) {
    for (int r = 0; r <= m; ++r) {
      F acc{};
      for (int j0 = 0; j0 <= m; ++j0)
        for (int j1 = 0; j1 <= m; ++j1)
          for (int j2 = 0; j2 <= m; ++j2) {
            const int js[3] = {j0, j1, j2};
            std::array<std::array<F, 3>, 3> rows{row(j0, 0), row(j1, 1),
                                                 row(j2, 2)};
            F D = det3(rows[0], rows[1], rows[2]);
            acc = acc + D * Lfun(js[s], r, s);
            for (int dd = 1; dd <= 2; ++dd) {
              int p = (s + dd) % 3;
              std::array<std::array<F, 3>, 3> rows2 = rows;
              rows2[s] = row(js[s], p);  // same block, rotation p
              F D2 = det3(rows2[0], rows2[1], rows2[2]);
              acc = acc + half * D2 * Lfun(js[s], js[p], p);
            }
          }
      sol.data_part[sol.uidx(s, r)] = acc / delta;
    }
  }

  // h-driven part: 2x2 cofactors over rotation rows s+1, s+2.
  auto C2 = [&](int p, int q, int u, int v, int j0, int j1) {
    return B.at(u % 3, p % 3, j0) * B.at(v % 3, q % 3, j1) -
           B.at(u % 3, q % 3, j0) * B.at(v % 3, p % 3, j1);
  };
  for (int s = 0; s < 3; ++s) {
    F acc{};
    for (int j0 = 0; j0 <= m; ++j0)
      for (int j1 = 0; j1 <= m; ++j1) {
        acc = acc + hs[s % 3] * C2(s + 1, s + 2, s + 1, s + 2, j0, j1);
        acc = acc + hs[(s + 1) % 3] * C2(s + 2, s, s + 1, s + 2, j0, j1);
        acc = acc + hs[(s + 2) % 3] * C2(s, s + 1, s + 1, s + 2, j0, j1);
      }
    acc = acc / delta;
    for (int r = 0; r <= m; ++r) sol.h_part[sol.uidx(s, r)] = acc;
  }
  return sol;
}

// Dispatch by order.
template <class F>
DtnSolution<F> solve_dtn_closed(const PdeSpec& pde, const BetaBlocks<F>& B,
                                const std::vector<F>& ys,
                                const std::vector<F>& hs, Cplx lam) {
  if (pde.n == 2) return closed_solve_n2(B, ys, hs, lam);
  if (pde.n == 3) return closed_solve_n3(B, ys, hs, lam);
  throw ValidationError("closed-form solve covers orders 2 and 3 only");
}

// ---------------------------------------------------------------------------
// Delta and its lambda-derivative (orders 2 and 3, plain complex): used by
// the zero locator's Newton polish. dB/dlambda has the closed form
//   dB^r[s][j] = i alpha^s eta_r B^r[s][j]
//              + (1/n) e^{i alpha^s lam eta_r} sum_k alpha^{(k+1)s} b[k][j][r]
//                (k+1-n) i (i lam)^{k-n}.
// dDelta = trace(adj(S) dS) with S = sum_r B^r.
// ---------------------------------------------------------------------------
inline std::pair<Cplx, Cplx> delta_and_derivative(const PdeSpec& pde, Cplx lam,
                                                  const std::vector<double>& eta,
                                                  const ConditionTensor& b) {
  const int n = pde.n;
  const int m = int(eta.size()) - 1;
  if (n > 3)
    throw ValidationError("determinant derivative covers orders 2 and 3");
  if (lam == Cplx(0)) throw SingularPointError();
  const Cplx al = pde.alpha();
  const Cplx I(0, 1);
  auto B = assemble_beta<Cplx>(pde, lam, eta, b);
  std::vector<Cplx> S = block_sum(B);
  std::vector<Cplx> dS(std::size_t(n) * n, Cplx(0));
  const Cplx inv_il = Cplx(1.0) / (I * lam);
  for (int s = 0; s < n; ++s) {
    Cplx als = pow_int(al, s);
    for (int r = 0; r <= m; ++r) {
      Cplx pref = std::exp(I * als * lam * eta[r]) / double(n);
      for (int j = 0; j < n; ++j) {
        Cplx term = I * als * eta[r] * B.at(s, j, r);
        Cplx acc = 0.0;
        for (int k = 0; k < n; ++k) {
          Cplx w = b.at(k, j, r);
          if (w == Cplx(0)) continue;
          acc += pow_int(al, ((k + 1) * s) % n) * w * double(k + 1 - n) * I *
                 pow_int(inv_il, n - k);
        }
        dS[std::size_t(s) * n + j] += term + pref * acc;
      }
    }
  }
  Cplx delta = det_small(S, n);
  // adjugate entries for n <= 3
  Cplx ddelta = 0.0;
  auto Sm = [&](int i, int j) { return S[std::size_t(i) * n + j]; };
  auto dSm = [&](int i, int j) { return dS[std::size_t(i) * n + j]; };
  if (n == 2) {
    // adj(S) = [[S11, -S01], [-S10, S00]]
    ddelta = Sm(1, 1) * dSm(0, 0) - Sm(1, 0) * dSm(0, 1) -
             Sm(0, 1) * dSm(1, 0) + Sm(0, 0) * dSm(1, 1);
  } else {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        // cofactor C_ij = (-1)^{i+j} minor(i, j); dDelta += C_ij dS_ij
        int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
        int j1 = (j + 1) % 3, j2 = (j + 2) % 3;
        Cplx minor = Sm(i1, j1) * Sm(i2, j2) - Sm(i1, j2) * Sm(i2, j1);
        ddelta += minor * dSm(i, j);  // cyclic indices absorb the sign
      }
  }
  return {delta, ddelta};
}

// Convenience: Delta(lambda) in the requested field.
template <class F>
F delta_at(const PdeSpec& pde, Cplx lam, const std::vector<double>& eta,
           const ConditionTensor& b) {
  return delta_det(assemble_beta<F>(pde, lam, eta, b));
}

// ---------------------------------------------------------------------------
// Banded selector determinant: the d x d matrix M[j][k] = [j-s == k] -
// [j-s == k-n] has determinant 1 (s = 0), (-1)^d (s = n), (-1)^{ds} when n
// divides d and 1 <= s <= n-1, and 0 otherwise.
// ---------------------------------------------------------------------------
inline double selector_det(int n, int d, int s) {
  if (s == 0) return 1.0;
  if (s == n) return (d % 2 == 0) ? 1.0 : -1.0;
  if (s >= 1 && s <= n - 1 && d % n == 0)
    return ((d * s) % 2 == 0) ? 1.0 : -1.0;
  return 0.0;
}

// Brute-force companion (tests and the exhaustive acceptance check).
inline double selector_det_brute(int n, int d, int s) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(d, d);
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k)
      M(j, k) = (j - s == k ? 1.0 : 0.0) - (j - s == k - n ? 1.0 : 0.0);
  return M.determinant();
}

}  // namespace utpde
