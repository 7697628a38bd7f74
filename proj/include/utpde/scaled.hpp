#pragma once
// Log-scaled complex arithmetic: value = mantissa * exp(exponent) with the
// exponent kept as a separate real number. Exponential factors such as
// exp(i*lambda*x) overflow IEEE doubles once |lambda| is a few hundred; the
// asymptotic-decay fits and the contour evaluator need |lambda| up to 1e4,
// where the intermediate factors reach exp(1e4) even though every final
// result is of moderate size. This type keeps those intermediates exact.

#include <cmath>
#include <complex>
#include <limits>

namespace utpde {

template <class Real = double>
class ScaledComplex {
 public:
  using C = std::complex<Real>;

  ScaledComplex() : m_(0), e_(0) {}
  explicit ScaledComplex(const C& v) : m_(v), e_(0) { normalize(); }
  ScaledComplex(const C& mantissa, Real exponent) : m_(mantissa), e_(exponent) {
    normalize();
  }

  // exp(z) for a complex z of arbitrary real part.
  static ScaledComplex expc(const C& z) {
    return ScaledComplex(C(std::cos(z.imag()), std::sin(z.imag())), z.real());
  }
  static ScaledComplex from(const C& v) { return ScaledComplex(v); }

  bool is_zero() const { return m_ == C(0); }

  // Natural log of the magnitude (-inf for zero).
  Real log_abs() const {
    if (is_zero()) return -std::numeric_limits<Real>::infinity();
    return e_ + std::log(std::abs(m_));
  }

  // Convert back to an ordinary complex number. Underflows flush to zero;
  // overflow saturates to infinity (callers only convert small results).
  C to_complex() const {
    if (is_zero()) return C(0);
    if (e_ > Real(700)) {
      Real inf = std::numeric_limits<Real>::infinity();
      return C(m_.real() > 0 ? inf : -inf, m_.imag() > 0 ? inf : -inf);
    }
    if (e_ < Real(-745)) return C(0);
    return m_ * std::exp(e_);
  }

  const C& mantissa() const { return m_; }
  Real exponent() const { return e_; }

  ScaledComplex operator-() const {
    ScaledComplex r;
    r.m_ = -m_;
    r.e_ = e_;
    return r;
  }

  friend ScaledComplex operator*(const ScaledComplex& a, const ScaledComplex& b) {
    if (a.is_zero() || b.is_zero()) return ScaledComplex();
    ScaledComplex r;
    r.m_ = a.m_ * b.m_;
    r.e_ = a.e_ + b.e_;
    r.normalize();
    return r;
  }
  friend ScaledComplex operator*(const ScaledComplex& a, const C& b) {
    return a * ScaledComplex(b);
  }
  friend ScaledComplex operator*(const C& a, const ScaledComplex& b) {
    return ScaledComplex(a) * b;
  }

  friend ScaledComplex operator/(const ScaledComplex& a, const ScaledComplex& b) {
    if (a.is_zero()) return ScaledComplex();
    ScaledComplex r;
    r.m_ = a.m_ / b.m_;
    r.e_ = a.e_ - b.e_;
    r.normalize();
    return r;
  }
  friend ScaledComplex operator/(const ScaledComplex& a, const C& b) {
    return a / ScaledComplex(b);
  }
  friend ScaledComplex operator/(const C& a, const ScaledComplex& b) {
    return ScaledComplex(a) / b;
  }

  friend ScaledComplex operator+(const ScaledComplex& a, const ScaledComplex& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    // Bring both to the larger exponent; the smaller term underflows
    // harmlessly if the gap exceeds the double range.
    const ScaledComplex& hi = (a.e_ >= b.e_) ? a : b;
    const ScaledComplex& lo = (a.e_ >= b.e_) ? b : a;
    Real gap = lo.e_ - hi.e_;  // <= 0
    ScaledComplex r;
    r.e_ = hi.e_;
    r.m_ = hi.m_ + (gap < Real(-700) ? C(0) : lo.m_ * std::exp(gap));
    r.normalize();
    return r;
  }
  friend ScaledComplex operator-(const ScaledComplex& a, const ScaledComplex& b) {
    return a + (-b);
  }

  ScaledComplex& operator+=(const ScaledComplex& o) { return *this = *this + o; }
  ScaledComplex& operator-=(const ScaledComplex& o) { return *this = *this - o; }
  ScaledComplex& operator*=(const ScaledComplex& o) { return *this = *this * o; }
  ScaledComplex& operator/=(const ScaledComplex& o) { return *this = *this / o; }

 private:
  void normalize() {
    Real am = std::abs(m_);
    if (am == Real(0)) {
      m_ = C(0);
      e_ = 0;
      return;
    }
    if (am > Real(1e8) || am < Real(1e-8)) {
      Real l = std::log(am);
      m_ /= am;
      e_ += l;
    }
  }

  C m_;
  Real e_;
};

// Field abstraction so the spectral formulas can be written once and run in
// either plain complex arithmetic (fast path, moderate |lambda|) or scaled
// arithmetic (asymptotic fits, far contour nodes).
template <class F>
struct FieldTraits;

template <>
struct FieldTraits<std::complex<double>> {
  using C = std::complex<double>;
  static C from(const C& v) { return v; }
  static C expc(const C& z) { return std::exp(z); }
  static C to_complex(const C& v) { return v; }
  static double log_abs(const C& v) { return std::log(std::abs(v)); }
  static bool is_zero(const C& v) { return v == C(0); }
};

template <>
struct FieldTraits<ScaledComplex<double>> {
  using C = std::complex<double>;
  using F = ScaledComplex<double>;
  static F from(const C& v) { return F(v); }
  static F expc(const C& z) { return F::expc(z); }
  static C to_complex(const F& v) { return v.to_complex(); }
  static double log_abs(const F& v) { return v.log_abs(); }
  static bool is_zero(const F& v) { return v.is_zero(); }
};

}  // namespace utpde
