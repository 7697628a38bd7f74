#include <cmath>
#include <complex>

#include "doctest.h"
#include "utpde/scaled.hpp"

using namespace utpde;
using doctest::Approx;
using SC = ScaledComplex<double>;
using C = std::complex<double>;

TEST_CASE("expc represents exponentials far past double range") {
  SC big = SC::expc(C(2000.0, 1.0));
  CHECK(big.log_abs() == Approx(2000.0));
  SC tiny = SC::expc(C(-2000.0, -0.5));
  CHECK(tiny.log_abs() == Approx(-2000.0));

  SC one = big * tiny * SC::expc(C(0.0, -0.5));
  C v = one.to_complex();
  CHECK(v.real() == Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(v.imag()) < 1e-12);
}

TEST_CASE("multiplication and division track exponents") {
  SC a = SC::expc(C(500.0, 0.3));
  SC b = SC::expc(C(300.0, -0.1));
  CHECK((a * b).log_abs() == Approx(800.0));
  CHECK((a / b).log_abs() == Approx(200.0));
}

TEST_CASE("addition aligns exponents and keeps the dominant term") {
  SC a = SC::expc(C(100.0, 0.0));
  SC b = SC::expc(C(50.0, 0.0));
  SC s = a + b;
  // e^100 + e^50 = e^100 (1 + e^-50)
  CHECK(s.log_abs() == Approx(100.0 + std::log1p(std::exp(-50.0))));

  // A gap beyond double range: the small term vanishes without overflow.
  SC t = SC::expc(C(1000.0, 0.0)) + SC::expc(C(-1000.0, 0.0));
  CHECK(t.log_abs() == Approx(1000.0));
}

TEST_CASE("subtraction cancels exactly at equal magnitude") {
  SC a = SC::expc(C(900.0, 0.25));
  SC d = a - a;
  CHECK(d.is_zero());
  CHECK(d.to_complex() == C(0.0));
}

TEST_CASE("to_complex saturates instead of producing NaN") {
  C over = SC::expc(C(5000.0, 0.1)).to_complex();
  CHECK(std::isinf(over.real()));
  C under = SC::expc(C(-5000.0, 0.1)).to_complex();
  CHECK(under == C(0.0));
}

TEST_CASE("moderate values round-trip through plain complex") {
  C v(1.25, -0.75);
  SC s = SC::from(v);
  CHECK(std::abs(s.to_complex() - v) < 1e-15);
  CHECK(s.log_abs() == Approx(std::log(std::abs(v))));
}

TEST_CASE("mixed arithmetic with plain complex operands") {
  SC a = SC::expc(C(10.0, 0.0));
  SC r = (a * C(2.0, 0.0) + a) / C(3.0, 0.0);
  CHECK(r.log_abs() == Approx(10.0));
}

TEST_CASE("field traits expose a uniform interface") {
  using FT = FieldTraits<C>;
  using FS = FieldTraits<SC>;
  C z(0.5, 1.5);
  CHECK(std::abs(FT::expc(z) - std::exp(z)) < 1e-15);
  CHECK(std::abs(FS::to_complex(FS::expc(z)) - std::exp(z)) < 1e-14);
  CHECK(FT::log_abs(std::exp(z)) == Approx(0.5));
  CHECK(FS::log_abs(FS::expc(z)) == Approx(0.5));
  CHECK(FS::is_zero(SC{}));
}
