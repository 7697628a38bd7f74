#include <cmath>
#include <complex>

#include "doctest.h"
#include "utpde/expression.hpp"

using namespace utpde;
using doctest::Approx;

namespace {
double adst(Cplx a, Cplx b) { return std::abs(a - b); }
}  // namespace

TEST_CASE("parser evaluates arithmetic with the usual precedence") {
  CHECK(parse_expression("1+2*3", 'x').eval(0.0).real() == Approx(7.0));
  CHECK(parse_expression("(1+2)*3", 'x').eval(0.0).real() == Approx(9.0));
  CHECK(parse_expression("2^3^2", 'x').eval(0.0).real() == Approx(512.0));
  CHECK(parse_expression("-x^2", 'x').eval(Cplx(3.0)).real() == Approx(-9.0));
  CHECK(parse_expression("6/3/2", 'x').eval(0.0).real() == Approx(1.0));
  CHECK(parse_expression("2^-1", 'x').eval(0.0).real() == Approx(0.5));
  CHECK(parse_expression("1.5e2", 'x').eval(0.0).real() == Approx(150.0));
}

TEST_CASE("constants pi and i, and the 2i shorthand") {
  CHECK(parse_expression("sin(pi*x)", 'x').eval(Cplx(0.5)).real() == Approx(1.0));
  Cplx v = parse_expression("i*i", 'x').eval(0.0);
  CHECK(v.real() == Approx(-1.0));
  Cplx w = parse_expression("2i+1", 't').eval(0.0);
  CHECK(w.real() == Approx(1.0));
  CHECK(w.imag() == Approx(2.0));
}

TEST_CASE("parser rejects malformed input") {
  CHECK_THROWS_AS(parse_expression("sin(pi*x", 'x'), ValidationError);
  CHECK_THROWS_AS(parse_expression("x+", 'x'), ValidationError);
  CHECK_THROWS_AS(parse_expression("y+1", 'x'), ValidationError);
  CHECK_THROWS_AS(parse_expression("2 3", 'x'), ValidationError);
  CHECK_THROWS_AS(parse_expression("foo(x)", 'x'), ValidationError);
}

TEST_CASE("symbolic differentiation") {
  Expr e = parse_expression("x^3 - 2*x", 'x');
  Cplx d = e.derivative().eval(Cplx(2.0));
  CHECK(d.real() == Approx(10.0));  // 3x^2 - 2 at x=2

  Expr s = parse_expression("sin(2*x)", 'x');
  CHECK(s.derivative().eval(Cplx(0.3)).real() == Approx(2.0 * std::cos(0.6)));

  Expr q = parse_expression("exp(-x^2)", 'x');
  CHECK(q.derivative().eval(Cplx(0.7)).real() ==
        Approx(-1.4 * std::exp(-0.49)));

  Expr r = parse_expression("x / (1 + x)", 'x');
  CHECK(r.derivative().eval(Cplx(1.0)).real() == Approx(0.25));

  CHECK_THROWS_AS(parse_expression("x^x", 'x').derivative(), ValidationError);
}

TEST_CASE("exponential-polynomial normal form agrees with direct evaluation") {
  auto roundtrip = [](const std::string& src) {
    Expr e = parse_expression(src, 'x');
    auto p = e.exp_poly();
    REQUIRE(p.has_value());
    for (double x : {0.0, 0.37, 1.0, 2.5}) {
      Cplx direct = e.eval(Cplx(x));
      Cplx viaep = p->eval(Cplx(x));
      CHECK(adst(direct, viaep) <= 1e-12 * (1.0 + std::abs(direct)));
    }
  };
  roundtrip("sin(pi*x)");
  roundtrip("1 + 6*x*(1-x)");
  roundtrip("x^2*exp(-3*x) + cos(2*x - 1)");
  roundtrip("(1+2*i)*exp(i*x) - x^4/7");
  roundtrip("sin(4*x)*exp(-x)");
}

TEST_CASE("normal form merges duplicate rates and handles subtraction") {
  Expr e = parse_expression("exp(2*x) + exp(2*x) - 2*exp(2*x)", 'x');
  auto p = e.exp_poly();
  REQUIRE(p.has_value());
  CHECK(p->empty_or_zero());
}

TEST_CASE("functions outside the exp-poly class fail normalisation but evaluate") {
  Expr e = parse_expression("sin(x^2)", 'x');
  CHECK(!e.exp_poly().has_value());
  CHECK(e.eval(Cplx(1.3)).real() == Approx(std::sin(1.69)));

  Expr f = parse_expression("1/(1+x)", 'x');
  CHECK(!f.exp_poly().has_value());
  CHECK(f.eval(Cplx(1.0)).real() == Approx(0.5));
}

TEST_CASE("affine detection feeds sin/cos/exp composition only") {
  auto p = parse_expression("exp(x^2)", 'x').exp_poly();
  CHECK(!p.has_value());
  auto q = parse_expression("exp(2*x + 1)", 'x').exp_poly();
  REQUIRE(q.has_value());
  REQUIRE(q->terms.size() == 1);
  CHECK(q->terms[0].d == 0);
  CHECK(adst(q->terms[0].nu, Cplx(2.0)) < 1e-15);
  CHECK(adst(q->terms[0].c, Cplx(std::exp(1.0))) < 1e-14);
}

TEST_CASE("serialisation round-trips through the parser") {
  const char* sources[] = {"sin(pi*x)", "-x^2 + 3*x - 1", "exp(-2*x)*cos(x)",
                           "(1+2*i)*x"};
  for (const char* src : sources) {
    Expr e = parse_expression(src, 'x');
    Expr back = parse_expression(e.to_string('x'), 'x');
    for (double x : {0.1, 0.9, 1.7}) {
      CHECK(adst(e.eval(Cplx(x)), back.eval(Cplx(x))) < 1e-14);
    }
  }
}

TEST_CASE("exp-poly derivative matches symbolic derivative") {
  Expr e = parse_expression("x^2*exp(-3*x) + sin(2*x)", 'x');
  auto p = e.exp_poly();
  REQUIRE(p.has_value());
  ExpPoly dp = p->derivative();
  Expr de = e.derivative();
  for (double x : {0.0, 0.4, 1.1}) {
    CHECK(adst(dp.eval(Cplx(x)), de.eval(Cplx(x))) < 1e-11);
  }
}
