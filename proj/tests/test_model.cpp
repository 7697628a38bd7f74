#include <complex>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "utpde/problem.hpp"

using namespace utpde;
using doctest::Approx;
using nlohmann::json;

namespace {

json dirichlet_heat_json() {
  return json::parse(R"json({
    "schema": "problem.v1",
    "order": 2,
    "a": 1.0,
    "eta": [0.0, 1.0],
    "b": [ [[1,0],[0,1]], [[0,0],[0,0]] ],
    "g": ["0", "0"],
    "q0": "sin(pi*x)",
    "T": 0.5
  })json");
}

bool has_code(const std::vector<Finding>& fs, const std::string& code,
              Finding::Severity sev) {
  for (const auto& f : fs)
    if (f.code == code && f.severity == sev) return true;
  return false;
}

}  // namespace

TEST_CASE("well-formed problem parses and validates cleanly") {
  ProblemSpec p = problem_from_json(dirichlet_heat_json());
  CHECK(p.pde.n == 2);
  CHECK(p.pde.a == Cplx(1.0, 0.0));
  CHECK(p.m() == 1);
  CHECK(p.T == Approx(0.5));
  CHECK(p.b.at(0, 0, 0) == Cplx(1.0));
  CHECK(p.b.at(0, 1, 1) == Cplx(1.0));
  CHECK(p.b.at(1, 0, 0) == Cplx(0.0));
  CHECK(p.q0.eval(0.5).real() == Approx(1.0));

  auto findings = validate_problem(p);
  CHECK(!has_errors(findings));
  CHECK(findings.empty());
}

TEST_CASE("JSON round trip preserves the problem") {
  ProblemSpec p = problem_from_json(dirichlet_heat_json());
  ProblemSpec q = problem_from_json(problem_to_json(p));
  CHECK(q.pde.n == p.pde.n);
  CHECK(q.eta == p.eta);
  CHECK(q.b.v == p.b.v);
  CHECK(q.T == p.T);
  CHECK(std::abs(q.q0.eval(0.3) - p.q0.eval(0.3)) < 1e-15);
  CHECK(!has_errors(validate_problem(q)));
}

TEST_CASE("complex tensor entries accept {re, im} objects") {
  json j = dirichlet_heat_json();
  j["b"][0][0][0] = {{"re", 0.5}, {"im", -2.0}};
  ProblemSpec p = problem_from_json(j);
  CHECK(p.b.at(0, 0, 0) == Cplx(0.5, -2.0));
}

TEST_CASE("linearly dependent condition rows are flagged") {
  json j = dirichlet_heat_json();
  j["b"] = json::parse("[ [[1,0],[1,0]], [[0,0],[0,0]] ]");
  auto findings = validate_problem(problem_from_json(j));
  CHECK(has_code(findings, "rank", Finding::Severity::Error));
}

TEST_CASE("interface point constraints") {
  json j = dirichlet_heat_json();
  j["eta"] = {0.0, 0.5};
  CHECK(has_code(validate_problem(problem_from_json(j)), "eta",
                 Finding::Severity::Error));

  j = dirichlet_heat_json();
  j["eta"] = {0.0, 0.7, 0.3, 1.0};
  j["b"] = json::parse("[ [[1,0,0,0],[0,0,0,1]], [[0,0,0,0],[0,0,0,0]] ]");
  CHECK(has_code(validate_problem(problem_from_json(j)), "eta",
                 Finding::Severity::Error));
}

TEST_CASE("even order requires unit-modulus coefficient, upper half plane") {
  json j = dirichlet_heat_json();
  j["a"] = 2.0;
  CHECK(has_code(validate_problem(problem_from_json(j)), "coefficient",
                 Finding::Severity::Error));

  j["a"] = {{"re", 0.0}, {"im", -1.0}};
  CHECK(has_code(validate_problem(problem_from_json(j)), "coefficient",
                 Finding::Severity::Error));
}

TEST_CASE("the dispersive direction is a warning, not an error") {
  json j = dirichlet_heat_json();
  j["a"] = {{"re", 0.0}, {"im", 1.0}};
  ProblemSpec p = problem_from_json(j);
  CHECK(is_dispersive(p.pde));
  auto findings = validate_problem(p);
  CHECK(!has_errors(findings));
  CHECK(has_code(findings, "dispersive", Finding::Severity::Warning));
}

TEST_CASE("odd order requires a = +/- i") {
  json j = json::parse(R"json({
    "order": 3,
    "a": {"re": 0.0, "im": -1.0},
    "eta": [0.0, 1.0],
    "b": [ [[1,0],[0,1],[0,0]], [[0,0],[0,0],[0,1]], [[0,0],[0,0],[0,0]] ],
    "g": ["0", "0", "0"],
    "q0": "x^2*(1-x)^2",
    "T": 0.2
  })json");
  ProblemSpec p = problem_from_json(j);
  auto findings = validate_problem(p);
  CHECK(!has_code(findings, "coefficient", Finding::Severity::Error));

  j["a"] = 1.0;
  CHECK(has_code(validate_problem(problem_from_json(j)), "coefficient",
                 Finding::Severity::Error));
}

TEST_CASE("incompatible data raises a warning with the deviation") {
  json j = dirichlet_heat_json();
  j["g"][0] = "1";  // q0(0) = 0 but g_0(0) = 1
  auto findings = validate_problem(problem_from_json(j));
  CHECK(!has_errors(findings));
  CHECK(has_code(findings, "compatibility", Finding::Severity::Warning));
}

TEST_CASE("piecewise polynomial data: evaluation, derivatives, transforms view") {
  json j = json::parse(R"json({
    "kind": "piecewise-polynomial",
    "breakpoints": [0.0, 0.5, 1.0],
    "coefficients": [ [1.0], [1.0, 2.0] ]
  })json");
  DataFunction f = DataFunction::from_json(j, 'x');
  CHECK(f.eval(0.25).real() == Approx(1.0));
  CHECK(f.eval(0.75).real() == Approx(1.5));  // 1 + 2*(0.75-0.5)
  CHECK(f.deriv(0.75, 1).real() == Approx(2.0));
  CHECK(f.deriv(0.25, 1).real() == Approx(0.0));
  auto pieces = f.ep_pieces(0.0, 1.0);
  REQUIRE(pieces.has_value());
  CHECK(pieces->size() == 2);
}

TEST_CASE("sampled data: cubic interpolation and approximate derivatives") {
  std::vector<double> xs;
  std::vector<Cplx> vs;
  for (int i = 0; i <= 100; ++i) {
    double x = i / 100.0;
    xs.push_back(x);
    vs.push_back(std::sin(kPi * x));
  }
  DataFunction f = DataFunction::sampled(xs, vs);
  CHECK(std::abs(f.eval(0.333) - std::sin(kPi * 0.333)) < 1e-7);
  CHECK(std::abs(f.deriv(0.4, 1) - kPi * std::cos(kPi * 0.4)) < 1e-5);
  CHECK(!f.has_exact_derivatives());
  CHECK(!f.ep_pieces(0.0, 1.0).has_value());
}

TEST_CASE("data shorthands: bare numbers and strings") {
  DataFunction a = DataFunction::from_json(json(2.5), 't');
  CHECK(a.eval(17.0).real() == Approx(2.5));
  DataFunction b = DataFunction::from_json(json("sin(4*t)"), 't');
  CHECK(b.eval(0.25).real() == Approx(std::sin(1.0)));
}

TEST_CASE("missing fields produce validation errors with the field name") {
  json j = dirichlet_heat_json();
  j.erase("b");
  CHECK_THROWS_AS(problem_from_json(j), ValidationError);
  j = dirichlet_heat_json();
  j.erase("q0");
  CHECK_THROWS_AS(problem_from_json(j), ValidationError);
  j = dirichlet_heat_json();
  j["b"] = json::parse("[ [[1,0],[0,1]] ]");  // wrong slab count
  CHECK_THROWS_AS(problem_from_json(j), ValidationError);
}

TEST_CASE("nonlocal problems: parsing and row structure rules") {
  json j = json::parse(R"json({
    "order": 2,
    "a": 1.0,
    "eta": [0.0, 0.5, 1.0],
    "variant": "value",
    "w": [ [[1,0],[0,1]], [[0,0],[0,0]] ],
    "g": ["0", "0"],
    "q0": "sin(pi*x)",
    "T": 0.4
  })json");
  NonlocalSpec p = nonlocal_from_json(j);
  CHECK(p.m() == 2);
  CHECK(p.w.ncols == 2);
  CHECK(!has_errors(validate_nonlocal(p)));

  // Mixing value and derivative integrals in one row cannot reduce.
  json bad = j;
  bad["variant"] = "derivative";
  bad["w"] = json::parse("[ [[1,0],[0,1]], [[0,1],[0,0]] ]");
  CHECK(has_errors(validate_nonlocal(nonlocal_from_json(bad))));

  // Under variant "value" row k holds polynomial coefficients, so a row
  // using both x^0 and x^1 terms (weight like 1 - x) is fine.
  json poly = j;
  poly["w"] = json::parse("[ [[1,0],[0,1]], [[0,0],[0,-1]] ]");
  CHECK(!has_errors(validate_nonlocal(nonlocal_from_json(poly))));

  // An identically zero row is rejected.
  json bad3 = j;
  bad3["w"] = json::parse("[ [[0,0],[0,1]], [[0,0],[0,0]] ]");
  CHECK(has_errors(validate_nonlocal(nonlocal_from_json(bad3))));
}

TEST_CASE("order outside the closed-form range warns but does not error") {
  json j = json::parse(R"json({
    "order": 4,
    "a": 1.0,
    "eta": [0.0, 1.0],
    "b": [ [[1,0],[0,1]], [[0,0],[0,0]], [[1,0],[0,0]], [[0,0],[1,0]] ],
    "g": ["0", "0", "0", "0"],
    "q0": "x^2*(1-x)^2",
    "T": 0.1
  })json");
  // b must be 4 slabs of 4 rows of 2 entries; rebuild properly.
  j["b"] = json::array();
  for (int k = 0; k < 4; ++k) {
    json slab = json::array();
    for (int row = 0; row < 4; ++row) {
      json r = json::array({0.0, 0.0});
      slab.push_back(r);
    }
    j["b"].push_back(slab);
  }
  // q(0), q(1), q'(0), q'(1)
  j["b"][0][0][0] = 1.0;
  j["b"][0][1][1] = 1.0;
  j["b"][1][2][0] = 1.0;
  j["b"][1][3][1] = 1.0;
  auto findings = validate_problem(problem_from_json(j));
  CHECK(!has_errors(findings));
  CHECK(has_code(findings, "order", Finding::Severity::Warning));
}
