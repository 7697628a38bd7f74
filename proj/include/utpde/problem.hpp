#pragma once
// Problem model: PDE parameters, interface points, condition tensors,
// data functions, JSON (de)serialisation, and validation with findings.
//
// The evolution equation is  q_t + a (-i d/dx)^n q = 0  on (0,1), with n
// boundary/interface condition rows
//     sum_{k,r} b[k][j][r] * (d/dx)^k q(eta_r, t) = g_j(t),   j = 0..n-1,
// at points 0 = eta_0 < eta_1 < ... < eta_m = 1, plus initial datum q0.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "json.hpp"
#include "utpde/error.hpp"
#include "utpde/expression.hpp"

namespace utpde {

inline constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// PDE parameters.
// ---------------------------------------------------------------------------
struct PdeSpec {
  int n = 2;       // spatial order
  Cplx a{1.0, 0.0};

  Cplx alpha() const {  // primitive n-th root of unity
    return std::exp(Cplx(0.0, 2.0 * kPi / double(n)));
  }
};

// True when the direction coefficient makes the even-order equation purely
// dispersive (a = i): solutions do not decay and the quadrature contours
// hug the real axis, so the CLI requires an explicit override.
inline bool is_dispersive(const PdeSpec& pde) {
  return pde.n % 2 == 0 && std::abs(pde.a - Cplx(0.0, 1.0)) <= 1e-12;
}

// ---------------------------------------------------------------------------
// Condition tensor b[k][j][r]: k = derivative order (0..n-1), j = condition
// row (0..n-1), r = column index. For multipoint conditions the columns are
// the m+1 interface points; for nonlocal conditions they are the m
// subintervals. Stored k-major to match the JSON nesting b[k][j][r].
// ---------------------------------------------------------------------------
struct ConditionTensor {
  int n = 0;      // rows (= conditions = derivative orders)
  int ncols = 0;  // points (m+1) or pieces (m)
  std::vector<Cplx> v;

  ConditionTensor() = default;
  ConditionTensor(int n_, int ncols_) : n(n_), ncols(ncols_) {
    v.assign(std::size_t(n) * n * ncols, Cplx(0.0));
  }

  std::size_t idx(int k, int j, int r) const {
    return (std::size_t(k) * n + j) * ncols + r;
  }
  Cplx& at(int k, int j, int r) { return v[idx(k, j, r)]; }
  const Cplx& at(int k, int j, int r) const { return v[idx(k, j, r)]; }

  double max_abs() const {
    double m = 0.0;
    for (const auto& z : v) m = std::max(m, std::abs(z));
    return m;
  }
};

// Rank of the n x (n*ncols) flattening (rows j, columns (k,r)).
inline int condition_rank(const ConditionTensor& b, double rel_tol = 1e-10) {
  Eigen::MatrixXcd M(b.n, b.n * b.ncols);
  for (int j = 0; j < b.n; ++j)
    for (int k = 0; k < b.n; ++k)
      for (int r = 0; r < b.ncols; ++r) M(j, k * b.ncols + r) = b.at(k, j, r);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 0;
  double tol = rel_tol * s(0);
  int rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > tol) ++rank;
  return rank;
}

// ---------------------------------------------------------------------------
// Data functions (initial condition, boundary data).
// ---------------------------------------------------------------------------

// One piece of an exponential-polynomial description of a data function:
// f(x) = p(x - origin) for x in [a, b].
struct EPPiece {
  double a = 0.0, b = 0.0, origin = 0.0;
  ExpPoly p;
};

class DataFunction {
 public:
  enum class Kind { Expression, PiecewisePoly, Sampled };

  DataFunction() = default;  // constant zero (matches the member defaults)

  static DataFunction from_expr(Expr e, std::string source, char var) {
    DataFunction f;
    f.kind_ = Kind::Expression;
    f.expr_ = std::move(e);
    f.source_ = std::move(source);
    f.var_ = var;
    return f;
  }

  static DataFunction parse(const std::string& formula, char var) {
    return from_expr(parse_expression(formula, var), formula, var);
  }

  static DataFunction piecewise(std::vector<double> breaks,
                                std::vector<std::vector<Cplx>> coeffs) {
    if (breaks.size() < 2 || coeffs.size() + 1 != breaks.size())
      throw ValidationError(
          "piecewise-polynomial needs K+1 breakpoints for K coefficient rows");
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
      if (!(breaks[i] < breaks[i + 1]))
        throw ValidationError("piecewise-polynomial breakpoints must increase");
    DataFunction f;
    f.kind_ = Kind::PiecewisePoly;
    f.breaks_ = std::move(breaks);
    f.coeffs_ = std::move(coeffs);
    return f;
  }

  static DataFunction sampled(std::vector<double> xs, std::vector<Cplx> vs) {
    if (xs.size() != vs.size() || xs.size() < 2)
      throw ValidationError("sampled data needs at least two [x, value] pairs");
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
      if (!(xs[i] < xs[i + 1]))
        throw ValidationError("sampled abscissae must be strictly increasing");
    DataFunction f;
    f.kind_ = Kind::Sampled;
    f.sx_ = std::move(xs);
    f.sv_ = std::move(vs);
    return f;
  }

  Kind kind() const { return kind_; }
  char var() const { return var_; }
  const std::string& source() const { return source_; }
  const Expr& expr() const { return expr_; }
  const std::vector<double>& sample_points() const { return sx_; }
  const std::vector<Cplx>& sample_values() const { return sv_; }
  const std::vector<double>& breakpoints() const { return breaks_; }
  const std::vector<std::vector<Cplx>>& coefficients() const {
    return coeffs_;
  }

  bool has_exact_derivatives() const { return kind_ != Kind::Sampled; }

  Cplx eval(double x) const {
    switch (kind_) {
      case Kind::Expression: return expr_.eval(Cplx(x, 0.0));
      case Kind::PiecewisePoly: {
        std::size_t p = piece_index(x);
        Cplx s = 0.0, u(x - breaks_[p], 0.0), mono = 1.0;
        for (const auto& c : coeffs_[p]) {
          s += c * mono;
          mono *= u;
        }
        return s;
      }
      case Kind::Sampled: return sampled_eval(x);
    }
    return 0.0;
  }

  // k-th derivative. Exact for expressions and piecewise polynomials;
  // sampled data uses centred 4th-order finite differences (step 1e-4).
  Cplx deriv(double x, int k) const {
    if (k == 0) return eval(x);
    switch (kind_) {
      case Kind::Expression: return expr_.derivative(k).eval(Cplx(x, 0.0));
      case Kind::PiecewisePoly: {
        std::size_t p = piece_index(x);
        Cplx s = 0.0;
        double u = x - breaks_[p];
        for (std::size_t d = std::size_t(k); d < coeffs_[p].size(); ++d) {
          double fac = 1.0;
          for (std::size_t q = d; q > d - std::size_t(k); --q) fac *= double(q);
          double mono = 1.0;
          for (std::size_t q = 0; q < d - std::size_t(k); ++q) mono *= u;
          s += coeffs_[p][d] * fac * mono;
        }
        return s;
      }
      case Kind::Sampled: {
        const double h = 1e-4;
        if (k == 1)
          return (-sampled_eval(x + 2 * h) + 8.0 * sampled_eval(x + h) -
                  8.0 * sampled_eval(x - h) + sampled_eval(x - 2 * h)) /
                 (12.0 * h);
        // higher orders by recursion on the first derivative
        DataFunction tmp = *this;
        auto d1 = [&](double y) { return tmp.deriv(y, 1); };
        if (k == 2)
          return (-d1(x + 2 * h) + 8.0 * d1(x + h) - 8.0 * d1(x - h) +
                  d1(x - 2 * h)) /
                 (12.0 * h);
        // k >= 3: nested central differences of the 2nd derivative
        auto d2 = [&](double y) { return tmp.deriv(y, 2); };
        return (d2(x + h) - d2(x - h)) / (2.0 * h);
      }
    }
    return 0.0;
  }

  // Exponential-polynomial pieces covering [lo, hi], or nullopt when the
  // function is not exactly representable (sampled data, transcendental
  // compositions). Pieces are returned in increasing order and exactly tile
  // [lo, hi].
  std::optional<std::vector<EPPiece>> ep_pieces(double lo, double hi) const {
    std::vector<EPPiece> out;
    if (kind_ == Kind::Expression) {
      auto p = expr_.exp_poly();
      if (!p) return std::nullopt;
      out.push_back({lo, hi, 0.0, *p});
      return out;
    }
    if (kind_ == Kind::PiecewisePoly) {
      for (std::size_t p = 0; p + 1 < breaks_.size(); ++p) {
        double a = std::max(lo, breaks_[p]);
        double b = std::min(hi, breaks_[p + 1]);
        if (!(a < b)) continue;
        ExpPoly poly;
        for (std::size_t d = 0; d < coeffs_[p].size(); ++d)
          poly.add_term({coeffs_[p][d], int(d), 0.0});
        out.push_back({a, b, breaks_[p], poly});
      }
      if (out.empty() || out.front().a > lo + 1e-12 ||
          out.back().b < hi - 1e-12)
        throw ValidationError(
            "piecewise-polynomial data does not cover the required interval");
      return out;
    }
    return std::nullopt;
  }

  // Largest |rate| of any exponential term (0 when not exp-poly or no
  // exponentials). Used to keep quadrature contours clear of data poles.
  double max_exp_rate() const {
    if (kind_ == Kind::Expression) {
      if (auto p = expr_.exp_poly()) return p->max_rate();
    }
    return 0.0;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    switch (kind_) {
      case Kind::Expression:
        j["kind"] = "expression";
        j["formula"] = source_;
        break;
      case Kind::PiecewisePoly: {
        j["kind"] = "piecewise-polynomial";
        j["breakpoints"] = breaks_;
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& row : coeffs_) {
          nlohmann::json r = nlohmann::json::array();
          for (const auto& c : row) r.push_back(cplx_to_json(c));
          rows.push_back(r);
        }
        j["coefficients"] = rows;
        break;
      }
      case Kind::Sampled: {
        j["kind"] = "sampled";
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t i = 0; i < sx_.size(); ++i)
          rows.push_back(nlohmann::json::array({sx_[i], cplx_to_json(sv_[i])}));
        j["samples"] = rows;
        break;
      }
    }
    return j;
  }

  static nlohmann::json cplx_to_json(Cplx z) {
    if (z.imag() == 0.0) return z.real();
    return nlohmann::json{{"re", z.real()}, {"im", z.imag()}};
  }

  static Cplx cplx_from_json(const nlohmann::json& j, const char* what) {
    if (j.is_number()) return Cplx(j.get<double>(), 0.0);
    if (j.is_object() && j.contains("re"))
      return Cplx(j["re"].get<double>(),
                  j.value("im", 0.0));
    throw ValidationError(std::string(what) +
                          ": expected a number or {\"re\":..,\"im\":..}");
  }

  static DataFunction from_json(const nlohmann::json& j, char var) {
    if (j.is_string()) return parse(j.get<std::string>(), var);
    if (j.is_number()) {
      double v = j.get<double>();
      return from_expr(Expr::constant(v), Expr::constant(v).to_string(var), var);
    }
    if (!j.is_object() || !j.contains("kind"))
      throw ValidationError(
          "data function must be a formula string, a number, or an object "
          "with a \"kind\" field");
    std::string kind = j["kind"].get<std::string>();
    if (kind == "expression") {
      DataFunction f = parse(j.at("formula").get<std::string>(), var);
      return f;
    }
    if (kind == "piecewise-polynomial") {
      std::vector<double> breaks = j.at("breakpoints").get<std::vector<double>>();
      std::vector<std::vector<Cplx>> coeffs;
      for (const auto& row : j.at("coefficients")) {
        std::vector<Cplx> r;
        for (const auto& c : row) r.push_back(cplx_from_json(c, "coefficient"));
        coeffs.push_back(std::move(r));
      }
      DataFunction f = piecewise(std::move(breaks), std::move(coeffs));
      f.var_ = var;
      return f;
    }
    if (kind == "sampled") {
      std::vector<double> xs;
      std::vector<Cplx> vs;
      for (const auto& row : j.at("samples")) {
        if (!row.is_array() || row.size() != 2)
          throw ValidationError("sampled data rows must be [x, value] pairs");
        xs.push_back(row[0].get<double>());
        vs.push_back(cplx_from_json(row[1], "sample value"));
      }
      DataFunction f = sampled(std::move(xs), std::move(vs));
      f.var_ = var;
      return f;
    }
    throw ValidationError("unknown data function kind '" + kind + "'");
  }

 private:
  std::size_t piece_index(double x) const {
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
    std::size_t p = it == breaks_.begin() ? 0 : std::size_t(it - breaks_.begin()) - 1;
    return std::min(p, breaks_.size() - 2);
  }

  Cplx sampled_eval(double x) const {
    // Local cubic Lagrange interpolation through the four nearest samples
    // (degrades to the available stencil near the ends).
    std::size_t nn = sx_.size();
    auto it = std::upper_bound(sx_.begin(), sx_.end(), x);
    std::size_t i = it == sx_.begin() ? 0 : std::size_t(it - sx_.begin()) - 1;
    std::size_t lo = i >= 1 ? i - 1 : 0;
    std::size_t count = std::min<std::size_t>(4, nn - lo);
    if (count < 4 && lo > 0) {
      std::size_t extra = std::min(4 - count, lo);
      lo -= extra;
      count += extra;
    }
    Cplx s = 0.0;
    for (std::size_t p = lo; p < lo + count; ++p) {
      double w = 1.0;
      for (std::size_t q = lo; q < lo + count; ++q)
        if (q != p) w *= (x - sx_[q]) / (sx_[p] - sx_[q]);
      s += sv_[p] * w;
    }
    return s;
  }

  Kind kind_ = Kind::Expression;
  Expr expr_;
  std::string source_ = "0";
  char var_ = 'x';
  std::vector<double> breaks_;
  std::vector<std::vector<Cplx>> coeffs_;
  std::vector<double> sx_;
  std::vector<Cplx> sv_;
};

// ---------------------------------------------------------------------------
// Multipoint problem.
// ---------------------------------------------------------------------------
struct ProblemSpec {
  PdeSpec pde;
  std::vector<double> eta;  // m+1 points, eta[0]=0, eta[m]=1
  ConditionTensor b;        // ncols = m+1
  std::vector<DataFunction> g;  // n rows
  DataFunction q0;
  double T = 1.0;

  int m() const { return int(eta.size()) - 1; }
};

// Nonlocal (integral-condition) problem; reduced to a ProblemSpec by the
// reduction module. Columns of w are the m subintervals (eta_p, eta_{p+1}):
//     sum_{k,p} w[k][j][p] * integral_{eta_p}^{eta_{p+1}} (d/dx)^k q dx = g_j.
struct NonlocalSpec {
  PdeSpec pde;
  std::vector<double> eta;
  ConditionTensor w;  // ncols = m
  std::vector<DataFunction> g;
  DataFunction q0;
  double T = 1.0;
  std::string variant = "value";  // "value" (k=0 only) or "derivative"

  int m() const { return int(eta.size()) - 1; }
};

// ---------------------------------------------------------------------------
// Findings.
// ---------------------------------------------------------------------------
struct Finding {
  enum class Severity { Error, Warning, Note };
  Severity severity = Severity::Note;
  std::string code;     // stable machine-readable tag
  std::string message;  // human-readable detail
  bool approximate = false;  // true when the check used numerical derivatives
};

inline bool has_errors(const std::vector<Finding>& fs) {
  for (const auto& f : fs)
    if (f.severity == Finding::Severity::Error) return true;
  return false;
}

// ---------------------------------------------------------------------------
// JSON I/O.
// ---------------------------------------------------------------------------
namespace detail {
inline Cplx coeff_a_from_json(const nlohmann::json& j) {
  return DataFunction::cplx_from_json(j, "\"a\"");
}

inline void parse_common(const nlohmann::json& j, PdeSpec& pde,
                         std::vector<double>& eta,
                         std::vector<DataFunction>& g, DataFunction& q0,
                         double& T) {
  if (!j.contains("order")) throw ValidationError("missing \"order\"");
  pde.n = j["order"].get<int>();
  if (!j.contains("a")) throw ValidationError("missing \"a\"");
  pde.a = coeff_a_from_json(j["a"]);
  if (!j.contains("eta")) throw ValidationError("missing \"eta\"");
  eta = j["eta"].get<std::vector<double>>();
  if (!j.contains("g") || !j["g"].is_array())
    throw ValidationError("missing \"g\" array");
  g.clear();
  for (const auto& gj : j["g"]) g.push_back(DataFunction::from_json(gj, 't'));
  if (!j.contains("q0")) throw ValidationError("missing \"q0\"");
  q0 = DataFunction::from_json(j["q0"], 'x');
  T = j.value("T", 1.0);
}

inline ConditionTensor tensor_from_json(const nlohmann::json& j, int n,
                                        int ncols, const char* key) {
  if (!j.is_array() || int(j.size()) != n)
    throw ValidationError(std::string("\"") + key + "\" must be an array of " +
                          std::to_string(n) + " derivative-order slabs");
  ConditionTensor b(n, ncols);
  for (int k = 0; k < n; ++k) {
    const auto& slab = j[k];
    if (!slab.is_array() || int(slab.size()) != n)
      throw ValidationError(std::string("\"") + key + "\"[" +
                            std::to_string(k) + "] must hold " +
                            std::to_string(n) + " condition rows");
    for (int jj = 0; jj < n; ++jj) {
      const auto& row = slab[jj];
      if (!row.is_array() || int(row.size()) != ncols)
        throw ValidationError(std::string("\"") + key + "\"[" +
                              std::to_string(k) + "][" + std::to_string(jj) +
                              "] must hold " + std::to_string(ncols) +
                              " entries");
      for (int r = 0; r < ncols; ++r)
        b.at(k, jj, r) = DataFunction::cplx_from_json(row[r], key);
    }
  }
  return b;
}

inline nlohmann::json tensor_to_json(const ConditionTensor& b) {
  nlohmann::json out = nlohmann::json::array();
  for (int k = 0; k < b.n; ++k) {
    nlohmann::json slab = nlohmann::json::array();
    for (int j = 0; j < b.n; ++j) {
      nlohmann::json row = nlohmann::json::array();
      for (int r = 0; r < b.ncols; ++r)
        row.push_back(DataFunction::cplx_to_json(b.at(k, j, r)));
      slab.push_back(row);
    }
    out.push_back(slab);
  }
  return out;
}
}  // namespace detail

inline ProblemSpec problem_from_json(const nlohmann::json& j) {
  ProblemSpec p;
  detail::parse_common(j, p.pde, p.eta, p.g, p.q0, p.T);
  if (p.eta.size() < 2) throw ValidationError("\"eta\" needs at least 2 points");
  if (!j.contains("b")) throw ValidationError("missing condition tensor \"b\"");
  p.b = detail::tensor_from_json(j["b"], p.pde.n, int(p.eta.size()), "b");
  return p;
}

inline nlohmann::json problem_to_json(const ProblemSpec& p) {
  nlohmann::json j;
  j["schema"] = "problem.v1";
  j["order"] = p.pde.n;
  j["a"] = DataFunction::cplx_to_json(p.pde.a);
  j["eta"] = p.eta;
  j["b"] = detail::tensor_to_json(p.b);
  nlohmann::json gg = nlohmann::json::array();
  for (const auto& g : p.g) gg.push_back(g.to_json());
  j["g"] = gg;
  j["q0"] = p.q0.to_json();
  j["T"] = p.T;
  return j;
}

inline NonlocalSpec nonlocal_from_json(const nlohmann::json& j) {
  NonlocalSpec p;
  detail::parse_common(j, p.pde, p.eta, p.g, p.q0, p.T);
  if (p.eta.size() < 2) throw ValidationError("\"eta\" needs at least 2 points");
  if (!j.contains("w"))
    throw ValidationError("missing nonlocal weight tensor \"w\"");
  p.w = detail::tensor_from_json(j["w"], p.pde.n, int(p.eta.size()) - 1, "w");
  p.variant = j.value("variant", "value");
  return p;
}

// ---------------------------------------------------------------------------
// Validation.
// ---------------------------------------------------------------------------
inline constexpr double kCompatTol = 1e-8;

inline std::vector<Finding> validate_problem(const ProblemSpec& p) {
  using S = Finding::Severity;
  std::vector<Finding> out;
  auto err = [&](std::string code, std::string msg) {
    out.push_back({S::Error, std::move(code), std::move(msg), false});
  };
  auto warn = [&](std::string code, std::string msg, bool approx = false) {
    out.push_back({S::Warning, std::move(code), std::move(msg), approx});
  };

  const int n = p.pde.n;
  if (n < 2) err("order", "order must be at least 2");
  if (n > 3)
    warn("order",
         "order " + std::to_string(n) +
             ": validation and system assembly only; closed-form evaluation "
             "covers orders 2 and 3");

  // Direction coefficient: |a| = 1 with Im(a) >= 0 for even order; a = +/-i
  // for odd order.
  if (n % 2 == 0) {
    if (std::abs(std::abs(p.pde.a) - 1.0) > 1e-10 || p.pde.a.imag() < -1e-12)
      err("coefficient",
          "even order requires |a| = 1 with nonnegative imaginary part");
    else if (is_dispersive(p.pde))
      warn("dispersive",
           "a = i gives a purely dispersive equation; solutions do not decay "
           "and numerical evaluation is not supported without an explicit "
           "override");
  } else {
    if (std::min(std::abs(p.pde.a - Cplx(0, 1)), std::abs(p.pde.a + Cplx(0, 1))) >
        1e-10)
      err("coefficient", "odd order requires a = i or a = -i");
  }

  // Interface points.
  const int m = p.m();
  if (m < 1) err("eta", "\"eta\" needs at least the two endpoints 0 and 1");
  if (!p.eta.empty()) {
    if (std::abs(p.eta.front()) > 1e-12) err("eta", "eta[0] must equal 0");
    if (std::abs(p.eta.back() - 1.0) > 1e-12) err("eta", "last eta must equal 1");
    for (std::size_t i = 0; i + 1 < p.eta.size(); ++i)
      if (!(p.eta[i] < p.eta[i + 1]))
        err("eta", "eta must be strictly increasing");
  }

  // Tensor shape.
  if (p.b.n != n || p.b.ncols != m + 1) {
    err("tensor", "condition tensor must have shape [order][order][points]");
    return out;  // downstream checks would index out of range
  }
  if (has_errors(out)) return out;

  // Row rank of the flattened condition matrix.
  if (condition_rank(p.b) < n)
    err("rank",
        "condition rows are linearly dependent (rank < " + std::to_string(n) +
            ")");

  if (p.T <= 0.0) err("horizon", "T must be positive");
  if (int(p.g.size()) != n)
    err("data", "expected " + std::to_string(n) + " boundary data entries");

  if (has_errors(out)) return out;

  // Compatibility of the initial condition with the conditions at t = 0.
  bool approx = !p.q0.has_exact_derivatives();
  for (int j = 0; j < n; ++j) {
    Cplx lhs = 0.0;
    for (int k = 0; k < n; ++k)
      for (int r = 0; r <= m; ++r) {
        Cplx w = p.b.at(k, j, r);
        if (w != Cplx(0)) lhs += w * p.q0.deriv(p.eta[r], k);
      }
    Cplx rhs = p.g[j].eval(0.0);
    double dev = std::abs(lhs - rhs);
    if (dev > kCompatTol)
      warn("compatibility",
           "condition row " + std::to_string(j) +
               " disagrees with the initial datum at t = 0 (|deviation| = " +
               std::to_string(dev) + ")",
           approx);
  }
  return out;
}

inline std::vector<Finding> validate_nonlocal(const NonlocalSpec& p) {
  using S = Finding::Severity;
  std::vector<Finding> out;
  auto err = [&](std::string code, std::string msg) {
    out.push_back({S::Error, std::move(code), std::move(msg), false});
  };

  const int n = p.pde.n;
  const int m = p.m();
  if (p.w.n != n || p.w.ncols != m) {
    err("tensor", "weight tensor must have shape [order][order][pieces]");
    return out;
  }
  if (p.variant != "value" && p.variant != "derivative")
    err("variant", "variant must be \"value\" or \"derivative\"");

  // Row structure.  In the "value" flavour row k holds the coefficient of
  // x^k in the weight polynomial, so any combination is fine.  In the
  // "derivative" flavour row k weights integrals of d^k q; a row may weight
  // function values (k = 0) or derivatives (k >= 1) but not both, because
  // the two reduce through different routes (the first transforms the datum,
  // the second keeps it).
  for (int j = 0; j < n; ++j) {
    bool has0 = false, has1 = false;
    for (int r = 0; r < m; ++r) {
      if (p.w.at(0, j, r) != Cplx(0)) has0 = true;
      for (int k = 1; k < n; ++k)
        if (p.w.at(k, j, r) != Cplx(0)) has1 = true;
    }
    if (!has0 && !has1)
      err("row", "weight row " + std::to_string(j) + " is identically zero");
    if (p.variant == "derivative" && has0 && has1)
      err("row",
          "weight row " + std::to_string(j) +
              " mixes value integrals with derivative integrals; such rows do "
              "not reduce to point conditions of order < " +
              std::to_string(n));
  }

  // Shared structural checks via a dummy multipoint wrapper (eta, data, T,
  // coefficient checks); tensor/rank/compatibility are reduction concerns.
  ProblemSpec q;
  q.pde = p.pde;
  q.eta = p.eta;
  q.b = ConditionTensor(n, m + 1);
  for (int j = 0; j < n; ++j) q.b.at(0, j, std::min(j, m)) = 1.0;  // placeholder
  q.g = p.g;
  q.q0 = p.q0;
  q.T = p.T;
  auto base = validate_problem(q);
  for (auto& f : base)
    if (f.code != "rank" && f.code != "compatibility" && f.code != "tensor")
      out.push_back(std::move(f));
  return out;
}

}  // namespace utpde
