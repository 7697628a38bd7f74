#pragma once
// Small symbolic expression layer for the user-supplied data functions
// (initial condition in x, boundary data in t). Supports parsing, pointwise
// evaluation, exact differentiation, and normalisation into the
// "exponential-polynomial" canonical form
//     sum_q  c_q * v^{d_q} * exp(nu_q * v)
// that drives all exact transform evaluations. Functions outside this class
// (after composition rules run out) simply fail normalisation and callers
// fall back to numerical quadrature.

#include <cctype>
#include <cmath>
#include <complex>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "utpde/error.hpp"

namespace utpde {

using Cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// Exponential-polynomial canonical form.
// ---------------------------------------------------------------------------
struct ExpPolyTerm {
  Cplx c;   // coefficient
  int d;    // monomial degree (>= 0)
  Cplx nu;  // exponential rate
};

struct ExpPoly {
  std::vector<ExpPolyTerm> terms;

  static constexpr std::size_t kMaxTerms = 4096;

  bool empty_or_zero() const {
    for (const auto& t : terms)
      if (t.c != Cplx(0)) return false;
    return true;
  }

  void add_term(const ExpPolyTerm& t) {
    if (t.c == Cplx(0)) return;
    for (auto& u : terms) {
      if (u.d == t.d && std::abs(u.nu - t.nu) <=
                            1e-13 * (1.0 + std::abs(u.nu) + std::abs(t.nu))) {
        u.c += t.c;
        return;
      }
    }
    terms.push_back(t);
    if (terms.size() > kMaxTerms)
      throw ValidationError("expression too large to normalise");
  }

  void add(const ExpPoly& o) {
    for (const auto& t : o.terms) add_term(t);
  }

  void scale(Cplx s) {
    for (auto& t : terms) t.c *= s;
  }

  static ExpPoly mul(const ExpPoly& a, const ExpPoly& b) {
    ExpPoly r;
    for (const auto& ta : a.terms)
      for (const auto& tb : b.terms)
        r.add_term({ta.c * tb.c, ta.d + tb.d, ta.nu + tb.nu});
    return r;
  }

  Cplx eval(Cplx v) const {
    Cplx s = 0.0;
    for (const auto& t : terms) {
      Cplx mono = 1.0;
      for (int k = 0; k < t.d; ++k) mono *= v;
      s += t.c * mono * std::exp(t.nu * v);
    }
    return s;
  }

  ExpPoly derivative() const {
    ExpPoly r;
    for (const auto& t : terms) {
      if (t.d > 0) r.add_term({t.c * double(t.d), t.d - 1, t.nu});
      if (t.nu != Cplx(0)) r.add_term({t.c * t.nu, t.d, t.nu});
    }
    return r;
  }

  // If the form is affine (c1 * v + c0 with no exponentials), return {c1, c0}.
  std::optional<std::pair<Cplx, Cplx>> as_affine() const {
    Cplx a = 0.0, b = 0.0;
    for (const auto& t : terms) {
      if (t.nu != Cplx(0) || t.d > 1) return std::nullopt;
      if (t.d == 1)
        a += t.c;
      else
        b += t.c;
    }
    return std::make_pair(a, b);
  }

  // Largest |nu| over the terms (0 for plain polynomials).
  double max_rate() const {
    double m = 0.0;
    for (const auto& t : terms) m = std::max(m, std::abs(t.nu));
    return m;
  }
};

// ---------------------------------------------------------------------------
// Expression AST.
// ---------------------------------------------------------------------------
class Expr {
 public:
  enum class Kind { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp };

  Expr() : Expr(constant(0.0)) {}

  static Expr constant(Cplx v) { return Expr(std::make_shared<Node>(Node{Kind::Const, v, {}, {}})); }
  static Expr var() { return Expr(std::make_shared<Node>(Node{Kind::Var, 0.0, {}, {}})); }
  static Expr unary(Kind k, Expr a) {
    return Expr(std::make_shared<Node>(Node{k, 0.0, a.n_, {}}));
  }
  static Expr binary(Kind k, Expr a, Expr b) {
    return Expr(std::make_shared<Node>(Node{k, 0.0, a.n_, b.n_}));
  }

  Kind kind() const { return n_->kind; }
  Cplx const_value() const { return n_->value; }
  Expr left() const { return Expr(n_->a); }
  Expr right() const { return Expr(n_->b); }

  bool is_const() const { return n_->kind == Kind::Const; }

  Cplx eval(Cplx v) const { return eval_node(*n_, v); }

  Expr derivative() const { return diff_node(*n_); }

  // Exact k-th derivative.
  Expr derivative(int k) const {
    Expr e = *this;
    for (int i = 0; i < k; ++i) e = e.derivative();
    return e;
  }

  // Normalise into exponential-polynomial form; nullopt when the expression
  // leaves that class (e.g. division by a non-constant, sin of x^2).
  std::optional<ExpPoly> exp_poly() const {
    try {
      return ep_node(*n_);
    } catch (const NotExpPoly&) {
      return std::nullopt;
    }
  }

  // Parseable round-trip serialisation.
  std::string to_string() const { return str_node(*n_, 'v'); }
  std::string to_string(char var) const { return str_node(*n_, var); }

 private:
  struct Node {
    Kind kind;
    Cplx value;                  // Const only
    std::shared_ptr<const Node> a, b;
  };
  struct NotExpPoly {};

  explicit Expr(std::shared_ptr<const Node> n) : n_(std::move(n)) {}

  static Cplx eval_node(const Node& n, Cplx v) {
    switch (n.kind) {
      case Kind::Const: return n.value;
      case Kind::Var: return v;
      case Kind::Add: return eval_node(*n.a, v) + eval_node(*n.b, v);
      case Kind::Sub: return eval_node(*n.a, v) - eval_node(*n.b, v);
      case Kind::Mul: return eval_node(*n.a, v) * eval_node(*n.b, v);
      case Kind::Div: return eval_node(*n.a, v) / eval_node(*n.b, v);
      case Kind::Pow: {
        Cplx base = eval_node(*n.a, v);
        Cplx ex = eval_node(*n.b, v);
        // Integer powers evaluated by repeated multiplication keep
        // polynomial data exact (std::pow goes through log for complex).
        if (ex.imag() == 0.0 && ex.real() == std::floor(ex.real()) &&
            std::abs(ex.real()) <= 64) {
          long k = static_cast<long>(ex.real());
          Cplx r = 1.0, bb = base;
          long kk = k < 0 ? -k : k;
          for (long i = 0; i < kk; ++i) r *= bb;
          return k < 0 ? Cplx(1.0) / r : r;
        }
        return std::pow(base, ex);
      }
      case Kind::Neg: return -eval_node(*n.a, v);
      case Kind::Sin: return std::sin(eval_node(*n.a, v));
      case Kind::Cos: return std::cos(eval_node(*n.a, v));
      case Kind::Exp: return std::exp(eval_node(*n.a, v));
    }
    return 0.0;
  }

  static Expr wrap(std::shared_ptr<const Node> n) { return Expr(std::move(n)); }
  Expr self() const { return Expr(n_); }

  static Expr diff_node(const Node& n) {
    Expr a = n.a ? Expr(n.a) : Expr();
    Expr b = n.b ? Expr(n.b) : Expr();
    switch (n.kind) {
      case Kind::Const: return constant(0.0);
      case Kind::Var: return constant(1.0);
      case Kind::Add: return binary(Kind::Add, a.derivative(), b.derivative());
      case Kind::Sub: return binary(Kind::Sub, a.derivative(), b.derivative());
      case Kind::Mul:
        return binary(Kind::Add, binary(Kind::Mul, a.derivative(), b),
                      binary(Kind::Mul, a, b.derivative()));
      case Kind::Div:
        // (u/v)' = u'/v - u v'/v^2
        return binary(
            Kind::Sub, binary(Kind::Div, a.derivative(), b),
            binary(Kind::Div, binary(Kind::Mul, a, b.derivative()),
                   binary(Kind::Mul, b, b)));
      case Kind::Pow: {
        if (b.is_const()) {
          Cplx c = b.const_value();
          if (c == Cplx(0)) return constant(0.0);
          Expr pw = binary(Kind::Pow, a, constant(c - 1.0));
          return binary(Kind::Mul, constant(c), binary(Kind::Mul, pw, a.derivative()));
        }
        throw ValidationError(
            "cannot differentiate a power with non-constant exponent");
      }
      case Kind::Neg: return unary(Kind::Neg, a.derivative());
      case Kind::Sin:
        return binary(Kind::Mul, unary(Kind::Cos, a), a.derivative());
      case Kind::Cos:
        return unary(Kind::Neg,
                     binary(Kind::Mul, unary(Kind::Sin, a), a.derivative()));
      case Kind::Exp:
        return binary(Kind::Mul, unary(Kind::Exp, a), a.derivative());
    }
    return constant(0.0);
  }

  static ExpPoly ep_node(const Node& n) {
    switch (n.kind) {
      case Kind::Const: {
        ExpPoly r;
        r.add_term({n.value, 0, 0.0});
        return r;
      }
      case Kind::Var: {
        ExpPoly r;
        r.add_term({1.0, 1, 0.0});
        return r;
      }
      case Kind::Add: {
        ExpPoly r = ep_node(*n.a);
        r.add(ep_node(*n.b));
        return r;
      }
      case Kind::Sub: {
        ExpPoly r = ep_node(*n.a);
        ExpPoly o = ep_node(*n.b);
        o.scale(-1.0);
        r.add(o);
        return r;
      }
      case Kind::Mul: return ExpPoly::mul(ep_node(*n.a), ep_node(*n.b));
      case Kind::Div: {
        if (n.b->kind != Kind::Const) throw NotExpPoly{};
        ExpPoly r = ep_node(*n.a);
        r.scale(Cplx(1.0) / n.b->value);
        return r;
      }
      case Kind::Pow: {
        if (n.b->kind != Kind::Const) throw NotExpPoly{};
        Cplx e = n.b->value;
        double er = e.real();
        if (e.imag() != 0.0 || std::abs(er - std::round(er)) > 1e-9 ||
            er < 0 || er > 64)
          throw NotExpPoly{};
        int k = static_cast<int>(std::round(er));
        ExpPoly base = ep_node(*n.a);
        ExpPoly r;
        r.add_term({1.0, 0, 0.0});
        for (int i = 0; i < k; ++i) r = ExpPoly::mul(r, base);
        return r;
      }
      case Kind::Neg: {
        ExpPoly r = ep_node(*n.a);
        r.scale(-1.0);
        return r;
      }
      case Kind::Sin:
      case Kind::Cos:
      case Kind::Exp: {
        ExpPoly arg = ep_node(*n.a);
        auto aff = arg.as_affine();
        if (!aff) throw NotExpPoly{};
        auto [sl, off] = *aff;
        const Cplx I(0.0, 1.0);
        ExpPoly r;
        if (n.kind == Kind::Exp) {
          r.add_term({std::exp(off), 0, sl});
        } else if (n.kind == Kind::Sin) {
          // sin(u) = (e^{iu} - e^{-iu}) / (2i)
          r.add_term({std::exp(I * off) / (2.0 * I), 0, I * sl});
          r.add_term({-std::exp(-I * off) / (2.0 * I), 0, -I * sl});
        } else {
          r.add_term({std::exp(I * off) / 2.0, 0, I * sl});
          r.add_term({std::exp(-I * off) / 2.0, 0, -I * sl});
        }
        return r;
      }
    }
    throw NotExpPoly{};
  }

  static std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }

  static std::string str_node(const Node& n, char var) {
    switch (n.kind) {
      case Kind::Const: {
        double re = n.value.real(), im = n.value.imag();
        if (im == 0.0) {
          if (re < 0) return "(" + fmt_double(re) + ")";
          return fmt_double(re);
        }
        std::string s = "(" + fmt_double(re);
        s += (im < 0 ? "-" : "+");
        s += fmt_double(std::abs(im)) + "*i)";
        return s;
      }
      case Kind::Var: return std::string(1, var);
      case Kind::Add:
        return "(" + str_node(*n.a, var) + "+" + str_node(*n.b, var) + ")";
      case Kind::Sub:
        return "(" + str_node(*n.a, var) + "-" + str_node(*n.b, var) + ")";
      case Kind::Mul:
        return "(" + str_node(*n.a, var) + "*" + str_node(*n.b, var) + ")";
      case Kind::Div:
        return "(" + str_node(*n.a, var) + "/" + str_node(*n.b, var) + ")";
      case Kind::Pow:
        return "(" + str_node(*n.a, var) + "^" + str_node(*n.b, var) + ")";
      case Kind::Neg: return "(-" + str_node(*n.a, var) + ")";
      case Kind::Sin: return "sin(" + str_node(*n.a, var) + ")";
      case Kind::Cos: return "cos(" + str_node(*n.a, var) + ")";
      case Kind::Exp: return "exp(" + str_node(*n.a, var) + ")";
    }
    return "0";
  }

  std::shared_ptr<const Node> n_;
};

// ---------------------------------------------------------------------------
// Parser: +, -, *, /, ^ (right-assoc), sin/cos/exp, pi, i, numbers, one
// variable letter. No implicit multiplication.
// ---------------------------------------------------------------------------
class ExprParser {
 public:
  ExprParser(std::string src, char var) : src_(std::move(src)), var_(var) {}

  Expr parse() {
    Expr e = parse_sum();
    skip_ws();
    if (pos_ != src_.size())
      throw ValidationError("unexpected trailing input in expression at '" +
                            src_.substr(pos_) + "'");
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  char peek() {
    skip_ws();
    return pos_ < src_.size() ? src_[pos_] : '\0';
  }

  Expr parse_sum() {
    Expr e = parse_product();
    for (;;) {
      if (eat('+'))
        e = Expr::binary(Expr::Kind::Add, e, parse_product());
      else if (eat('-'))
        e = Expr::binary(Expr::Kind::Sub, e, parse_product());
      else
        return e;
    }
  }

  Expr parse_product() {
    Expr e = parse_unary();
    for (;;) {
      if (eat('*'))
        e = Expr::binary(Expr::Kind::Mul, e, parse_unary());
      else if (eat('/'))
        e = Expr::binary(Expr::Kind::Div, e, parse_unary());
      else
        return e;
    }
  }

  Expr parse_unary() {
    if (eat('-')) return Expr::unary(Expr::Kind::Neg, parse_unary());
    if (eat('+')) return parse_unary();
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_atom();
    if (eat('^')) {
      Expr ex = parse_unary();  // right-associative, allows -1 etc.
      return Expr::binary(Expr::Kind::Pow, base, ex);
    }
    return base;
  }

  Expr parse_atom() {
    skip_ws();
    if (pos_ >= src_.size())
      throw ValidationError("unexpected end of expression");
    char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = parse_sum();
      if (!eat(')')) throw ValidationError("missing ')' in expression");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
    throw ValidationError(std::string("unexpected character '") + c +
                          "' in expression");
  }

  Expr parse_number() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
      ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
          ++pos_;
      } else {
        pos_ = mark;  // 'e' belonged to something else; not supported anyway
      }
    }
    double v = std::strtod(src_.c_str() + start, nullptr);
    // Allow the common shorthand "2i" / "1.5i" for imaginary literals.
    if (pos_ < src_.size() && src_[pos_] == 'i' &&
        (pos_ + 1 >= src_.size() ||
         !std::isalnum(static_cast<unsigned char>(src_[pos_ + 1])))) {
      ++pos_;
      return Expr::constant(Cplx(0.0, v));
    }
    return Expr::constant(v);
  }

  Expr parse_ident() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           std::isalpha(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
    std::string id = src_.substr(start, pos_ - start);
    if (id == "sin") return parse_call(Expr::Kind::Sin);
    if (id == "cos") return parse_call(Expr::Kind::Cos);
    if (id == "exp") return parse_call(Expr::Kind::Exp);
    if (id == "pi") return Expr::constant(3.14159265358979323846);
    if (id == "i") return Expr::constant(Cplx(0.0, 1.0));
    if (id.size() == 1 && id[0] == var_) return Expr::var();
    throw ValidationError("unknown identifier '" + id + "' in expression (variable is '" +
                          std::string(1, var_) + "')");
  }

  Expr parse_call(Expr::Kind k) {
    if (!eat('(')) throw ValidationError("expected '(' after function name");
    Expr arg = parse_sum();
    if (!eat(')')) throw ValidationError("missing ')' after function argument");
    return Expr::unary(k, arg);
  }

  std::string src_;
  char var_;
  std::size_t pos_ = 0;
};

inline Expr parse_expression(const std::string& src, char var) {
  return ExprParser(src, var).parse();
}

}  // namespace utpde
