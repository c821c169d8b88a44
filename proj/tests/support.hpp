#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "odecert/deriv.hpp"
#include "odecert/expr.hpp"

namespace odecert::testkit {

// Random closed-form bodies over t, parameters a and b and the init constant x0.
struct ExprGen {
  std::mt19937_64 rng;
  bool functions = true;
  bool division = true;
  bool powers = true;
  long max_const = 5;
  std::vector<std::string> names{"sin", "cos", "exp", "ln", "sqrt", "tan", "arcsin"};

  explicit ExprGen(std::uint64_t seed) : rng(seed) {}

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

  Expr leaf() {
    switch (pick(5)) {
      case 0:
      case 1: return Expr::time();
      case 2: return Expr::param(pick(2) ? "a" : "b");
      case 3: return Expr::init("x0");
      default: return Expr::constant(Rational(1 + pick(static_cast<int>(max_const))));
    }
  }

  Expr gen(int depth) {
    if (depth <= 0 || pick(4) == 0) return leaf();
    int n = 4 + (division ? 1 : 0) + (powers ? 1 : 0) + (functions ? 1 : 0);
    int k = pick(n);
    if (k == 0) return Expr::add(gen(depth - 1), gen(depth - 1));
    if (k == 1) return Expr::mul(gen(depth - 1), gen(depth - 1));
    if (k == 2) return Expr::neg(gen(depth - 1));
    if (k == 3) return Expr::add(gen(depth - 1), Expr::neg(gen(depth - 1)));
    k -= 4;
    if (division && k-- == 0) return Expr::div(gen(depth - 1), gen(depth - 1));
    if (powers && k-- == 0) {
      static const long exps[] = {2, 3, -1, -2};
      if (pick(3) == 0)
        return Expr::pow(gen(depth - 1), Expr::div(Expr::constant(Rational(1 + 2 * pick(2))),
                                                   Expr::constant(Rational(2))));
      long ex = exps[pick(4)];
      Expr x = ex < 0 ? Expr::neg(Expr::constant(Rational(-ex))) : Expr::constant(Rational(ex));
      return Expr::pow(gen(depth - 1), x);
    }
    return Expr::func(names[pick(static_cast<int>(names.size()))], gen(depth - 1));
  }
};

inline Rational rational_of(double x) { return Rational(mpq_class(x)); }

inline std::optional<double> eval_double(const Expr& e, const Valuation& v, double margin = 0) {
  auto r = eval(e, v, {margin});
  if (!r) return std::nullopt;
  double d = r->to_double();
  if (!std::isfinite(d)) return std::nullopt;
  return d;
}

inline bool condition_holds(const SideCondition& c, const Valuation& v, double margin) {
  auto x = eval_double(c.expr, v, margin);
  if (!x) return false;
  switch (c.shape) {
    case ConditionShape::NonZero: return std::abs(*x) >= margin;
    case ConditionShape::Positive: return *x >= margin;
    case ConditionShape::NonNegative: return *x >= margin;
  }
  return false;
}

inline Rational rnd(std::mt19937_64& rng, bool nonzero = true) {
  std::uniform_int_distribution<int> n(-6, 6), d(1, 4);
  Rational q(n(rng), d(rng));
  while (nonzero && q.is_zero()) q = Rational(n(rng), d(rng));
  return q;
}

inline std::string q(const Rational& r) { return "(" + r.to_string() + ")"; }

// Fifty random systems of one class: chain, linear, rotation or separable.
inline std::vector<std::string> family(const std::string& cls, std::mt19937_64& rng) {
  std::vector<std::string> out;
  for (int i = 0; i < 50; ++i) {
    auto a = rnd(rng), b = rnd(rng), c = rnd(rng), d = rnd(rng, false);
    if (cls == "chain")
      out.push_back("x' = " + q(a) + "*t^2 + " + q(b) + "*sin(" + q(c) + "*t) + " + q(d) + "*exp(t), y' = x + " +
                    q(a) + "*cos(t)");
    else if (cls == "linear")
      out.push_back("x' = " + q(a) + "*x + " + q(b) + "*t + " + q(d));
    else if (cls == "rotation")
      out.push_back("x' = -" + q(a) + "*y, y' = " + q(a) + "*x");
    else if (cls == "separable")
      out.push_back(i % 3 == 0 ? "x' = " + q(a) + "*x^2"
                   : i % 3 == 1 ? "x' = " + q(a) + "*x^2 + " + q(b) + "*x + " + q(d)
                                : "x' = 1/(" + q(a) + "*x + " + q(d) + ")");
  }
  return out;
}

}  // namespace odecert::testkit
