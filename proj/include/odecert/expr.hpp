#pragma once

#include <boost/multiprecision/mpfr.hpp>

#include <compare>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "odecert/rational.hpp"

namespace odecert {

enum class Kind {
  Const,
  Time,   // the independent variable t
  State,  // a state variable x, y, ...
  Param,  // a free parameter g, b, ...
  Init,   // an initial-value constant x0, y0, ...
  Neg,
  Add,
  Mul,
  Div,
  Pow,
  Func,
  Tuple,
};

std::string_view kind_name(Kind k);

/// A named leaf of an expression. Time, State, Param and Init are the only
/// symbol kinds.
struct Symbol {
  Kind kind = Kind::Param;
  std::string name;

  static Symbol time() { return {Kind::Time, "t"}; }
  static Symbol state(std::string n) { return {Kind::State, std::move(n)}; }
  static Symbol param(std::string n) { return {Kind::Param, std::move(n)}; }
  static Symbol init(std::string n) { return {Kind::Init, std::move(n)}; }

  friend bool operator==(const Symbol&, const Symbol&) = default;
  friend auto operator<=>(const Symbol&, const Symbol&) = default;
};

/// The function alphabet understood by the parser, evaluator and rule set.
bool is_builtin_function(std::string_view name);

/// Immutable symbolic expression. Copies share structure.
class Expr {
 public:
  Expr();  // Const 0

  static Expr constant(Rational value);
  static Expr time();
  static Expr state(std::string name);
  static Expr param(std::string name);
  static Expr init(std::string name);
  static Expr symbol(const Symbol& s);
  static Expr neg(Expr a);
  static Expr add(Expr a, Expr b);
  static Expr mul(Expr a, Expr b);
  static Expr div(Expr a, Expr b);
  static Expr pow(Expr base, Expr exponent);
  static Expr func(std::string name, Expr arg);
  /// Throws std::invalid_argument on an empty list or a directly nested tuple.
  static Expr tuple(std::vector<Expr> items);

  Kind kind() const;
  /// Value of a Const node.
  const Rational& value() const;
  /// Name of a symbol or function node.
  const std::string& name() const;
  const std::vector<Expr>& children() const;
  const Expr& child(std::size_t i) const { return children()[i]; }
  std::size_t hash() const;

  bool is_const() const { return kind() == Kind::Const; }
  bool is_const(long v) const { return is_const() && value() == Rational(v); }
  bool is_symbol() const;
  bool is_func(std::string_view n) const { return kind() == Kind::Func && name() == n; }
  Symbol as_symbol() const;

  friend bool operator==(const Expr& a, const Expr& b);
  friend std::strong_ordering operator<=>(const Expr& a, const Expr& b);

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  static Expr make(Kind k, Rational v, std::string name, std::vector<Expr> kids);

  std::shared_ptr<const Node> node_;
};

/// Grammar-syntax rendering with minimal parentheses; parse_expr reads it back.
std::string to_string(const Expr& e);
std::ostream& operator<<(std::ostream& os, const Expr& e);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);  // Add(a, Neg(b))
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);

std::set<Symbol> free_symbols(const Expr& e);
bool depends_on(const Expr& e, const Symbol& s);
bool depends_on_time(const Expr& e);
bool contains_state(const Expr& e);

/// Counts Add, Mul, Div, Pow and Func nodes; Neg and Tuple are not operators.
std::size_t count_operators(const Expr& e);
std::size_t node_count(const Expr& e);

/// Simultaneous, capture-free replacement of symbols.
Expr substitute(const Expr& e, const std::map<Symbol, Expr>& bindings);

/// Node at a child-index path from the root.
const Expr& subterm(const Expr& e, const std::vector<std::size_t>& path);

// ---------------------------------------------------------------------------
// Evaluation

using Real = boost::multiprecision::mpfr_float_50;
inline constexpr unsigned kEvalPrecisionBits = 167;  // 50 decimal digits

/// Exact rational where closed under the operation, high-precision float
/// otherwise.
class Number {
 public:
  Number(Rational q) : v_(std::move(q)) {}  // NOLINT(google-explicit-constructor)
  Number(Real r) : v_(std::move(r)) {}      // NOLINT(google-explicit-constructor)

  bool exact() const { return std::holds_alternative<Rational>(v_); }
  const Rational& rational() const { return std::get<Rational>(v_); }
  Real real() const;
  double to_double() const;
  int sign() const;

 private:
  std::variant<Rational, Real> v_;
};

using Valuation = std::map<Symbol, Rational>;

struct EvalOptions {
  /// Points closer than this to a singularity (zero denominator, sqrt/ln of
  /// a non-positive value, arcsin outside (-1,1)) count as undefined.
  double margin = 0.0;
};

/// nullopt when the expression is undefined at v. Throws UnboundSymbol when v
/// misses a free symbol.
std::optional<Number> eval(const Expr& e, const Valuation& v, const EvalOptions& opts = {});

// ---------------------------------------------------------------------------
// Light-simplifying constructors used when synthesizing expressions (solver
// output). They fold rational constants and drop neutral elements; the
// derivative rules never use them.
namespace build {

Expr num(const Rational& q);
Expr add(const Expr& a, const Expr& b);
Expr sub(const Expr& a, const Expr& b);
Expr mul(const Expr& a, const Expr& b);
Expr div(const Expr& a, const Expr& b);
Expr neg(const Expr& a);
Expr pow(const Expr& base, const Expr& exponent);
Expr func(const std::string& name, const Expr& arg);
/// Re-applies the folding constructors bottom-up.
Expr tidy(const Expr& e);

}  // namespace build

}  // namespace odecert

template <>
struct std::hash<odecert::Expr> {
  std::size_t operator()(const odecert::Expr& e) const noexcept { return e.hash(); }
};
