#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "odecert/expr.hpp"

namespace odecert::canon {

class RatFunc;

/// An indeterminate of the polynomial ring: a base symbol or a frozen atom
/// (a transcendental subterm with a canonical argument).
struct Var {
  enum class Tag { Symbol, Sin, Cos, Exp, Ln, Root, Func, Opaque };

  Tag tag = Tag::Symbol;
  std::string key;  // total order and identity
  Expr expr;        // what the indeterminate stands for
  /// Sin/Cos/Ln/Func: canonical argument. Exp: canonical exponent.
  /// Root: canonical radicand.
  std::shared_ptr<const RatFunc> payload;
  long root_index = 0;  // Root: the k in radicand^(1/k)
};

using VarRef = std::shared_ptr<const Var>;
using Monomial = std::vector<std::pair<VarRef, long>>;  // sorted by key, exponents > 0

/// Graded lexicographic comparison; > 0 when a is the larger monomial.
int compare(const Monomial& a, const Monomial& b);

struct MonomialGreater {
  bool operator()(const Monomial& a, const Monomial& b) const { return compare(a, b) > 0; }
};

/// Sparse multivariate polynomial with rational coefficients. Iteration runs
/// from the leading (largest) monomial down.
class Poly {
 public:
  using Terms = std::map<Monomial, Rational, MonomialGreater>;

  Poly() = default;
  explicit Poly(const Rational& c);
  static Poly variable(VarRef v, long exponent = 1);
  static Poly term(Monomial m, const Rational& c);

  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  /// Value of a constant polynomial (0 for the zero polynomial).
  Rational constant_value() const;
  const Monomial& leading_monomial() const { return terms_.begin()->first; }
  const Rational& leading_coefficient() const { return terms_.begin()->second; }
  std::map<std::string, VarRef> variables() const;
  long degree_in(const std::string& key) const;
  long max_exponent(const std::string& key) const { return degree_in(key); }
  /// Coefficients with respect to one variable, keyed by degree.
  std::map<long, Poly> coefficients_in(const std::string& key) const;

  Poly operator-() const;
  friend Poly operator+(const Poly& a, const Poly& b);
  friend Poly operator-(const Poly& a, const Poly& b);
  friend Poly operator*(const Poly& a, const Poly& b);
  Poly scaled(const Rational& c) const;
  Poly pow(unsigned long n) const;
  /// Divides by the leading coefficient.
  Poly monic() const;

  friend bool operator==(const Poly& a, const Poly& b);

 private:
  void add_term(const Monomial& m, const Rational& c);
  Terms terms_;
};

/// Exact quotient; throws std::logic_error if b does not divide a.
Poly divide_exact(const Poly& a, const Poly& b);
/// Monic greatest common divisor (1 for coprime inputs).
Poly gcd(const Poly& a, const Poly& b);

/// Reduced quotient p/q: gcd(p, q) = 1 and q monic.
class RatFunc {
 public:
  RatFunc() : num_(), den_(Rational(1)) {}
  explicit RatFunc(const Rational& c) : num_(c), den_(Rational(1)) {}
  explicit RatFunc(Poly p) : num_(std::move(p)), den_(Rational(1)) {}
  /// Reduces to lowest terms; den must be non-zero.
  static RatFunc make(Poly num, Poly den);

  const Poly& num() const { return num_; }
  const Poly& den() const { return den_; }
  bool is_zero() const { return num_.is_zero(); }
  std::optional<Rational> constant() const;

  RatFunc operator-() const;
  friend RatFunc operator+(const RatFunc& a, const RatFunc& b);
  friend RatFunc operator-(const RatFunc& a, const RatFunc& b);
  friend RatFunc operator*(const RatFunc& a, const RatFunc& b);
  /// Requires b non-zero.
  friend RatFunc operator/(const RatFunc& a, const RatFunc& b);
  RatFunc pow(long n) const;

  friend bool operator==(const RatFunc& a, const RatFunc& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }

 private:
  RatFunc(Poly num, Poly den, bool) : num_(std::move(num)), den_(std::move(den)) {}
  Poly num_, den_;
};

using CanonForm = RatFunc;

/// Facts available to context-dependent rewrites: canonical renderings of
/// expressions known to be non-negative. Under such a fact u,
/// (u^(1/k))^k rewrites to u.
struct NormalizeContext {
  std::set<std::string> nonnegative;

  void assume_nonnegative(const Expr& e);
  bool known_nonnegative(const RatFunc& f) const;
};

/// Coefficient multiplications one top-level normalize may spend.
inline constexpr long kNormalizeBudget = 4'000'000;

/// Ring/field normal form with frozen transcendental atoms. Throws
/// NormalFormTooLarge when the work budget runs out.
CanonForm normalize(const Expr& e, const NormalizeContext& ctx = {});

Expr to_expr(const CanonForm& f);
std::string to_string(const CanonForm& f);

/// NotEqualInNormalForm also covers goals whose normal form is too large to compute.
enum class Verdict { Equal, NotEqualInNormalForm };

std::string_view verdict_name(Verdict v);

/// Equal when a - b normalizes to zero. NotEqualInNormalForm is not a proof
/// of disequality.
Verdict equal(const Expr& a, const Expr& b, const NormalizeContext& ctx = {});

/// Operator count of the goal a = b, for failure diagnostics.
std::size_t op_count_of_goal(const Expr& a, const Expr& b);

}  // namespace odecert::canon
