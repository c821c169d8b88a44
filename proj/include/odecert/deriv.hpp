#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "odecert/expr.hpp"

namespace odecert {

enum class ConditionShape { NonZero, Positive, NonNegative };

std::string_view shape_name(ConditionShape s);

/// A definedness proviso emitted by a rule application, e.g. g != 0 for a
/// quotient or f > 0 under a square root.
struct SideCondition {
  ConditionShape shape = ConditionShape::NonZero;
  Expr expr;
  std::string rule;             // id of the emitting rule ("structure" for scans)
  std::size_t trace_index = 0;  // position of that rule application in the trace

  /// "6 != 0", "t > 0", "1 - t^2 >= 0".
  std::string to_string() const;
  bool same_obligation(const SideCondition& o) const {
    return shape == o.shape && expr == o.expr;
  }
};

struct TraceStep {
  std::string rule;
  std::vector<std::size_t> path;  // child indices from the body's root

  friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

using RuleTrace = std::vector<TraceStep>;

struct Derivation {
  Expr derivative;
  std::vector<SideCondition> conditions;
  RuleTrace trace;
};

class RuleContext;
class Differentiator;

/// One derivative-introduction law. `derive` receives the matched node and a
/// context through which it differentiates sub-terms and records provisos.
struct Rule {
  std::string id;
  std::function<bool(const Expr&)> matches;
  std::function<Expr(const Expr&, RuleContext&)> derive;
};

class RuleContext {
 public:
  /// Derivative of the i-th child of the node being rewritten.
  Expr derive_child(std::size_t i);
  void require(ConditionShape shape, Expr e);

 private:
  friend class Differentiator;
  RuleContext(Differentiator& d, const Expr& node, std::vector<std::size_t> path, std::size_t step)
      : d_(d), node_(node), path_(std::move(path)), step_(step) {}
  Differentiator& d_;
  const Expr& node_;
  std::vector<std::size_t> path_;
  std::size_t step_;
};

/// Ordered rule set; the first matching rule wins.
class RuleRegistry {
 public:
  RuleRegistry() = default;

  /// const, id, pair, add, neg, mul, div, pow, sin, cos, tan, exp, ln,
  /// arcsin, sqrt.
  static const RuleRegistry& standard();

  /// Throws DuplicateRule.
  void register_rule(Rule rule);
  bool remove_rule(std::string_view id);
  const Rule* find(std::string_view id) const;
  const Rule* match(const Expr& node) const;
  std::vector<std::string> ids() const;

 private:
  std::vector<Rule> rules_;
};

/// Chain rule for a unary function `name`: d name(f) = f' * outer, where
/// `outer` is written over the placeholder parameter `u` standing for f.
/// Conditions are also written over `u`.
Rule chain_rule(std::string id, std::string name, Expr outer,
                std::vector<std::pair<ConditionShape, Expr>> conditions = {});

/// Differentiates a closed-form body in t by structural recursion, emitting
/// unsimplified derivative terms. Throws NoRule when no rule matches a node
/// and ShapeMismatch when the body still mentions a state variable.
Derivation differentiate(const Expr& body, const RuleRegistry& rules = RuleRegistry::standard());

/// Re-derives using exactly the recorded rule at each step. Throws Error if
/// the trace does not fit the body.
Expr replay(const Expr& body, const RuleTrace& trace,
            const RuleRegistry& rules = RuleRegistry::standard());

/// Definedness provisos of an expression read off its structure: divisors,
/// sqrt/ln/arcsin arguments, tangent poles and non-integer powers.
std::vector<SideCondition> structural_conditions(const Expr& e);

/// Exact value of a closed numeric sub-term (no symbols), when rational.
std::optional<Rational> exact_constant(const Expr& e);

}  // namespace odecert
