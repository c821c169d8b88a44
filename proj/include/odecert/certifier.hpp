#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "odecert/canon.hpp"
#include "odecert/deriv.hpp"
#include "odecert/interval.hpp"
#include "odecert/parser.hpp"

namespace odecert {

/// A fact about parameters and initial constants, e.g. "b>0".
struct Assumption {
  ConditionShape shape = ConditionShape::Positive;
  Expr expr;
  std::string text;

  /// Accepts "e>0", "e>=0", "e!=0", "e<0", "e<=0" and general "a>b" style
  /// comparisons (moved to one side). Throws SyntaxError, or ShapeMismatch
  /// if the expression mentions t or a state variable.
  static Assumption parse(std::string_view text, const ParseContext& ctx = {});
};

std::vector<Assumption> parse_assumptions(const std::vector<std::string>& texts,
                                          const ParseContext& ctx = {});

struct Solution {
  std::vector<std::pair<std::string, Expr>> bindings;  // in equation order
  IntervalSpec domain;                                 // T
  std::map<std::string, IntervalSpec> codomain;        // D; missing entries are unbounded

  const Expr* binding(std::string_view var) const;
  /// "x = t^2/2 + x0, y = ..." style rendering.
  std::string to_string() const;
};

/// Parses "x = <expr>, y = <expr>" against the system's state variables.
Solution parse_solution(std::string_view text, const OdeSystem& sys);

enum class Disposition { DischargedArithmetic, DischargedByAssumption, DischargedByDomain, Unresolved };
enum class RangeVerdict { Holds, Unresolved };
enum class Status { Certified, ConditionallyCertified, Failed };

std::string_view disposition_name(Disposition d);
std::string_view range_name(RangeVerdict r);
std::string_view status_name(Status s);

struct Discharge {
  Disposition disposition = Disposition::Unresolved;
  std::string assumption;  // text of the matching assumption
};

struct ConditionRecord {
  SideCondition condition;
  std::string component;  // state variable whose binding emitted it
  Discharge discharge;
};

struct ComponentRecord {
  std::string var;
  Expr binding;
  Expr expected;  // rhs with state variables replaced by bindings
  std::optional<Expr> computed;
  canon::Verdict verdict = canon::Verdict::NotEqualInNormalForm;
  RuleTrace trace;
  std::size_t goal_ops = 0;
  std::string failure;  // empty, "no-derivative-rule" or "not-equal-in-normal-form"
};

struct Certificate {
  Status status = Status::Failed;
  std::vector<ComponentRecord> components;
  std::vector<ConditionRecord> conditions;
  RangeVerdict range = RangeVerdict::Holds;
  std::vector<std::string> assumptions_used;
  std::string reason;  // first failure reason, empty when not Failed

  std::vector<const ConditionRecord*> unresolved() const;
  std::string summary() const;
};

/// Goal size above which a failed equality is attributed to the goal's size.
inline constexpr std::size_t kLargeGoalOps = 50;

Certificate certify(const OdeSystem& sys, const Solution& sol,
                    const std::vector<Assumption>& assumptions = {});

/// Box of parameter/initial-constant bounds implied by single-symbol
/// assumptions, plus t ranging over T.
Box assumption_box(const IntervalSpec& domain, const std::vector<Assumption>& assumptions);

Discharge discharge(const SideCondition& c, const IntervalSpec& domain,
                    const std::vector<Assumption>& assumptions);

RangeVerdict check_range(const Solution& sol, const std::vector<Assumption>& assumptions = {});

/// The one-dimensional system x_i' = rhs_i with the other state variables
/// replaced by their bindings, paired with the i-th binding.
std::pair<OdeSystem, Solution> project(const OdeSystem& sys, const Solution& sol, std::size_t i);

}  // namespace odecert
