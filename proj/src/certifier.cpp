#include "odecert/certifier.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "odecert/errors.hpp"

namespace odecert {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Top-level comma split (commas inside parentheses stay).
std::vector<std::pair<std::string, std::size_t>> split_top(std::string_view s) {
  std::vector<std::pair<std::string, std::size_t>> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i < s.size() && s[i] == '(') ++depth;
    if (i < s.size() && s[i] == ')') --depth;
    if (i == s.size() || (s[i] == ',' && depth == 0)) {
      out.emplace_back(std::string(s.substr(start, i - start)), start);
      start = i + 1;
    }
  }
  return out;
}

Expr parse_at(std::string_view text, std::size_t offset, const ParseContext& ctx) {
  try {
    return parse_expr(text, ctx);
  } catch (const SyntaxError& e) {
    throw SyntaxError(offset + e.position(), e.expected());
  }
}

}  // namespace

// ---------------------------------------------------------------------------

Assumption Assumption::parse(std::string_view text, const ParseContext& ctx) {
  static const char* ops[] = {">=", "<=", "!=", ">", "<"};
  std::size_t at = std::string_view::npos;
  std::string op;
  for (const char* o : ops) {
    auto p = text.find(o);
    if (p != std::string_view::npos && (at == std::string_view::npos || p < at ||
                                        (p == at && std::string(o).size() > op.size()))) {
      at = p;
      op = o;
    }
  }
  if (at == std::string_view::npos) throw SyntaxError(text.size(), "comparison operator");
  Expr lhs = parse_at(text.substr(0, at), 0, ctx);
  Expr rhs = parse_at(text.substr(at + op.size()), at + op.size(), ctx);
  Assumption a;
  a.text = trim(text);
  if (op == ">") a.shape = ConditionShape::Positive, a.expr = build::sub(lhs, rhs);
  if (op == "<") a.shape = ConditionShape::Positive, a.expr = build::sub(rhs, lhs);
  if (op == ">=") a.shape = ConditionShape::NonNegative, a.expr = build::sub(lhs, rhs);
  if (op == "<=") a.shape = ConditionShape::NonNegative, a.expr = build::sub(rhs, lhs);
  if (op == "!=") a.shape = ConditionShape::NonZero, a.expr = build::sub(lhs, rhs);
  if (depends_on_time(a.expr) || contains_state(a.expr))
    throw ShapeMismatch("assumption '" + a.text + "' mentions t or a state variable");
  return a;
}

std::vector<Assumption> parse_assumptions(const std::vector<std::string>& texts,
                                          const ParseContext& ctx) {
  std::vector<Assumption> out;
  for (const auto& t : texts) out.push_back(Assumption::parse(t, ctx));
  return out;
}

const Expr* Solution::binding(std::string_view var) const {
  for (const auto& [v, e] : bindings)
    if (v == var) return &e;
  return nullptr;
}

std::string Solution::to_string() const {
  std::string out;
  for (const auto& [v, e] : bindings) {
    if (!out.empty()) out += ", ";
    out += v + " = " + odecert::to_string(e);
  }
  return out;
}

Solution parse_solution(std::string_view text, const OdeSystem& sys) {
  Solution sol;
  ParseContext ctx = sys.context();
  for (const auto& [clause, offset] : split_top(text)) {
    auto eq = clause.find('=');
    if (eq == std::string::npos) throw SyntaxError(offset + clause.size(), "'='");
    std::string var = trim(clause.substr(0, eq));
    if (var.empty()) throw SyntaxError(offset, "state variable name");
    if (!sys.declares(var)) throw ShapeMismatch("'" + var + "' is not a state variable");
    if (sol.binding(var)) throw ShapeMismatch("'" + var + "' bound twice");
    Expr e = parse_at(std::string_view(clause).substr(eq + 1), offset + eq + 1, ctx);
    if (contains_state(e)) throw ShapeMismatch("binding for '" + var + "' mentions a state variable");
    sol.bindings.emplace_back(var, std::move(e));
  }
  return sol;
}

std::string_view disposition_name(Disposition d) {
  switch (d) {
    case Disposition::DischargedArithmetic: return "DischargedArithmetic";
    case Disposition::DischargedByAssumption: return "DischargedByAssumption";
    case Disposition::DischargedByDomain: return "DischargedByDomain";
    case Disposition::Unresolved: return "Unresolved";
  }
  return "?";
}

std::string_view range_name(RangeVerdict r) { return r == RangeVerdict::Holds ? "Holds" : "Unresolved"; }

std::string_view status_name(Status s) {
  switch (s) {
    case Status::Certified: return "Certified";
    case Status::ConditionallyCertified: return "ConditionallyCertified";
    case Status::Failed: return "Failed";
  }
  return "?";
}

std::vector<const ConditionRecord*> Certificate::unresolved() const {
  std::vector<const ConditionRecord*> out;
  for (const auto& c : conditions)
    if (c.discharge.disposition == Disposition::Unresolved) out.push_back(&c);
  return out;
}

std::string Certificate::summary() const {
  std::ostringstream os;
  os << status_name(status);
  if (!reason.empty()) os << " (" << reason << ")";
  for (const auto* c : unresolved()) os << "\n  unresolved: " << c->condition.to_string();
  if (range == RangeVerdict::Unresolved) os << "\n  range: Unresolved";
  return os.str();
}

// ---------------------------------------------------------------------------

namespace {

bool holds(ConditionShape shape, const Interval& i) {
  if (i.maybe_undefined || i.empty()) return false;
  switch (shape) {
    case ConditionShape::NonZero: return i.nonzero();
    case ConditionShape::Positive: return i.positive();
    case ConditionShape::NonNegative: return i.nonnegative();
  }
  return false;
}

bool holds(ConditionShape shape, const Rational& c) {
  switch (shape) {
    case ConditionShape::NonZero: return c.sign() != 0;
    case ConditionShape::Positive: return c.sign() > 0;
    case ConditionShape::NonNegative: return c.sign() >= 0;
  }
  return false;
}

void intersect(Interval& into, const Interval& with) {
  if (with.lo > into.lo || (with.lo == into.lo && with.lo_open)) into.lo = with.lo, into.lo_open = with.lo_open;
  if (with.hi < into.hi || (with.hi == into.hi && with.hi_open)) into.hi = with.hi, into.hi_open = with.hi_open;
}

// k*s + c with s a single symbol, from the canonical form.
std::optional<std::pair<Symbol, Interval>> symbol_bound(const Assumption& a) {
  if (a.shape == ConditionShape::NonZero) return std::nullopt;
  canon::RatFunc f = canon::normalize(a.expr);
  if (!f.den().is_constant()) return std::nullopt;
  const auto& terms = f.num().terms();
  std::optional<Rational> k;
  Rational c = 0;
  std::optional<Symbol> sym;
  for (const auto& [m, coeff] : terms) {
    if (m.empty()) {
      c = coeff;
    } else if (m.size() == 1 && m[0].second == 1 && m[0].first->tag == canon::Var::Tag::Symbol && !k) {
      k = coeff;
      sym = m[0].first->expr.as_symbol();
    } else {
      return std::nullopt;
    }
  }
  if (!k) return std::nullopt;
  Interval bound = Interval::of(-c / *k);
  Interval out;
  bool strict = a.shape == ConditionShape::Positive;
  if (k->sign() > 0) {
    out.lo = bound.lo;
    out.lo_open = strict;
  } else {
    out.hi = bound.hi;
    out.hi_open = strict;
  }
  return std::make_pair(*sym, out);
}

}  // namespace

Box assumption_box(const IntervalSpec& domain, const std::vector<Assumption>& assumptions) {
  Box box;
  for (const auto& a : assumptions) {
    if (auto b = symbol_bound(a)) {
      auto [it, fresh] = box.emplace(b->first, b->second);
      if (!fresh) intersect(it->second, b->second);
    }
  }
  box[Symbol::time()] = domain.enclose(box);
  return box;
}

Discharge discharge(const SideCondition& c, const IntervalSpec& domain,
                    const std::vector<Assumption>& assumptions) {
  std::optional<canon::RatFunc> f;
  try {
    f = canon::normalize(c.expr);
  } catch (const NormalFormTooLarge&) {
  }
  if (auto k = f ? f->constant() : std::nullopt; k && holds(c.shape, *k))
    return {Disposition::DischargedArithmetic, {}};
  for (const auto& a : assumptions) {
    if (!f) break;
    canon::RatFunc g = canon::normalize(a.expr);
    if (g.is_zero() || f->is_zero()) continue;
    auto r = (*f / g).constant();
    if (!r) continue;
    bool ok = false;
    switch (a.shape) {
      case ConditionShape::Positive:
        ok = r->sign() > 0 || c.shape == ConditionShape::NonZero;
        break;
      case ConditionShape::NonNegative:
        ok = r->sign() > 0 && c.shape == ConditionShape::NonNegative;
        break;
      case ConditionShape::NonZero: ok = c.shape == ConditionShape::NonZero; break;
    }
    if (ok) return {Disposition::DischargedByAssumption, a.text};
  }
  Box box = assumption_box(domain, assumptions);
  Interval direct = enclose(c.expr, box);
  if (!direct.maybe_undefined && !direct.empty()) {
    if (holds(c.shape, direct)) return {Disposition::DischargedByDomain, {}};
    if (f && holds(c.shape, enclose(canon::to_expr(*f), box))) return {Disposition::DischargedByDomain, {}};
  }
  return {};
}

RangeVerdict check_range(const Solution& sol, const std::vector<Assumption>& assumptions) {
  if (sol.codomain.empty()) return RangeVerdict::Holds;
  Box box = assumption_box(sol.domain, assumptions);
  for (const auto& [var, spec] : sol.codomain) {
    if (spec.is_whole()) continue;
    const Expr* b = sol.binding(var);
    if (!b) return RangeVerdict::Unresolved;
    Interval image = enclose(*b, box);
    if (image.maybe_undefined || !image.within(spec.enclose(box))) return RangeVerdict::Unresolved;
  }
  return RangeVerdict::Holds;
}

Certificate certify(const OdeSystem& sys, const Solution& sol,
                    const std::vector<Assumption>& assumptions) {
  std::set<std::string> bound;
  for (const auto& [v, e] : sol.bindings) {
    if (!sys.declares(v)) throw ShapeMismatch("binding for undeclared variable '" + v + "'");
    if (!bound.insert(v).second) throw ShapeMismatch("variable '" + v + "' bound twice");
    if (contains_state(e)) throw ShapeMismatch("binding for '" + v + "' mentions a state variable");
  }
  if (bound.size() != sys.size()) throw ShapeMismatch("solution does not bind every state variable");

  std::map<Symbol, Expr> subst;
  for (const auto& [v, e] : sol.bindings) subst.emplace(Symbol::state(v), e);

  Certificate cert;
  auto add_condition = [&](SideCondition c, const std::string& var) {
    for (const auto& r : cert.conditions)
      if (r.condition.same_obligation(c)) return;
    cert.conditions.push_back({std::move(c), var, {}});
  };

  for (const auto& eq : sys.equations()) {
    ComponentRecord comp;
    comp.var = eq.var;
    comp.binding = *sol.binding(eq.var);
    comp.expected = substitute(eq.rhs, subst);
    try {
      Derivation d = differentiate(comp.binding);
      comp.computed = d.derivative;
      comp.trace = std::move(d.trace);
      for (auto& c : d.conditions) add_condition(std::move(c), eq.var);
    } catch (const NoRule&) {
      comp.failure = "no-derivative-rule";
    }
    for (auto& c : structural_conditions(comp.binding)) add_condition(std::move(c), eq.var);
    for (auto& c : structural_conditions(comp.expected)) add_condition(std::move(c), eq.var);
    cert.components.push_back(std::move(comp));
  }

  canon::NormalizeContext ctx;
  for (const auto& a : assumptions)
    if (a.shape != ConditionShape::NonZero) ctx.assume_nonnegative(a.expr);
  for (const auto& r : cert.conditions)
    if (r.condition.shape != ConditionShape::NonZero) ctx.assume_nonnegative(r.condition.expr);
  if (sol.domain.enclose(assumption_box(IntervalSpec::whole(), assumptions)).nonnegative())
    ctx.assume_nonnegative(Expr::time());

  for (auto& comp : cert.components) {
    if (!comp.computed) continue;
    comp.goal_ops = canon::op_count_of_goal(*comp.computed, comp.expected);
    comp.verdict = canon::equal(*comp.computed, comp.expected, ctx);
    if (comp.verdict != canon::Verdict::Equal) comp.failure = "not-equal-in-normal-form";
  }

  std::set<std::string> used;
  for (auto& r : cert.conditions) {
    r.discharge = discharge(r.condition, sol.domain, assumptions);
    if (!r.discharge.assumption.empty() && used.insert(r.discharge.assumption).second)
      cert.assumptions_used.push_back(r.discharge.assumption);
  }
  cert.range = check_range(sol, assumptions);

  for (const auto& comp : cert.components) {
    if (comp.failure.empty()) continue;
    cert.status = Status::Failed;
    cert.reason = comp.failure == "no-derivative-rule" ? "no-derivative-rule" : "algebraic-goal-too-large";
    return cert;
  }
  bool open = !cert.unresolved().empty() || cert.range == RangeVerdict::Unresolved;
  cert.status = open ? Status::ConditionallyCertified : Status::Certified;
  return cert;
}

std::pair<OdeSystem, Solution> project(const OdeSystem& sys, const Solution& sol, std::size_t i) {
  const Equation& eq = sys.equations().at(i);
  std::map<Symbol, Expr> others;
  for (const auto& [v, e] : sol.bindings)
    if (v != eq.var) others.emplace(Symbol::state(v), e);
  OdeSystem one({Equation{eq.var, substitute(eq.rhs, others)}});
  Solution s;
  s.bindings.emplace_back(eq.var, *sol.binding(eq.var));
  s.domain = sol.domain;
  if (auto it = sol.codomain.find(eq.var); it != sol.codomain.end()) s.codomain.insert(*it);
  return {std::move(one), std::move(s)};
}

}  // namespace odecert
