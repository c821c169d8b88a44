#include "odecert/deriv.hpp"

#include <algorithm>

#include "odecert/errors.hpp"

namespace odecert {

std::string_view shape_name(ConditionShape s) {
  switch (s) {
    case ConditionShape::NonZero: return "nonzero";
    case ConditionShape::Positive: return "positive";
    case ConditionShape::NonNegative: return "nonnegative";
  }
  return "?";
}

std::string SideCondition::to_string() const {
  const char* rel = shape == ConditionShape::NonZero    ? " != 0"
                    : shape == ConditionShape::Positive ? " > 0"
                                                        : " >= 0";
  return odecert::to_string(expr) + rel;
}

std::optional<Rational> exact_constant(const Expr& e) {
  if (e.kind() == Kind::Tuple || !free_symbols(e).empty()) return std::nullopt;
  try {
    auto v = eval(e, {});
    if (v && v->exact()) return v->rational();
  } catch (const Error&) {
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

class Differentiator {
 public:
  Differentiator(const RuleRegistry& rules, const RuleTrace* replay)
      : rules_(rules), replay_(replay) {}

  Expr derive(const Expr& node, const std::vector<std::size_t>& path) {
    if (node.kind() == Kind::State)
      throw ShapeMismatch("derivative body mentions state variable '" + node.name() + "'");
    const Rule* rule = nullptr;
    if (replay_) {
      if (cursor_ >= replay_->size() || (*replay_)[cursor_].path != path)
        throw Error("rule trace does not fit the body");
      rule = rules_.find((*replay_)[cursor_].rule);
      if (!rule || !rule->matches(node))
        throw Error("trace rule '" + (*replay_)[cursor_].rule + "' does not apply");
      ++cursor_;
    } else {
      rule = rules_.match(node);
      if (!rule)
        throw NoRule(node.kind() == Kind::Func ? node.name() : std::string(kind_name(node.kind())));
    }
    std::size_t step = out_.trace.size();
    out_.trace.push_back({rule->id, path});
    RuleContext ctx(*this, node, path, step);
    return rule->derive(node, ctx);
  }

  Derivation finish(Expr derivative) {
    if (replay_ && cursor_ != replay_->size()) throw Error("rule trace has unused steps");
    out_.derivative = std::move(derivative);
    return std::move(out_);
  }

 private:
  friend class RuleContext;
  const RuleRegistry& rules_;
  const RuleTrace* replay_;
  std::size_t cursor_ = 0;
  Derivation out_;
};

Expr RuleContext::derive_child(std::size_t i) {
  auto p = path_;
  p.push_back(i);
  return d_.derive(node_.child(i), p);
}

void RuleContext::require(ConditionShape shape, Expr e) {
  d_.out_.conditions.push_back({shape, std::move(e), d_.out_.trace[step_].rule, step_});
}

// ---------------------------------------------------------------------------

namespace {

Expr num(long v) { return Expr::constant(Rational(v)); }

bool is_kind(const Expr& e, Kind k) { return e.kind() == k; }

Rule unary(std::string id, Kind k, std::function<Expr(const Expr&, RuleContext&)> d) {
  return {std::move(id), [k](const Expr& e) { return is_kind(e, k); }, std::move(d)};
}

Rule function_rule(std::string id, std::string fname,
                   std::function<Expr(const Expr&, RuleContext&)> d) {
  return {std::move(id), [fname](const Expr& e) { return e.is_func(fname); }, std::move(d)};
}

Expr derive_pow(const Expr& e, RuleContext& ctx) {
  const Expr& f = e.child(0);
  const Expr& g = e.child(1);
  if (depends_on_time(g)) {
    // f^g = exp(g ln f)
    Expr df = ctx.derive_child(0);
    Expr dg = ctx.derive_child(1);
    ctx.require(ConditionShape::Positive, f);
    return Expr::mul(e, Expr::add(Expr::mul(dg, Expr::func("ln", f)),
                                  Expr::mul(g, Expr::mul(df, Expr::div(num(1), f)))));
  }
  auto q = exact_constant(g);
  if (q && q->is_zero()) return num(0);
  Expr df = ctx.derive_child(0);
  if (!q || !q->is_integer()) {
    ctx.require(ConditionShape::Positive, f);
  } else if (q->sign() < 0) {
    ctx.require(ConditionShape::NonZero, f);
  }
  return Expr::mul(Expr::mul(g, df), Expr::pow(f, Expr::add(g, Expr::neg(num(1)))));
}

RuleRegistry make_standard() {
  RuleRegistry r;
  r.register_rule({"const",
                   [](const Expr& e) {
                     return is_kind(e, Kind::Const) || is_kind(e, Kind::Param) ||
                            is_kind(e, Kind::Init);
                   },
                   [](const Expr&, RuleContext&) { return num(0); }});
  r.register_rule(unary("id", Kind::Time, [](const Expr&, RuleContext&) { return num(1); }));
  r.register_rule(unary("pair", Kind::Tuple, [](const Expr& e, RuleContext& ctx) {
    std::vector<Expr> items;
    for (std::size_t i = 0; i < e.children().size(); ++i) items.push_back(ctx.derive_child(i));
    return Expr::tuple(std::move(items));
  }));
  r.register_rule(unary("add", Kind::Add, [](const Expr&, RuleContext& ctx) {
    Expr df = ctx.derive_child(0);
    Expr dg = ctx.derive_child(1);
    return Expr::add(df, dg);
  }));
  r.register_rule(unary("neg", Kind::Neg, [](const Expr&, RuleContext& ctx) {
    return Expr::neg(ctx.derive_child(0));
  }));
  r.register_rule(unary("mul", Kind::Mul, [](const Expr& e, RuleContext& ctx) {
    Expr df = ctx.derive_child(0);
    Expr dg = ctx.derive_child(1);
    return Expr::add(Expr::mul(e.child(0), dg), Expr::mul(df, e.child(1)));
  }));
  // -f * (1/g * g' * 1/g) + f'/g, provided g != 0
  r.register_rule(unary("div", Kind::Div, [](const Expr& e, RuleContext& ctx) {
    const Expr& f = e.child(0);
    const Expr& g = e.child(1);
    Expr df = ctx.derive_child(0);
    Expr dg = ctx.derive_child(1);
    ctx.require(ConditionShape::NonZero, g);
    Expr inv = Expr::div(num(1), g);
    return Expr::add(Expr::mul(Expr::neg(f), Expr::mul(Expr::mul(inv, dg), inv)),
                     Expr::div(df, g));
  }));
  r.register_rule(unary("pow", Kind::Pow, derive_pow));
  r.register_rule(function_rule("sin", "sin", [](const Expr& e, RuleContext& ctx) {
    return Expr::mul(ctx.derive_child(0), Expr::func("cos", e.child(0)));
  }));
  r.register_rule(function_rule("cos", "cos", [](const Expr& e, RuleContext& ctx) {
    return Expr::mul(ctx.derive_child(0), Expr::neg(Expr::func("sin", e.child(0))));
  }));
  r.register_rule(function_rule("tan", "tan", [](const Expr& e, RuleContext& ctx) {
    Expr df = ctx.derive_child(0);
    Expr c = Expr::func("cos", e.child(0));
    ctx.require(ConditionShape::NonZero, c);
    return Expr::mul(df, Expr::div(num(1), Expr::pow(c, num(2))));
  }));
  r.register_rule(function_rule("exp", "exp", [](const Expr& e, RuleContext& ctx) {
    return Expr::mul(ctx.derive_child(0), e);
  }));
  r.register_rule(function_rule("ln", "ln", [](const Expr& e, RuleContext& ctx) {
    Expr df = ctx.derive_child(0);
    ctx.require(ConditionShape::Positive, e.child(0));
    return Expr::mul(df, Expr::div(num(1), e.child(0)));
  }));
  r.register_rule(function_rule("arcsin", "arcsin", [](const Expr& e, RuleContext& ctx) {
    Expr df = ctx.derive_child(0);
    Expr radicand = Expr::add(num(1), Expr::neg(Expr::pow(e.child(0), num(2))));
    ctx.require(ConditionShape::Positive, radicand);
    return Expr::mul(df, Expr::div(num(1), Expr::func("sqrt", radicand)));
  }));
  // f' * 1/(2 * sqrt f), provided f > 0
  r.register_rule(function_rule("sqrt", "sqrt", [](const Expr& e, RuleContext& ctx) {
    Expr df = ctx.derive_child(0);
    ctx.require(ConditionShape::Positive, e.child(0));
    return Expr::mul(df, Expr::div(num(1), Expr::mul(num(2), e)));
  }));
  return r;
}

}  // namespace

const RuleRegistry& RuleRegistry::standard() {
  static const RuleRegistry registry = make_standard();
  return registry;
}

void RuleRegistry::register_rule(Rule rule) {
  if (find(rule.id)) throw DuplicateRule(rule.id);
  rules_.push_back(std::move(rule));
}

bool RuleRegistry::remove_rule(std::string_view id) {
  auto it = std::find_if(rules_.begin(), rules_.end(), [&](const Rule& r) { return r.id == id; });
  if (it == rules_.end()) return false;
  rules_.erase(it);
  return true;
}

const Rule* RuleRegistry::find(std::string_view id) const {
  for (const auto& r : rules_)
    if (r.id == id) return &r;
  return nullptr;
}

const Rule* RuleRegistry::match(const Expr& node) const {
  for (const auto& r : rules_)
    if (r.matches(node)) return &r;
  return nullptr;
}

std::vector<std::string> RuleRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& r : rules_) out.push_back(r.id);
  return out;
}

Rule chain_rule(std::string id, std::string name, Expr outer,
                std::vector<std::pair<ConditionShape, Expr>> conditions) {
  auto matches = [name](const Expr& e) { return e.is_func(name); };
  auto derive = [outer, conditions](const Expr& e, RuleContext& ctx) {
    std::map<Symbol, Expr> at{{Symbol::param("u"), e.child(0)}};
    Expr df = ctx.derive_child(0);
    for (const auto& [shape, c] : conditions) ctx.require(shape, substitute(c, at));
    return Expr::mul(df, substitute(outer, at));
  };
  return {std::move(id), std::move(matches), std::move(derive)};
}

Derivation differentiate(const Expr& body, const RuleRegistry& rules) {
  Differentiator d(rules, nullptr);
  Expr result = d.derive(body, {});
  return d.finish(std::move(result));
}

Expr replay(const Expr& body, const RuleTrace& trace, const RuleRegistry& rules) {
  Differentiator d(rules, &trace);
  Expr result = d.derive(body, {});
  return d.finish(std::move(result)).derivative;
}

// ---------------------------------------------------------------------------

namespace {

void scan(const Expr& e, std::vector<SideCondition>& out) {
  auto add = [&](ConditionShape s, Expr x) { out.push_back({s, std::move(x), "structure", 0}); };
  switch (e.kind()) {
    case Kind::Div: add(ConditionShape::NonZero, e.child(1)); break;
    case Kind::Func:
      if (e.name() == "sqrt") add(ConditionShape::NonNegative, e.child(0));
      if (e.name() == "ln") add(ConditionShape::Positive, e.child(0));
      if (e.name() == "arcsin")
        add(ConditionShape::NonNegative,
            Expr::add(num(1), Expr::neg(Expr::pow(e.child(0), num(2)))));
      if (e.name() == "tan") add(ConditionShape::NonZero, Expr::func("cos", e.child(0)));
      break;
    case Kind::Pow: {
      auto q = exact_constant(e.child(1));
      if (q && q->is_integer()) {
        if (q->sign() < 0) add(ConditionShape::NonZero, e.child(0));
      } else if (q && q->sign() > 0) {
        add(ConditionShape::NonNegative, e.child(0));
      } else {
        add(ConditionShape::Positive, e.child(0));
      }
      break;
    }
    default: break;
  }
  for (const auto& c : e.children()) scan(c, out);
}

}  // namespace

std::vector<SideCondition> structural_conditions(const Expr& e) {
  std::vector<SideCondition> out;
  scan(e, out);
  return out;
}

}  // namespace odecert
