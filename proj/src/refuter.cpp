#include "odecert/refuter.hpp"

#include <cmath>
#include <sstream>

#include "odecert/errors.hpp"

namespace odecert {

namespace {

class Sampler {
 public:
  Sampler(std::uint64_t seed, const IntervalSpec& domain) : rng_(seed), domain_(domain) {
    Interval box = domain.enclose();
    lo_ = std::max(box.lo, -10.0);
    hi_ = std::min(box.hi, 10.0);
  }

  // Half uniform on [-10,10], half log-uniform magnitudes 1e-3..10 with a random sign.
  double mixture() {
    std::uniform_real_distribution<double> u(0, 1);
    if (u(rng_) < 0.5) return -10 + 20 * u(rng_);
    double mag = std::pow(10.0, -3 + 4 * u(rng_));
    return u(rng_) < 0.5 ? -mag : mag;
  }

  double time() {
    std::uniform_real_distribution<double> u(0, 1);
    if (lo_ < hi_ && u(rng_) < 0.5) return lo_ + (hi_ - lo_) * u(rng_);
    return mixture();
  }

  Valuation draw(const std::set<Symbol>& symbols) {
    Valuation v;
    for (const auto& s : symbols)
      v[s] = Rational(mpq_class(s.kind == Kind::Time ? time() : mixture()));
    if (!v.contains(Symbol::time())) v[Symbol::time()] = Rational(mpq_class(time()));
    return v;
  }

 private:
  std::mt19937_64 rng_;
  IntervalSpec domain_;
  double lo_, hi_;
};

bool holds(const SideCondition& c, const Valuation& v, double margin) {
  auto x = eval(c.expr, v, {margin});
  if (!x) return false;
  Real r = x->real();
  switch (c.shape) {
    case ConditionShape::NonZero: return abs(r) >= margin;
    case ConditionShape::Positive:
    case ConditionShape::NonNegative: return r >= margin;
  }
  return false;
}

bool in_domain(const IntervalSpec& d, const Valuation& v, double margin) {
  Real tv = Real(v.at(Symbol::time()).to_double());
  if (d.lo) {
    auto lo = eval(*d.lo, v);
    if (!lo || tv < lo->real() + margin) return false;
  }
  if (d.hi) {
    auto hi = eval(*d.hi, v);
    if (!hi || tv > hi->real() - margin) return false;
  }
  return true;
}

void collect(const Expr& e, std::set<Symbol>& out) {
  for (const auto& s : free_symbols(e)) {
    if (s.kind == Kind::State) throw ShapeMismatch("cannot sample state variable '" + s.name + "'");
    out.insert(s);
  }
}

Expr replace_at(const Expr& e, const std::vector<std::size_t>& path, std::size_t depth, const Expr& with) {
  if (depth == path.size()) return with;
  std::vector<Expr> kids = e.children();
  kids[path[depth]] = replace_at(kids[path[depth]], path, depth + 1, with);
  switch (e.kind()) {
    case Kind::Neg: return Expr::neg(kids[0]);
    case Kind::Add: return Expr::add(kids[0], kids[1]);
    case Kind::Mul: return Expr::mul(kids[0], kids[1]);
    case Kind::Div: return Expr::div(kids[0], kids[1]);
    case Kind::Pow: return Expr::pow(kids[0], kids[1]);
    case Kind::Func: return Expr::func(e.name(), kids[0]);
    case Kind::Tuple: return Expr::tuple(kids);
    default: return e;
  }
}

void mutations(const Expr& root, const Expr& e, std::vector<std::size_t>& path, std::vector<Expr>& out) {
  if (e.is_const()) {
    out.push_back(replace_at(root, path, 0, Expr::constant(e.value() + Rational(1))));
    Rational down = e.value() - Rational(1);
    out.push_back(replace_at(root, path, 0, build::num(down)));
  } else if (e.kind() == Kind::Add) {
    out.push_back(replace_at(root, path, 0, Expr::mul(e.child(0), e.child(1))));
  } else if (e.kind() == Kind::Mul) {
    out.push_back(replace_at(root, path, 0, Expr::add(e.child(0), e.child(1))));
  }
  for (std::size_t i = 0; i < e.children().size(); ++i) {
    path.push_back(i);
    mutations(root, e.child(i), path, out);
    path.pop_back();
  }
}

}  // namespace

std::string Counterexample::to_string() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& [s, q] : valuation) {
    os << (first ? "" : ", ") << s.name << " = " << q.to_double();
    first = false;
  }
  os.precision(12);
  os << ": " << static_cast<double>(lhs) << " vs " << static_cast<double>(rhs) << " (relative gap " << rel_gap
     << ")";
  return os.str();
}

Refutation refute_equality(const Expr& a, const Expr& b, const std::vector<SideCondition>& constraints,
                           const RefuteOptions& opts, const IntervalSpec& domain) {
  if (opts.trials < 1) throw std::invalid_argument("trials must be at least 1");
  std::set<Symbol> symbols;
  collect(a, symbols);
  collect(b, symbols);
  for (const auto& c : constraints) collect(c.expr, symbols);
  if (domain.lo) collect(*domain.lo, symbols);
  if (domain.hi) collect(*domain.hi, symbols);

  Refutation res;
  res.seed = opts.seed;
  Sampler sampler(opts.seed, domain);
  const long budget = 10L * opts.trials;
  for (long draw = 0; draw < budget && res.trials < opts.trials; ++draw) {
    Valuation v = sampler.draw(symbols);
    if (!in_domain(domain, v, opts.margin)) continue;
    bool ok = true;
    for (const auto& c : constraints)
      if (!(ok = holds(c, v, opts.margin))) break;
    if (!ok) continue;
    auto va = eval(a, v, {opts.margin});
    auto vb = eval(b, v, {opts.margin});
    if (!va || !vb) continue;
    ++res.trials;
    Real la = va->real(), lb = vb->real();
    Real gap = abs(la - lb);
    Real scale = std::max<Real>({Real(abs(la)), Real(abs(lb)), Real(1)});
    double rel = static_cast<double>(gap / scale);
    if (rel > opts.threshold) {
      res.counterexample = Counterexample{v, la, lb, static_cast<double>(gap), rel, res.trials - 1};
      return res;
    }
  }
  if (res.trials == 0) throw Unsatisfiable("every sample violated a constraint or left a side undefined");
  return res;
}

std::vector<ComponentRefutation> refute_solution(const OdeSystem& sys, const Solution& sol,
                                                 const std::vector<Assumption>& assumptions,
                                                 const RefuteOptions& opts) {
  std::map<Symbol, Expr> subst;
  for (const auto& [v, e] : sol.bindings) subst.emplace(Symbol::state(v), e);
  std::vector<SideCondition> base;
  for (const auto& a : assumptions) base.push_back({a.shape, a.expr, "assume", 0});

  std::vector<ComponentRefutation> out;
  std::uint64_t seed = opts.seed;
  for (const auto& eq : sys.equations()) {
    const Expr* b = sol.binding(eq.var);
    if (!b) throw ShapeMismatch("solution does not bind '" + eq.var + "'");
    Derivation d = differentiate(*b);
    Expr expected = substitute(eq.rhs, subst);
    std::vector<SideCondition> cs = base;
    cs.insert(cs.end(), d.conditions.begin(), d.conditions.end());
    for (const auto& c : structural_conditions(*b)) cs.push_back(c);
    for (const auto& c : structural_conditions(expected)) cs.push_back(c);
    RefuteOptions o = opts;
    o.seed = seed++;
    out.push_back({eq.var, refute_equality(d.derivative, expected, cs, o, sol.domain)});
  }
  return out;
}

bool any_found(const std::vector<ComponentRefutation>& r) {
  return std::any_of(r.begin(), r.end(), [](const auto& c) { return c.result.found(); });
}

std::vector<InitialValueCheck> refute_initial_values(const Solution& sol, const RefuteOptions& opts) {
  std::vector<InitialValueCheck> out;
  std::uint64_t seed = opts.seed;
  for (const auto& [var, e] : sol.bindings) {
    InitialValueCheck c;
    c.var = var;
    Expr at0 = substitute(e, {{Symbol::time(), Expr::constant(Rational(0))}});
    RefuteOptions o = opts;
    o.seed = seed++;
    try {
      c.result = refute_equality(at0, Expr::init(var + "0"), structural_conditions(at0), o);
    } catch (const Unsatisfiable&) {
      c.undefined = true;
    }
    out.push_back(std::move(c));
  }
  return out;
}

bool any_violated(const std::vector<InitialValueCheck>& r) {
  return std::any_of(r.begin(), r.end(), [](const auto& c) { return c.violated(); });
}

std::vector<Expr> single_node_mutations(const Expr& e) {
  std::vector<Expr> out;
  std::vector<std::size_t> path;
  mutations(e, e, path, out);
  return out;
}

std::optional<Solution> mutate_solution(const Solution& sol, std::mt19937_64& rng) {
  std::vector<std::pair<std::size_t, Expr>> all;
  for (std::size_t i = 0; i < sol.bindings.size(); ++i)
    for (auto& m : single_node_mutations(sol.bindings[i].second)) all.emplace_back(i, std::move(m));
  if (all.empty()) return std::nullopt;
  auto& [i, m] = all[std::uniform_int_distribution<std::size_t>(0, all.size() - 1)(rng)];
  Solution out = sol;
  out.bindings[i].second = m;
  return out;
}

}  // namespace odecert
