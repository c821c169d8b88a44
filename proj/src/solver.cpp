#include "odecert/solver.hpp"

#include <chrono>
#include <cstdlib>
#include <functional>

#include "json.hpp"

#include "odecert/errors.hpp"

namespace odecert {

using build::num;

namespace {

Expr canon_expr(const Expr& e) {
  try {
    return canon::to_expr(canon::normalize(e));
  } catch (const NormalFormTooLarge&) {
    return e;
  }
}

bool canon_zero(const Expr& e) { return canon::equal(e, num(0)) == canon::Verdict::Equal; }
bool same(const Expr& a, const Expr& b) { return canon::equal(a, b) == canon::Verdict::Equal; }

Expr t() { return Expr::time(); }

// ---------------------------------------------------------------------------
// Integration

// coef * t^power * kernel, with coef and power free of t.
struct Term {
  Expr coef;
  Expr power;
  std::optional<Expr> kernel;
};

using Terms = std::vector<Term>;
constexpr std::size_t kMaxTerms = 64;

Expr merge_kernels(const Expr& a, const Expr& b) {
  return Expr::func("exp", build::add(a.child(0), b.child(0)));
}

std::optional<Terms> expand(const Expr& e);

std::optional<Terms> product(const Terms& a, const Terms& b) {
  if (a.size() * b.size() > kMaxTerms) return std::nullopt;
  Terms out;
  for (const auto& x : a)
    for (const auto& y : b) {
      Term z{build::mul(x.coef, y.coef), build::add(x.power, y.power), x.kernel};
      if (x.kernel && y.kernel) {
        if (!x.kernel->is_func("exp") || !y.kernel->is_func("exp")) return std::nullopt;
        z.kernel = merge_kernels(*x.kernel, *y.kernel);
      } else if (y.kernel) {
        z.kernel = y.kernel;
      }
      out.push_back(std::move(z));
    }
  return out;
}

std::optional<Terms> expand(const Expr& e) {
  if (!depends_on_time(e)) return Terms{{e, num(0), std::nullopt}};
  switch (e.kind()) {
    case Kind::Time: return Terms{{num(1), num(1), std::nullopt}};
    case Kind::Neg: {
      auto a = expand(e.child(0));
      if (!a) return std::nullopt;
      for (auto& x : *a) x.coef = build::neg(x.coef);
      return a;
    }
    case Kind::Add: {
      auto a = expand(e.child(0)), b = expand(e.child(1));
      if (!a || !b || a->size() + b->size() > kMaxTerms) return std::nullopt;
      a->insert(a->end(), b->begin(), b->end());
      return a;
    }
    case Kind::Mul: {
      auto a = expand(e.child(0)), b = expand(e.child(1));
      if (!a || !b) return std::nullopt;
      return product(*a, *b);
    }
    case Kind::Div: {
      auto a = expand(e.child(0));
      if (!a) return std::nullopt;
      const Expr& d = e.child(1);
      if (!depends_on_time(d)) {
        for (auto& x : *a) x.coef = build::div(x.coef, d);
        return a;
      }
      auto b = expand(d);
      if (b && b->size() == 1 && !b->front().kernel) {
        for (auto& x : *a) {
          x.coef = build::div(x.coef, b->front().coef);
          x.power = build::sub(x.power, b->front().power);
        }
        return a;
      }
      return product(*a, Terms{{num(1), num(0), Expr::pow(d, num(-1))}});
    }
    case Kind::Pow: {
      const Expr& base = e.child(0);
      const Expr& ex = e.child(1);
      if (!depends_on_time(ex)) {
        if (base.kind() == Kind::Time) return Terms{{num(1), ex, std::nullopt}};
        auto q = exact_constant(ex);
        if (q && q->is_integer() && q->sign() > 0 && *q <= Rational(8)) {
          auto b = expand(base);
          if (b && std::all_of(b->begin(), b->end(), [](const Term& x) { return !x.kernel; })) {
            Terms acc{{num(1), num(0), std::nullopt}};
            for (long i = 0; i < *q->to_long(); ++i) {
              auto next = product(acc, *b);
              if (!next) return std::nullopt;
              acc = std::move(*next);
            }
            return acc;
          }
        }
      }
      return Terms{{num(1), num(0), e}};
    }
    case Kind::Func: return Terms{{num(1), num(0), e}};
    default: return std::nullopt;
  }
}

// alpha*t + beta with alpha nonzero.
std::optional<std::pair<Expr, Expr>> linear(const Expr& u) {
  auto terms = expand(u);
  if (!terms) return std::nullopt;
  Expr alpha = num(0), beta = num(0);
  for (const auto& x : *terms) {
    if (x.kernel) return std::nullopt;
    auto k = exact_constant(x.power);
    if (!k) return std::nullopt;
    if (k->is_zero()) beta = build::add(beta, x.coef);
    else if (k->is_one()) alpha = build::add(alpha, x.coef);
    else return std::nullopt;
  }
  if (canon_zero(alpha)) return std::nullopt;
  return std::make_pair(alpha, beta);
}

bool is_const(const Expr& e, long v) {
  auto q = exact_constant(e);
  return q && *q == Rational(v);
}

// Antiderivative of a kernel on its own.
std::optional<Expr> kernel_table(const Expr& k) {
  using namespace build;
  if (k.kind() == Kind::Func) {
    auto lin = linear(k.child(0));
    if (!lin) return std::nullopt;
    const Expr& u = k.child(0);
    const Expr& a = lin->first;
    Expr r;
    if (k.name() == "sin") r = neg(func("cos", u));
    else if (k.name() == "cos") r = func("sin", u);
    else if (k.name() == "exp") r = k;
    else if (k.name() == "tan") r = neg(func("ln", func("cos", u)));
    else if (k.name() == "ln") r = sub(mul(u, k), u);
    else if (k.name() == "sqrt") r = mul(num(Rational(2, 3)), pow(u, num(Rational(3, 2))));
    else if (k.name() == "arcsin") r = add(mul(u, k), func("sqrt", sub(num(1), pow(u, num(2)))));
    else return std::nullopt;
    return div(r, a);
  }
  if (k.kind() == Kind::Pow) {
    const Expr& b = k.child(0);
    const Expr& ex = k.child(1);
    if (!depends_on_time(ex)) {
      auto lin = linear(b);
      if (!lin) return std::nullopt;
      if (is_const(ex, -1)) return div(func("ln", b), lin->first);
      Expr e1 = add(ex, num(1));
      return div(pow(b, e1), mul(e1, lin->first));
    }
    if (!depends_on_time(b)) {
      auto lin = linear(ex);
      if (!lin) return std::nullopt;
      return div(k, mul(lin->first, func("ln", b)));
    }
  }
  return std::nullopt;
}

bool parts_family(const Expr& k) {
  if (k.is_func("exp") || k.is_func("sin") || k.is_func("cos")) return true;
  return k.kind() == Kind::Pow && !depends_on_time(k.child(0));
}

std::optional<Expr> integrate_term(const Term& x, int depth) {
  using namespace build;
  if (depth > 24) return std::nullopt;
  const Expr tp = x.power;
  if (!x.kernel) {
    if (is_const(tp, -1)) return mul(x.coef, func("ln", t()));
    Expr e1 = add(tp, num(1));
    return mul(x.coef, div(pow(t(), e1), e1));
  }
  const Expr& k = *x.kernel;
  if (is_const(tp, 0)) {
    auto r = kernel_table(k);
    if (!r) return std::nullopt;
    return mul(x.coef, *r);
  }
  auto n = exact_constant(tp);
  if (n && n->is_integer() && n->sign() > 0 && parts_family(k)) {
    auto j = kernel_table(k);
    if (!j) return std::nullopt;
    Expr rest = mul(num(*n), mul(pow(t(), num(*n - Rational(1))), *j));
    auto terms = expand(rest);
    if (!terms) return std::nullopt;
    Expr acc = mul(pow(t(), tp), *j);
    for (const auto& y : *terms) {
      auto i = integrate_term(y, depth + 1);
      if (!i) return std::nullopt;
      acc = sub(acc, *i);
    }
    return mul(x.coef, acc);
  }
  if (n && k.is_func("ln")) {
    auto lin = linear(k.child(0));
    if (!lin || !canon_zero(lin->second)) return std::nullopt;
    if (*n == Rational(-1)) return mul(x.coef, div(pow(k, num(2)), num(2)));
    Expr e1 = num(*n + Rational(1));
    Expr p = pow(t(), e1);
    return mul(x.coef, sub(div(mul(p, k), e1), div(p, pow(e1, num(2)))));
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Builtin catalogue

using Assignment = std::vector<std::pair<std::string, Expr>>;

Expr init_of(const std::string& var) { return Expr::init(var + "0"); }

std::map<Symbol, Expr> as_map(const Assignment& a) {
  std::map<Symbol, Expr> m;
  for (const auto& [v, e] : a) m.emplace(Symbol::state(v), e);
  return m;
}

std::set<std::string> states_in(const Expr& e) {
  std::set<std::string> out;
  for (const auto& s : free_symbols(e))
    if (s.kind == Kind::State) out.insert(s.name);
  return out;
}

Expr at(const Expr& e, const std::string& var, const Expr& v) {
  return build::tidy(substitute(e, {{Symbol::state(var), v}}));
}

// F(0) when it is defined without assumptions beyond those F already needs.
std::optional<Expr> value_at_zero(const Expr& f) {
  Expr c = substitute(f, {{Symbol::time(), num(0)}});
  if (free_symbols(c).empty()) {
    try {
      auto v = eval(c, {});
      if (!v) return std::nullopt;
      if (v->exact()) return num(v->rational());
    } catch (const Error&) {
      return std::nullopt;
    }
  }
  std::vector<SideCondition> inherited;
  for (const auto& sc : structural_conditions(f))
    if (!depends_on_time(sc.expr)) inherited.push_back(sc);
  for (const auto& sc : structural_conditions(c)) {
    if (discharge(sc, IntervalSpec::whole(), {}).disposition == Disposition::DischargedArithmetic) continue;
    bool known = std::any_of(inherited.begin(), inherited.end(),
                             [&](const SideCondition& o) { return o.shape == sc.shape && same(o.expr, sc.expr); });
    if (!known) return std::nullopt;
  }
  return canon_expr(c);
}

// F - F(0), or F itself when F(0) is undefined.
Expr anchored(const Expr& f) {
  auto c = value_at_zero(f);
  if (!c) return f;
  return build::sub(f, *c);
}

std::optional<Expr> solve_linear(const std::string& var, const Expr& r) {
  using namespace build;
  Expr x = Expr::state(var);
  Expr g = at(r, var, num(0));
  Expr a = canon_expr(sub(at(r, var, num(1)), g));
  if (canon_zero(a) || contains_state(a)) return std::nullopt;
  if (!same(r, add(mul(a, x), g))) return std::nullopt;
  Expr big_a;
  if (!depends_on_time(a)) {
    big_a = mul(a, t());
  } else {
    auto ia = integrate(a);
    if (!ia) return std::nullopt;
    big_a = anchored(*ia);
  }
  Expr growth = func("exp", big_a);
  if (canon_zero(g)) return mul(init_of(var), growth);
  auto ig = integrate(mul(func("exp", neg(big_a)), g));
  if (!ig) return std::nullopt;
  return mul(growth, add(init_of(var), anchored(*ig)));
}

std::optional<std::vector<Expr>> solve_separable(const std::string& var, const Expr& r) {
  using namespace build;
  if (depends_on_time(r)) return std::nullopt;
  Expr x = Expr::state(var), x0 = init_of(var);
  Expr h0 = at(r, var, num(0)), h1 = at(r, var, num(1)), hm = at(r, var, num(-1));
  if (!contains_state(h0) && !contains_state(h1) && !contains_state(hm)) {
    Expr c0 = canon_expr(h0);
    Expr c1 = canon_expr(div(sub(h1, hm), num(2)));
    Expr c2 = canon_expr(sub(div(add(h1, hm), num(2)), h0));
    if (!canon_zero(c2) && same(r, add(add(mul(c2, pow(x, num(2))), mul(c1, x)), c0))) {
      if (canon_zero(c0) && canon_zero(c1))
        return std::vector<Expr>{div(x0, sub(num(1), mul(mul(c2, x0), t())))};
      Expr disc = canon_expr(sub(pow(c1, num(2)), mul(num(4), mul(c2, c0))));
      if (canon_zero(disc)) {
        Expr root = canon_expr(div(neg(c1), mul(num(2), c2)));
        Expr d = sub(x0, root);
        return std::vector<Expr>{add(root, div(d, sub(num(1), mul(mul(c2, d), t()))))};
      }
      auto dq = exact_constant(disc);
      if (dq && dq->sign() < 0) {
        // u = x + c1/(2*c2) obeys u' = c2*u^2 + m^2/c2 with m = sqrt(-disc)/2.
        Expr m = func("sqrt", num(-*dq / Rational(4)));
        if (auto rt = (-*dq / Rational(4)).exact_root(2)) m = num(*rt);
        Expr shift = canon_expr(div(c1, mul(num(2), c2)));
        Expr u0 = add(x0, shift);
        Expr tn = func("tan", mul(m, t()));
        Expr u = div(mul(m, add(mul(m, tn), mul(c2, u0))), mul(c2, sub(m, mul(mul(c2, u0), tn))));
        return std::vector<Expr>{sub(u, shift)};
      }
      Expr s = func("sqrt", disc);
      if (dq)
        if (auto rt = dq->exact_root(2)) s = num(*rt);
      Expr r1 = div(add(neg(c1), s), mul(num(2), c2));
      Expr r2 = div(sub(neg(c1), s), mul(num(2), c2));
      Expr e = func("exp", mul(s, t()));
      Expr numer = sub(mul(r1, sub(x0, r2)), mul(mul(r2, sub(x0, r1)), e));
      Expr denom = sub(sub(x0, r2), mul(sub(x0, r1), e));
      return std::vector<Expr>{div(numer, denom)};
    }
  }
  // h = 1/(p*x + q)
  Expr inv = canon_expr(div(num(1), r));
  Expr q = at(inv, var, num(0));
  Expr p = canon_expr(sub(at(inv, var, num(1)), q));
  if (contains_state(p) || contains_state(q) || canon_zero(p)) return std::nullopt;
  if (!same(inv, add(mul(p, x), q))) return std::nullopt;
  Expr radicand = add(mul(mul(num(2), p), t()), pow(add(mul(p, x0), q), num(2)));
  Expr root = func("sqrt", radicand);
  return std::vector<Expr>{div(add(neg(q), root), p), div(sub(neg(q), root), p)};
}

std::optional<Assignment> solve_rotation(const std::string& x, const Expr& rx, const std::string& y,
                                         const Expr& ry) {
  using namespace build;
  if (depends_on_time(rx) || depends_on_time(ry)) return std::nullopt;
  Expr w = canon_expr(neg(div(rx, Expr::state(y))));
  if (contains_state(w) || canon_zero(w)) return std::nullopt;
  if (!same(ry, mul(w, Expr::state(x)))) return std::nullopt;
  Expr wt = mul(w, t());
  Expr c = func("cos", wt), s = func("sin", wt);
  Expr x0 = init_of(x), y0 = init_of(y);
  return Assignment{{x, sub(mul(x0, c), mul(y0, s))}, {y, add(mul(x0, s), mul(y0, c))}};
}

void search(const OdeSystem& sys, const Assignment& done, std::vector<Assignment>& out) {
  if (done.size() == sys.size()) {
    out.push_back(done);
    return;
  }
  auto solved = [&](const std::string& v) {
    return std::any_of(done.begin(), done.end(), [&](const auto& p) { return p.first == v; });
  };
  auto subst = as_map(done);
  std::vector<std::pair<std::string, Expr>> open;
  for (const auto& eq : sys.equations())
    if (!solved(eq.var)) open.emplace_back(eq.var, substitute(eq.rhs, subst));

  for (const auto& [var, r] : open) {
    auto deps = states_in(r);
    std::vector<Expr> branches;
    if (deps.empty()) {
      auto f = integrate(r);
      if (f) branches.push_back(build::add(anchored(*f), init_of(var)));
    } else if (deps == std::set<std::string>{var}) {
      if (auto l = solve_linear(var, r)) branches.push_back(*l);
      else if (auto s = solve_separable(var, r)) branches = *s;
    }
    if (branches.empty()) continue;
    for (const auto& b : branches) {
      Assignment next = done;
      next.emplace_back(var, build::tidy(b));
      search(sys, next, out);
    }
    return;
  }
  if (open.size() == 2) {
    const auto& [x, rx] = open[0];
    const auto& [y, ry] = open[1];
    if (states_in(rx) == std::set<std::string>{y} && states_in(ry) == std::set<std::string>{x}) {
      if (auto rot = solve_rotation(x, rx, y, ry)) {
        Assignment next = done;
        next.insert(next.end(), rot->begin(), rot->end());
        search(sys, next, out);
      }
    }
  }
}

Solution to_solution(const OdeSystem& sys, const Assignment& a) {
  Solution sol;
  for (const auto& eq : sys.equations())
    for (const auto& [v, e] : a)
      if (v == eq.var) sol.bindings.emplace_back(v, e);
  for (const auto& [v, e] : sol.bindings) {
    auto cs = structural_conditions(e);
    try {
      auto d = differentiate(e).conditions;
      cs.insert(cs.end(), d.begin(), d.end());
    } catch (const Error&) {
    }
    for (const auto& c : cs)
      if (c.expr.kind() == Kind::Time) sol.domain = IntervalSpec::parse("(0,inf)");
  }
  return sol;
}

}  // namespace

std::optional<Expr> integrate(const Expr& f) {
  if (contains_state(f)) return std::nullopt;
  auto terms = expand(f);
  if (!terms) return std::nullopt;
  Expr acc = num(0);
  for (const auto& x : *terms) {
    auto i = integrate_term(x, 0);
    if (!i) return std::nullopt;
    acc = build::add(acc, *i);
  }
  return build::tidy(acc);
}

SolveResult solve_builtin(const OdeSystem& sys) {
  SolveResult res;
  res.backend = "builtin";
  std::vector<Assignment> found;
  search(sys, {}, found);
  if (found.empty()) {
    res.status = SolveResult::Status::Unsolved;
    res.detail = "no builtin method applies";
    return res;
  }
  res.status = SolveResult::Status::Solved;
  res.domain_reported = true;
  for (const auto& a : found) res.solutions.push_back(to_solution(sys, a));
  return res;
}

std::string_view solve_status_name(SolveResult::Status s) {
  switch (s) {
    case SolveResult::Status::Solved: return "solved";
    case SolveResult::Status::Unsolved: return "unsolved";
    case SolveResult::Status::BackendError: return "error";
  }
  return "?";
}

BackendSpec BackendSpec::parse(std::string_view text, double timeout) {
  if (!(timeout > 0)) throw std::invalid_argument("backend timeout must be positive");
  BackendSpec spec;
  spec.timeout = timeout;
  std::string s(text);
  if (s.empty() || s == "builtin") return spec;
  if (s.rfind("external:", 0) == 0) {
    spec.id = "external";
    spec.command = {"/bin/sh", "-c", s.substr(9)};
    return spec;
  }
  if (s == "fricas" || s == "maxima" || s == "sympy" || s == "wolfram") {
    spec.id = s;
    if (const char* bridge = std::getenv("ODECERT_BRIDGE_CMD"); bridge && *bridge)
      spec.command = {"/bin/sh", "-c", std::string(bridge) + " --cas " + s};
    return spec;
  }
  throw std::invalid_argument("unknown backend '" + s + "'");
}

SolveResult solve(const OdeSystem& sys, const BackendSpec& backend,
                  const std::vector<std::string>& assumptions) {
  auto start = std::chrono::steady_clock::now();
  SolveResult r = backend.builtin() ? solve_builtin(sys) : request_external(sys, backend, assumptions);
  r.backend = backend.id;
  r.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::string encode_request(const OdeSystem& sys, const std::vector<std::string>& assumptions) {
  nlohmann::json eqs = nlohmann::json::array();
  for (const auto& eq : sys.equations()) eqs.push_back({{"var", eq.var}, {"rhs", to_string(eq.rhs)}});
  nlohmann::json doc = {
      {"version", 1}, {"indep", "t"}, {"equations", eqs}, {"assumptions", assumptions}};
  return doc.dump();
}

SolveResult decode_response(std::string_view line, const OdeSystem& sys,
                            const std::vector<std::string>& assumptions) {
  SolveResult res;
  auto fail = [&](std::string detail) {
    res.status = SolveResult::Status::BackendError;
    res.solutions.clear();
    res.detail = std::move(detail);
    return res;
  };
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const std::exception&) {
    return fail("malformed response");
  }
  if (!doc.is_object() || !doc.contains("status") || !doc["status"].is_string())
    return fail("malformed response: missing status");
  std::string detail;
  if (doc.contains("detail")) {
    if (!doc["detail"].is_string()) return fail("malformed response: detail");
    detail = doc["detail"].get<std::string>();
  }
  std::string status = doc["status"].get<std::string>();
  if (status == "unsolved") {
    res.status = SolveResult::Status::Unsolved;
    res.detail = detail.empty() ? "backend could not solve" : detail;
    return res;
  }
  if (status == "error") return fail(detail.empty() ? "backend reported an error" : detail);
  if (status != "solved") return fail("malformed response: unknown status '" + status + "'");

  std::optional<IntervalSpec> domain;
  if (doc.contains("domain")) {
    if (!doc["domain"].is_string()) return fail("malformed response: domain");
    try {
      domain = IntervalSpec::parse(doc["domain"].get<std::string>());
    } catch (const Error&) {
      return fail("malformed response: domain");
    }
  }
  if (!doc.contains("solutions") || !doc["solutions"].is_array() || doc["solutions"].empty())
    return fail("malformed response: solutions");

  std::set<std::string> allowed = sys.params();
  for (const auto& a : assumptions) {
    try {
      for (const auto& s : free_symbols(Assumption::parse(a, sys.context()).expr))
        if (s.kind == Kind::Param) allowed.insert(s.name);
    } catch (const Error&) {
    }
  }
  ParseContext ctx = sys.context();
  for (const auto& branch : doc["solutions"]) {
    if (!branch.is_array()) return fail("malformed response: solution");
    Solution sol;
    for (const auto& b : branch) {
      if (!b.is_object() || !b.contains("var") || !b.contains("expr") || !b["var"].is_string() ||
          !b["expr"].is_string())
        return fail("malformed response: binding");
      std::string var = b["var"].get<std::string>();
      if (!sys.declares(var) || sol.binding(var)) return fail("malformed response: binding for '" + var + "'");
      Expr e;
      try {
        e = parse_expr(b["expr"].get<std::string>(), ctx);
      } catch (const Error& err) {
        return fail(std::string("unparseable expression: ") + err.what());
      }
      for (const auto& s : free_symbols(e)) {
        if (s.kind == Kind::State) return fail("symbol leak: state variable '" + s.name + "' in solution");
        if (s.kind == Kind::Param && !allowed.contains(s.name)) return fail("symbol leak: '" + s.name + "'");
      }
      sol.bindings.emplace_back(var, e);
    }
    if (sol.bindings.size() != sys.size()) return fail("malformed response: incomplete solution");
    Solution ordered;
    for (const auto& eq : sys.equations()) ordered.bindings.emplace_back(eq.var, *sol.binding(eq.var));
    if (domain) ordered.domain = *domain;
    res.solutions.push_back(std::move(ordered));
  }
  res.status = SolveResult::Status::Solved;
  res.domain_reported = domain.has_value();
  res.detail = detail;
  return res;
}

}  // namespace odecert
