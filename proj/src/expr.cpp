#include "odecert/expr.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "odecert/errors.hpp"

namespace odecert {

struct Expr::Node {
  Kind kind;
  Rational value;
  std::string name;
  std::vector<Expr> kids;
  std::size_t hash;
};

namespace {

constexpr std::array<std::string_view, 7> kBuiltinFunctions = {"sin", "cos", "tan", "sqrt",
                                                               "exp", "ln",  "arcsin"};

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

std::size_t rational_hash(const Rational& q) {
  return mix(mpz_get_ui(q.value().get_num_mpz_t()) * (q.sign() < 0 ? 3 : 1),
             mpz_get_ui(q.value().get_den_mpz_t()));
}

}  // namespace

std::string_view kind_name(Kind k) {
  switch (k) {
    case Kind::Const: return "const";
    case Kind::Time: return "time";
    case Kind::State: return "state";
    case Kind::Param: return "param";
    case Kind::Init: return "init";
    case Kind::Neg: return "neg";
    case Kind::Add: return "add";
    case Kind::Mul: return "mul";
    case Kind::Div: return "div";
    case Kind::Pow: return "pow";
    case Kind::Func: return "func";
    case Kind::Tuple: return "tuple";
  }
  return "?";
}

bool is_builtin_function(std::string_view name) {
  return std::find(kBuiltinFunctions.begin(), kBuiltinFunctions.end(), name) !=
         kBuiltinFunctions.end();
}

Expr Expr::make(Kind k, Rational v, std::string name, std::vector<Expr> kids) {
  std::size_t h = mix(static_cast<std::size_t>(k), std::hash<std::string>{}(name));
  if (k == Kind::Const) h = mix(h, rational_hash(v));
  for (const auto& c : kids) h = mix(h, c.hash());
  return Expr(std::make_shared<const Node>(
      Node{k, std::move(v), std::move(name), std::move(kids), h}));
}

Expr::Expr() : Expr(constant(Rational(0))) {}

Expr Expr::constant(Rational value) { return make(Kind::Const, std::move(value), {}, {}); }
Expr Expr::time() { return make(Kind::Time, {}, "t", {}); }
Expr Expr::state(std::string name) { return make(Kind::State, {}, std::move(name), {}); }
Expr Expr::param(std::string name) { return make(Kind::Param, {}, std::move(name), {}); }
Expr Expr::init(std::string name) { return make(Kind::Init, {}, std::move(name), {}); }
Expr Expr::symbol(const Symbol& s) {
  switch (s.kind) {
    case Kind::Time: return time();
    case Kind::State: return state(s.name);
    case Kind::Param: return param(s.name);
    case Kind::Init: return init(s.name);
    default: throw std::invalid_argument("not a symbol kind");
  }
}
Expr Expr::neg(Expr a) { return make(Kind::Neg, {}, {}, {std::move(a)}); }
Expr Expr::add(Expr a, Expr b) { return make(Kind::Add, {}, {}, {std::move(a), std::move(b)}); }
Expr Expr::mul(Expr a, Expr b) { return make(Kind::Mul, {}, {}, {std::move(a), std::move(b)}); }
Expr Expr::div(Expr a, Expr b) { return make(Kind::Div, {}, {}, {std::move(a), std::move(b)}); }
Expr Expr::pow(Expr base, Expr exponent) {
  return make(Kind::Pow, {}, {}, {std::move(base), std::move(exponent)});
}
Expr Expr::func(std::string name, Expr arg) {
  return make(Kind::Func, {}, std::move(name), {std::move(arg)});
}
Expr Expr::tuple(std::vector<Expr> items) {
  if (items.empty()) throw std::invalid_argument("empty tuple");
  for (const auto& i : items)
    if (i.kind() == Kind::Tuple) throw std::invalid_argument("nested tuple");
  return make(Kind::Tuple, {}, {}, std::move(items));
}

Kind Expr::kind() const { return node_->kind; }
const Rational& Expr::value() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }
const std::vector<Expr>& Expr::children() const { return node_->kids; }
std::size_t Expr::hash() const { return node_->hash; }

bool Expr::is_symbol() const {
  switch (kind()) {
    case Kind::Time:
    case Kind::State:
    case Kind::Param:
    case Kind::Init: return true;
    default: return false;
  }
}

Symbol Expr::as_symbol() const {
  if (!is_symbol()) throw std::logic_error("as_symbol on non-symbol");
  return {kind(), name()};
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (a.hash() != b.hash() || a.kind() != b.kind()) return false;
  if (a.kind() == Kind::Const) return a.value() == b.value();
  if (a.name() != b.name() || a.children().size() != b.children().size()) return false;
  for (std::size_t i = 0; i < a.children().size(); ++i)
    if (!(a.children()[i] == b.children()[i])) return false;
  return true;
}

std::strong_ordering operator<=>(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return std::strong_ordering::equal;
  if (auto c = a.kind() <=> b.kind(); c != 0) return c;
  if (a.kind() == Kind::Const) return a.value() <=> b.value();
  if (auto c = a.name() <=> b.name(); c != 0) return c;
  if (auto c = a.children().size() <=> b.children().size(); c != 0) return c;
  for (std::size_t i = 0; i < a.children().size(); ++i)
    if (auto c = a.children()[i] <=> b.children()[i]; c != 0) return c;
  return std::strong_ordering::equal;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

// Precedence: 1 sum, 2 product, 3 prefix minus, 4 power, 5 atom.
int precedence(const Expr& e) {
  switch (e.kind()) {
    case Kind::Add: return 1;
    case Kind::Mul:
    case Kind::Div: return 2;
    case Kind::Neg: return 3;
    case Kind::Pow: return 4;
    case Kind::Const:
      if (e.value().sign() < 0) return 3;
      return e.value().is_integer() ? 5 : 2;
    default: return 5;
  }
}

void render(std::ostream& os, const Expr& e, int min_prec);

void render_at(std::ostream& os, const Expr& e, int min_prec) {
  if (precedence(e) < min_prec) {
    os << '(';
    render(os, e, 0);
    os << ')';
  } else {
    render(os, e, min_prec);
  }
}

void render(std::ostream& os, const Expr& e, int) {
  switch (e.kind()) {
    case Kind::Const: {
      const auto& q = e.value();
      if (q.sign() < 0) os << '-';
      os << q.abs().to_string();
      return;
    }
    case Kind::Time:
    case Kind::State:
    case Kind::Param:
    case Kind::Init: os << e.name(); return;
    case Kind::Neg:
      os << '-';
      render_at(os, e.child(0), 3);
      return;
    case Kind::Add: {
      render_at(os, e.child(0), 1);
      const Expr& rhs = e.child(1);
      if (rhs.kind() == Kind::Neg) {
        os << " - ";
        render_at(os, rhs.child(0), 2);
      } else if (rhs.is_const() && rhs.value().sign() < 0) {
        os << " - ";
        render_at(os, Expr::constant(rhs.value().abs()), 2);
      } else {
        os << " + ";
        render_at(os, rhs, 2);
      }
      return;
    }
    case Kind::Mul:
    case Kind::Div:
      render_at(os, e.child(0), 2);
      os << (e.kind() == Kind::Mul ? "*" : "/");
      render_at(os, e.child(1), 4);
      return;
    case Kind::Pow:
      render_at(os, e.child(0), 5);
      os << '^';
      render_at(os, e.child(1), 4);
      return;
    case Kind::Func:
      os << e.name() << '(';
      render(os, e.child(0), 0);
      os << ')';
      return;
    case Kind::Tuple: {
      os << '(';
      bool first = true;
      for (const auto& c : e.children()) {
        if (!first) os << ", ";
        first = false;
        render(os, c, 0);
      }
      os << ')';
      return;
    }
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::ostringstream os;
  render(os, e, 0);
  return os.str();
}

std::ostream& operator<<(std::ostream& os, const Expr& e) { return os << to_string(e); }

Expr operator+(const Expr& a, const Expr& b) { return Expr::add(a, b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::add(a, Expr::neg(b)); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::mul(a, b); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::div(a, b); }
Expr operator-(const Expr& a) { return Expr::neg(a); }

// ---------------------------------------------------------------------------
// Structural queries

namespace {

void collect_symbols(const Expr& e, std::set<Symbol>& out) {
  if (e.is_symbol()) {
    out.insert(e.as_symbol());
    return;
  }
  for (const auto& c : e.children()) collect_symbols(c, out);
}

bool any_node(const Expr& e, const std::function<bool(const Expr&)>& pred) {
  if (pred(e)) return true;
  for (const auto& c : e.children())
    if (any_node(c, pred)) return true;
  return false;
}

}  // namespace

std::set<Symbol> free_symbols(const Expr& e) {
  std::set<Symbol> out;
  collect_symbols(e, out);
  return out;
}

bool depends_on(const Expr& e, const Symbol& s) {
  return any_node(e, [&](const Expr& n) { return n.is_symbol() && n.as_symbol() == s; });
}

bool depends_on_time(const Expr& e) {
  return any_node(e, [](const Expr& n) { return n.kind() == Kind::Time; });
}

bool contains_state(const Expr& e) {
  return any_node(e, [](const Expr& n) { return n.kind() == Kind::State; });
}

std::size_t count_operators(const Expr& e) {
  std::size_t n = 0;
  switch (e.kind()) {
    case Kind::Add:
    case Kind::Mul:
    case Kind::Div:
    case Kind::Pow:
    case Kind::Func: n = 1; break;
    default: break;
  }
  for (const auto& c : e.children()) n += count_operators(c);
  return n;
}

std::size_t node_count(const Expr& e) {
  std::size_t n = 1;
  for (const auto& c : e.children()) n += node_count(c);
  return n;
}

Expr substitute(const Expr& e, const std::map<Symbol, Expr>& bindings) {
  if (e.is_symbol()) {
    auto it = bindings.find(e.as_symbol());
    return it == bindings.end() ? e : it->second;
  }
  switch (e.kind()) {
    case Kind::Const: return e;
    case Kind::Neg: return Expr::neg(substitute(e.child(0), bindings));
    case Kind::Add: return Expr::add(substitute(e.child(0), bindings), substitute(e.child(1), bindings));
    case Kind::Mul: return Expr::mul(substitute(e.child(0), bindings), substitute(e.child(1), bindings));
    case Kind::Div: return Expr::div(substitute(e.child(0), bindings), substitute(e.child(1), bindings));
    case Kind::Pow: return Expr::pow(substitute(e.child(0), bindings), substitute(e.child(1), bindings));
    case Kind::Func: return Expr::func(e.name(), substitute(e.child(0), bindings));
    case Kind::Tuple: {
      std::vector<Expr> items;
      for (const auto& c : e.children()) items.push_back(substitute(c, bindings));
      return Expr::tuple(std::move(items));
    }
    default: return e;
  }
}

const Expr& subterm(const Expr& e, const std::vector<std::size_t>& path) {
  const Expr* cur = &e;
  for (auto i : path) {
    if (i >= cur->children().size()) throw std::out_of_range("bad subterm path");
    cur = &cur->children()[i];
  }
  return *cur;
}

// ---------------------------------------------------------------------------
// Evaluation

Real Number::real() const {
  if (exact()) {
    const auto& q = rational().value();
    return Real(q.get_num().get_str()) / Real(q.get_den().get_str());
  }
  return std::get<Real>(v_);
}

double Number::to_double() const {
  return exact() ? rational().to_double() : std::get<Real>(v_).convert_to<double>();
}

int Number::sign() const {
  if (exact()) return rational().sign();
  const auto& r = std::get<Real>(v_);
  return r > 0 ? 1 : (r < 0 ? -1 : 0);
}

namespace {

using MaybeNumber = std::optional<Number>;

MaybeNumber checked(Real r) {
  if (!boost::multiprecision::isfinite(r)) return std::nullopt;
  return Number(std::move(r));
}

MaybeNumber eval_func(const std::string& name, const Number& a, const EvalOptions& opts) {
  using boost::multiprecision::abs;
  const Real margin = opts.margin;
  if (name == "sqrt") {
    if (a.sign() < 0) return std::nullopt;
    if (opts.margin > 0 && a.real() < margin) return std::nullopt;
    if (a.exact())
      if (auto r = a.rational().exact_root(2)) return Number(*r);
    return checked(boost::multiprecision::sqrt(a.real()));
  }
  if (name == "ln") {
    if (a.sign() <= 0) return std::nullopt;
    if (opts.margin > 0 && a.real() < margin) return std::nullopt;
    if (a.exact() && a.rational().is_one()) return Number(Rational(0));
    return checked(boost::multiprecision::log(a.real()));
  }
  if (name == "arcsin") {
    Real x = a.real();
    if (abs(x) > 1) return std::nullopt;
    if (opts.margin > 0 && abs(x) > 1 - margin) return std::nullopt;
    return checked(boost::multiprecision::asin(x));
  }
  if (a.exact() && a.rational().is_zero()) {
    if (name == "sin" || name == "tan") return Number(Rational(0));
    if (name == "cos" || name == "exp") return Number(Rational(1));
  }
  if (name == "sin") return checked(boost::multiprecision::sin(a.real()));
  if (name == "cos") return checked(boost::multiprecision::cos(a.real()));
  if (name == "exp") return checked(boost::multiprecision::exp(a.real()));
  if (name == "tan") {
    Real c = boost::multiprecision::cos(a.real());
    if (abs(c) < Real(1e-12) || (opts.margin > 0 && abs(c) < margin)) return std::nullopt;
    return checked(boost::multiprecision::sin(a.real()) / c);
  }
  throw Error("cannot evaluate function '" + name + "'");
}

MaybeNumber eval_pow(const Number& base, const Number& exponent, const EvalOptions& opts) {
  if (exponent.exact() && exponent.rational().is_integer()) {
    auto n = exponent.rational().to_long();
    if (!n || *n > 100000 || *n < -100000) return std::nullopt;
    if (base.sign() == 0 && *n < 0) return std::nullopt;
    if (*n < 0 && opts.margin > 0 && boost::multiprecision::abs(base.real()) < Real(opts.margin))
      return std::nullopt;
    if (base.exact()) return Number(*base.rational().pow(*n));
    return checked(boost::multiprecision::pow(base.real(), static_cast<int>(*n)));
  }
  // Non-integer exponents: principal real power, defined for base >= 0.
  if (base.sign() < 0) return std::nullopt;
  if (base.sign() == 0) {
    if (exponent.sign() > 0) return Number(Rational(0));
    return std::nullopt;
  }
  if (opts.margin > 0 && exponent.sign() < 0 && base.real() < Real(opts.margin)) return std::nullopt;
  if (base.exact() && exponent.exact()) {
    const auto& r = exponent.rational();
    mpz_class den = r.denominator(), num = r.numerator();
    if (den.fits_ulong_p() && num.fits_slong_p())
      if (auto root = base.rational().exact_root(den.get_ui()))
        if (auto v = root->pow(num.get_si())) return Number(*v);
  }
  return checked(boost::multiprecision::pow(base.real(), exponent.real()));
}

MaybeNumber eval_rec(const Expr& e, const Valuation& v, const EvalOptions& opts) {
  switch (e.kind()) {
    case Kind::Const: return Number(e.value());
    case Kind::Time:
    case Kind::State:
    case Kind::Param:
    case Kind::Init: {
      auto it = v.find(e.as_symbol());
      if (it == v.end()) throw UnboundSymbol(e.name());
      return Number(it->second);
    }
    case Kind::Neg: {
      auto a = eval_rec(e.child(0), v, opts);
      if (!a) return std::nullopt;
      if (a->exact()) return Number(-a->rational());
      return Number(Real(-a->real()));
    }
    case Kind::Add:
    case Kind::Mul: {
      auto a = eval_rec(e.child(0), v, opts);
      auto b = eval_rec(e.child(1), v, opts);
      if (!a || !b) return std::nullopt;
      bool add = e.kind() == Kind::Add;
      if (a->exact() && b->exact())
        return Number(add ? a->rational() + b->rational() : a->rational() * b->rational());
      return checked(add ? Real(a->real() + b->real()) : Real(a->real() * b->real()));
    }
    case Kind::Div: {
      auto a = eval_rec(e.child(0), v, opts);
      auto b = eval_rec(e.child(1), v, opts);
      if (!a || !b || b->sign() == 0) return std::nullopt;
      if (opts.margin > 0 && boost::multiprecision::abs(b->real()) < Real(opts.margin))
        return std::nullopt;
      if (a->exact() && b->exact()) return Number(a->rational() / b->rational());
      return checked(Real(a->real() / b->real()));
    }
    case Kind::Pow: {
      auto a = eval_rec(e.child(0), v, opts);
      auto b = eval_rec(e.child(1), v, opts);
      if (!a || !b) return std::nullopt;
      return eval_pow(*a, *b, opts);
    }
    case Kind::Func: {
      auto a = eval_rec(e.child(0), v, opts);
      if (!a) return std::nullopt;
      return eval_func(e.name(), *a, opts);
    }
    case Kind::Tuple: throw std::invalid_argument("cannot evaluate a tuple to a number");
  }
  return std::nullopt;
}

}  // namespace

std::optional<Number> eval(const Expr& e, const Valuation& v, const EvalOptions& opts) {
  for (const auto& s : free_symbols(e))
    if (!v.contains(s)) throw UnboundSymbol(s.name);
  return eval_rec(e, v, opts);
}

// ---------------------------------------------------------------------------
// Folding constructors

namespace build {

namespace {

std::optional<Rational> rational_of(const Expr& e) {
  if (e.is_const()) return e.value();
  if (e.kind() == Kind::Neg && e.child(0).is_const()) return -e.child(0).value();
  return std::nullopt;
}

}  // namespace

Expr num(const Rational& q) {
  if (q.sign() < 0) return Expr::neg(Expr::constant(-q));
  return Expr::constant(q);
}

Expr neg(const Expr& a) {
  if (auto q = rational_of(a)) return num(-*q);
  if (a.kind() == Kind::Neg) return a.child(0);
  return Expr::neg(a);
}

Expr add(const Expr& a, const Expr& b) {
  auto qa = rational_of(a), qb = rational_of(b);
  if (qa && qb) return num(*qa + *qb);
  if (qa && qa->is_zero()) return b;
  if (qb && qb->is_zero()) return a;
  if (qb && qb->sign() < 0) return Expr::add(a, Expr::neg(Expr::constant(-*qb)));
  if (a.kind() == Kind::Neg && b.kind() != Kind::Neg) return Expr::add(b, a);
  return Expr::add(a, b);
}

Expr sub(const Expr& a, const Expr& b) { return add(a, neg(b)); }

Expr mul(const Expr& a, const Expr& b) {
  auto qa = rational_of(a), qb = rational_of(b);
  if (qa && qb) return num(*qa * *qb);
  if ((qa && qa->is_zero()) || (qb && qb->is_zero())) return num(0);
  if (qa && qa->is_one()) return b;
  if (qb && qb->is_one()) return a;
  if (qa && *qa == Rational(-1)) return neg(b);
  if (qb && *qb == Rational(-1)) return neg(a);
  if (a.kind() == Kind::Neg) return neg(mul(a.child(0), b));
  if (b.kind() == Kind::Neg) return neg(mul(a, b.child(0)));
  if (qb) return mul(b, a);
  if (qa && b.kind() == Kind::Mul)
    if (auto qc = rational_of(b.child(0))) return mul(num(*qa * *qc), b.child(1));
  if (qa && !qa->is_integer()) {
    Rational n(mpq_class(qa->numerator())), d(mpq_class(qa->denominator()));
    return div(mul(num(n), b), num(d));
  }
  return Expr::mul(a, b);
}

Expr div(const Expr& a, const Expr& b) {
  auto qa = rational_of(a), qb = rational_of(b);
  if (qb && qb->is_zero()) return Expr::div(a, b);
  if (qa && qb) return num(*qa / *qb);
  if (qa && qa->is_zero()) return num(0);
  if (qb && qb->is_one()) return a;
  if (qb && *qb == Rational(-1)) return neg(a);
  if (a.kind() == Kind::Neg) return neg(div(a.child(0), b));
  if (b.kind() == Kind::Neg) return neg(div(a, b.child(0)));
  if (qb && !qb->is_integer()) return mul(num(Rational(1) / *qb), a);
  return Expr::div(a, b);
}

Expr pow(const Expr& base, const Expr& exponent) {
  auto qb = rational_of(base), qe = rational_of(exponent);
  if (qe && qe->is_zero()) return num(1);
  if (qe && qe->is_one()) return base;
  if (qb && qb->is_one()) return num(1);
  if (qb && qe && qe->is_integer()) {
    if (auto n = qe->to_long(); n && *n > -64 && *n < 64)
      if (auto v = qb->pow(*n)) return num(*v);
  }
  if (qb && qb->is_zero() && qe && qe->sign() > 0) return num(0);
  return Expr::pow(base, exponent);
}

Expr func(const std::string& name, const Expr& arg) {
  if (auto q = rational_of(arg)) {
    if (q->is_zero() && (name == "sin" || name == "tan" || name == "arcsin")) return num(0);
    if (q->is_zero() && (name == "cos" || name == "exp")) return num(1);
    if (q->is_one() && name == "ln") return num(0);
    if (name == "sqrt")
      if (auto r = q->exact_root(2)) return num(*r);
  }
  return Expr::func(name, arg);
}

Expr tidy(const Expr& e) {
  switch (e.kind()) {
    case Kind::Neg: return neg(tidy(e.child(0)));
    case Kind::Add: return add(tidy(e.child(0)), tidy(e.child(1)));
    case Kind::Mul: return mul(tidy(e.child(0)), tidy(e.child(1)));
    case Kind::Div: return div(tidy(e.child(0)), tidy(e.child(1)));
    case Kind::Pow: return pow(tidy(e.child(0)), tidy(e.child(1)));
    case Kind::Func: return func(e.name(), tidy(e.child(0)));
    case Kind::Tuple: {
      std::vector<Expr> items;
      for (const auto& c : e.children()) items.push_back(tidy(c));
      return Expr::tuple(std::move(items));
    }
    default: return e;
  }
}

}  // namespace build

}  // namespace odecert
