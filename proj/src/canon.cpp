#include "odecert/canon.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "odecert/errors.hpp"

namespace odecert::canon {

// ---------------------------------------------------------------------------
// Monomials

namespace {

thread_local long budget_left = -1;  // negative: no budget active

void charge(long units) {
  if (budget_left < 0) return;
  budget_left -= units;
  if (budget_left < 0) {
    budget_left = 0;
    throw NormalFormTooLarge();
  }
}

struct BudgetScope {
  bool owner = budget_left < 0;
  BudgetScope() {
    if (owner) budget_left = kNormalizeBudget;
  }
  ~BudgetScope() {
    if (owner) budget_left = -1;
  }
};

long degree(const Monomial& m) {
  long d = 0;
  for (const auto& [v, e] : m) d += e;
  return d;
}

Monomial multiply(const Monomial& a, const Monomial& b) {
  Monomial out;
  out.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first->key < b[j].first->key)) {
      out.push_back(a[i++]);
    } else if (i == a.size() || b[j].first->key < a[i].first->key) {
      out.push_back(b[j++]);
    } else {
      out.emplace_back(a[i].first, a[i].second + b[j].second);
      ++i, ++j;
    }
  }
  return out;
}

// b / a when a divides b.
std::optional<Monomial> quotient(const Monomial& b, const Monomial& a) {
  Monomial out;
  std::size_t i = 0;
  for (const auto& [v, e] : b) {
    if (i < a.size() && a[i].first->key == v->key) {
      if (a[i].second > e) return std::nullopt;
      if (a[i].second < e) out.emplace_back(v, e - a[i].second);
      ++i;
    } else {
      out.emplace_back(v, e);
    }
  }
  if (i != a.size()) return std::nullopt;
  return out;
}

long exponent_of(const Monomial& m, const std::string& key) {
  for (const auto& [v, e] : m)
    if (v->key == key) return e;
  return 0;
}

Monomial without(const Monomial& m, const std::string& key) {
  Monomial out;
  for (const auto& p : m)
    if (p.first->key != key) out.push_back(p);
  return out;
}

}  // namespace

int compare(const Monomial& a, const Monomial& b) {
  long da = degree(a), db = degree(b);
  if (da != db) return da > db ? 1 : -1;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    int c = a[i].first->key.compare(b[j].first->key);
    if (c != 0) return c < 0 ? 1 : -1;
    if (a[i].second != b[j].second) return a[i].second > b[j].second ? 1 : -1;
    ++i, ++j;
  }
  if (i < a.size()) return 1;
  if (j < b.size()) return -1;
  return 0;
}

// ---------------------------------------------------------------------------
// Poly

Poly::Poly(const Rational& c) {
  if (!c.is_zero()) terms_.emplace(Monomial{}, c);
}

Poly Poly::variable(VarRef v, long exponent) {
  if (exponent == 0) return Poly(Rational(1));
  return term({{std::move(v), exponent}}, Rational(1));
}

Poly Poly::term(Monomial m, const Rational& c) {
  Poly p;
  if (!c.is_zero()) p.terms_.emplace(std::move(m), c);
  return p;
}

void Poly::add_term(const Monomial& m, const Rational& c) {
  if (c.is_zero()) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second.is_zero()) terms_.erase(it);
  }
}

bool Poly::is_constant() const {
  return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty());
}

Rational Poly::constant_value() const {
  auto it = terms_.find(Monomial{});
  return it == terms_.end() ? Rational(0) : it->second;
}

std::map<std::string, VarRef> Poly::variables() const {
  std::map<std::string, VarRef> out;
  for (const auto& [m, c] : terms_)
    for (const auto& [v, e] : m) out.emplace(v->key, v);
  return out;
}

long Poly::degree_in(const std::string& key) const {
  long d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, exponent_of(m, key));
  return d;
}

std::map<long, Poly> Poly::coefficients_in(const std::string& key) const {
  std::map<long, Poly> out;
  for (const auto& [m, c] : terms_) out[exponent_of(m, key)].add_term(without(m, key), c);
  return out;
}

Poly Poly::operator-() const {
  Poly p = *this;
  for (auto& [m, c] : p.terms_) c = -c;
  return p;
}

Poly operator+(const Poly& a, const Poly& b) {
  const Poly& big = a.terms_.size() >= b.terms_.size() ? a : b;
  const Poly& small = &big == &a ? b : a;
  Poly out = big;
  for (const auto& [m, c] : small.terms_) out.add_term(m, c);
  return out;
}

Poly operator-(const Poly& a, const Poly& b) {
  Poly out = a;
  for (const auto& [m, c] : b.terms_) out.add_term(m, -c);
  return out;
}

Poly operator*(const Poly& a, const Poly& b) {
  charge(static_cast<long>(a.terms_.size() * b.terms_.size()));
  Poly out;
  for (const auto& [ma, ca] : a.terms_)
    for (const auto& [mb, cb] : b.terms_) out.add_term(multiply(ma, mb), ca * cb);
  return out;
}

Poly Poly::scaled(const Rational& c) const {
  if (c.is_zero()) return Poly();
  Poly p = *this;
  for (auto& [m, k] : p.terms_) k *= c;
  return p;
}

Poly Poly::pow(unsigned long n) const {
  Poly result(Rational(1)), base = *this;
  while (n) {
    if (n & 1) result = result * base;
    n >>= 1;
    if (n) base = base * base;
  }
  return result;
}

Poly Poly::monic() const {
  if (is_zero()) return *this;
  return scaled(Rational(1) / leading_coefficient());
}

bool operator==(const Poly& a, const Poly& b) {
  if (a.terms_.size() != b.terms_.size()) return false;
  for (auto i = a.terms_.begin(), j = b.terms_.begin(); i != a.terms_.end(); ++i, ++j)
    if (compare(i->first, j->first) != 0 || !(i->second == j->second)) return false;
  return true;
}

Poly divide_exact(const Poly& a, const Poly& b) {
  if (b.is_zero()) throw std::logic_error("polynomial division by zero");
  Poly q, r = a;
  const Monomial& mb = b.leading_monomial();
  const Rational& cb = b.leading_coefficient();
  while (!r.is_zero()) {
    auto m = quotient(r.leading_monomial(), mb);
    if (!m) throw std::logic_error("inexact polynomial division");
    Poly t = Poly::term(std::move(*m), r.leading_coefficient() / cb);
    q = q + t;
    r = r - t * b;
  }
  return q;
}

namespace {

Poly gcd_rec(const Poly& a, const Poly& b);

// Primitive part with respect to x, scaled to a monic leading term.
Poly primitive(const Poly& p, const std::string& x, Poly* content = nullptr) {
  Poly c;
  for (const auto& [d, coeff] : p.coefficients_in(x)) {
    c = c.is_zero() ? coeff : gcd_rec(c, coeff);
    if (c.is_constant()) break;
  }
  if (c.is_constant()) c = Poly(Rational(1));
  if (content) *content = c;
  return (c.is_constant() ? p : divide_exact(p, c)).monic();
}

Poly leading_in(const Poly& p, const std::string& x, long* deg) {
  auto cs = p.coefficients_in(x);
  *deg = cs.rbegin()->first;
  return cs.rbegin()->second;
}

// Term count weighted by coefficient size in machine words.
long weight(const Poly& p) {
  long w = 0;
  for (const auto& [m, c] : p.terms()) {
    const mpq_class& q = c.value();
    w += 1 + static_cast<long>((mpz_sizeinbase(q.get_num_mpz_t(), 2) + mpz_sizeinbase(q.get_den_mpz_t(), 2)) / 64);
  }
  return w;
}

Poly pseudo_remainder(Poly r, const Poly& b, const std::string& x, const VarRef& xv) {
  long n = 0;
  Poly lb = leading_in(b, x, &n);
  while (!r.is_zero()) {
    long m = 0;
    Poly lr = leading_in(r, x, &m);
    if (m < n) break;
    charge(weight(r) * weight(lb) + weight(lr) * weight(b));
    r = lb * r - lr * Poly::variable(xv, m - n) * b;
  }
  return r;
}

// Modular images over GF(2^61 - 1), used to detect coprime inputs cheaply.
constexpr std::uint64_t kPrime = (std::uint64_t{1} << 61) - 1;

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % kPrime);
}

std::uint64_t powmod(std::uint64_t a, std::uint64_t e) {
  std::uint64_t r = 1;
  for (; e; e >>= 1, a = mulmod(a, a))
    if (e & 1) r = mulmod(r, a);
  return r;
}

std::optional<std::uint64_t> residue(const Rational& q) {
  std::uint64_t n = mpz_fdiv_ui(q.value().get_num_mpz_t(), kPrime);
  std::uint64_t d = mpz_fdiv_ui(q.value().get_den_mpz_t(), kPrime);
  if (d == 0) return std::nullopt;
  return mulmod(n, powmod(d, kPrime - 2));
}

using ModPoly = std::vector<std::uint64_t>;  // coefficient of x^i at index i

// Image in x after evaluating every other variable; empty when the degree drops.
std::optional<ModPoly> image(const Poly& p, const std::string& x, const std::map<std::string, std::uint64_t>& pt) {
  ModPoly out(p.degree_in(x) + 1, 0);
  for (const auto& [m, c] : p.terms()) {
    auto r = residue(c);
    if (!r) return std::nullopt;
    std::uint64_t v = *r;
    long dx = 0;
    for (const auto& [var, e] : m) {
      if (var->key == x)
        dx = e;
      else
        v = mulmod(v, powmod(pt.at(var->key), e));
    }
    out[dx] = (out[dx] + v) % kPrime;
  }
  if (out.back() == 0) return std::nullopt;
  return out;
}

long mod_gcd_degree(ModPoly a, ModPoly b) {
  auto trim = [](ModPoly& p) {
    while (!p.empty() && p.back() == 0) p.pop_back();
  };
  trim(a);
  trim(b);
  while (!b.empty()) {
    if (a.size() < b.size()) {
      std::swap(a, b);
      continue;
    }
    std::uint64_t f = mulmod(a.back(), powmod(b.back(), kPrime - 2));
    std::size_t shift = a.size() - b.size();
    for (std::size_t i = 0; i < b.size(); ++i)
      a[i + shift] = (a[i + shift] + kPrime - mulmod(f, b[i])) % kPrime;
    trim(a);
    if (a.size() < b.size()) std::swap(a, b);
  }
  return static_cast<long>(a.size()) - 1;
}

// True only when gcd(a, b) is certainly constant. A constant image gcd with
// both leading coefficients surviving bounds the true degree in x by zero.
bool surely_coprime(const Poly& a, const Poly& b) {
  auto va = a.variables(), vb = b.variables();
  std::map<std::string, std::uint64_t> pt;
  std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
  for (const auto& [k, v] : va) pt[k] = (seed = seed * 6364136223846793005ULL + 1442695040888963407ULL) % kPrime;
  for (const auto& [k, v] : vb)
    if (!pt.count(k)) pt[k] = (seed = seed * 6364136223846793005ULL + 1442695040888963407ULL) % kPrime;
  for (const auto& [k, v] : va) {
    if (!vb.count(k)) continue;
    auto ia = image(a, k, pt), ib = image(b, k, pt);
    if (!ia || !ib || mod_gcd_degree(*ia, *ib) != 0) return false;
  }
  return true;
}

// Greatest common divisor up to a rational factor.
Poly gcd_rec(const Poly& a, const Poly& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.is_constant() || b.is_constant()) return Poly(Rational(1));
  if (surely_coprime(a, b)) return Poly(Rational(1));
  auto va = a.variables(), vb = b.variables();
  VarRef x;
  for (const auto& [k, v] : va)
    if (vb.count(k)) {
      x = v;
      break;
    }
  if (!x) {
    // No shared variable: only the content can be common.
    Poly ca;
    primitive(a, va.begin()->first, &ca);
    return gcd_rec(ca, b);
  }
  Poly ca, cb;
  Poly pa = primitive(a, x->key, &ca);
  Poly pb = primitive(b, x->key, &cb);
  Poly c = gcd_rec(ca, cb);
  if (pa.degree_in(x->key) < pb.degree_in(x->key)) std::swap(pa, pb);
  while (true) {
    Poly r = pseudo_remainder(pa, pb, x->key, x);
    if (r.is_zero()) break;
    if (r.degree_in(x->key) == 0) {
      pb = Poly(Rational(1));
      break;
    }
    pa = std::move(pb);
    pb = primitive(r, x->key);
  }
  return c * primitive(pb, x->key);
}

}  // namespace

Poly gcd(const Poly& a, const Poly& b) { return gcd_rec(a, b).monic(); }

// ---------------------------------------------------------------------------
// RatFunc

RatFunc RatFunc::make(Poly num, Poly den) {
  if (den.is_zero()) throw std::logic_error("rational function with zero denominator");
  if (num.is_zero()) return RatFunc();
  if (den.is_constant()) return RatFunc(num.scaled(Rational(1) / den.constant_value()));
  Poly g = gcd(num, den);
  if (!g.is_constant()) {
    num = divide_exact(num, g);
    den = divide_exact(den, g);
  }
  Rational lc = den.leading_coefficient();
  return RatFunc(num.scaled(Rational(1) / lc), den.monic(), true);
}

std::optional<Rational> RatFunc::constant() const {
  if (num_.is_constant() && den_.is_constant()) return num_.constant_value();
  return std::nullopt;
}

RatFunc RatFunc::operator-() const { return RatFunc(-num_, den_, true); }

RatFunc operator+(const RatFunc& a, const RatFunc& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.den_ == b.den_) return RatFunc::make(a.num_ + b.num_, a.den_);
  return RatFunc::make(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
}

RatFunc operator-(const RatFunc& a, const RatFunc& b) { return a + (-b); }

RatFunc operator*(const RatFunc& a, const RatFunc& b) {
  if (a.is_zero() || b.is_zero()) return RatFunc();
  if (a.den_.is_constant() && b.den_.is_constant()) return RatFunc(a.num_ * b.num_);
  return RatFunc::make(a.num_ * b.num_, a.den_ * b.den_);
}

RatFunc operator/(const RatFunc& a, const RatFunc& b) {
  if (b.is_zero()) throw std::logic_error("rational function division by zero");
  return RatFunc::make(a.num_ * b.den_, a.den_ * b.num_);
}

RatFunc RatFunc::pow(long n) const {
  if (n == 0) return RatFunc(Rational(1));
  if (n < 0) return (RatFunc(Rational(1)) / *this).pow(-n);
  return RatFunc(num_.pow(static_cast<unsigned long>(n)), den_.pow(static_cast<unsigned long>(n)),
                 true);
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

Expr monomial_expr(const Monomial& m) {
  Expr out;
  bool first = true;
  for (const auto& [v, e] : m) {
    Expr f = e == 1 ? v->expr : Expr::pow(v->expr, Expr::constant(Rational(e)));
    out = first ? f : Expr::mul(out, f);
    first = false;
  }
  return out;
}

Expr poly_expr(const Poly& p) {
  if (p.is_zero()) return Expr::constant(Rational(0));
  Expr out;
  bool first = true;
  for (const auto& [m, c] : p.terms()) {
    Expr t = m.empty() ? build::num(c) : build::mul(build::num(c), monomial_expr(m));
    out = first ? t : Expr::add(out, t);
    first = false;
  }
  return out;
}

}  // namespace

Expr to_expr(const CanonForm& f) {
  Expr n = poly_expr(f.num());
  if (f.den().is_constant()) return n;
  Expr d = poly_expr(f.den());
  if (n.kind() == Kind::Neg) return Expr::neg(Expr::div(n.child(0), d));
  return Expr::div(n, d);
}

std::string to_string(const CanonForm& f) { return odecert::to_string(to_expr(f)); }

// ---------------------------------------------------------------------------
// Normalization

namespace {

using Tag = Var::Tag;

VarRef make_var(Tag tag, Expr expr, std::optional<RatFunc> payload = std::nullopt,
                long index = 0) {
  auto v = std::make_shared<Var>();
  v->tag = tag;
  v->key = (tag == Tag::Opaque ? "~~" : "~") + odecert::to_string(expr);
  v->expr = std::move(expr);
  if (payload) v->payload = std::make_shared<const RatFunc>(std::move(*payload));
  v->root_index = index;
  return v;
}

VarRef symbol_var(const Expr& e) {
  auto v = std::make_shared<Var>();
  v->tag = Tag::Symbol;
  v->key = "s:" + e.name() + ":" + std::to_string(static_cast<int>(e.kind()));
  v->expr = e;
  return v;
}

RatFunc atom(VarRef v, long e = 1) {
  if (e >= 0) return RatFunc(Poly::variable(std::move(v), e));
  return RatFunc(Rational(1)) / RatFunc(Poly::variable(std::move(v), -e));
}

bool leading_negative(const RatFunc& f) { return !f.is_zero() && f.num().leading_coefficient().sign() < 0; }

// n = a^k * s with s free of k-th powers below the trial bound.
void split_power(mpz_class n, unsigned long k, mpz_class& a, mpz_class& s) {
  a = 1;
  s = 1;
  for (unsigned long p = 2; p <= 100000 && mpz_class(p) * p <= n; ++p) {
    unsigned long e = 0;
    while (mpz_divisible_ui_p(n.get_mpz_t(), p)) {
      n /= p;
      ++e;
    }
    for (unsigned long i = 0; i < e / k; ++i) a *= p;
    for (unsigned long i = 0; i < e % k; ++i) s *= p;
  }
  if (n > 1) {
    mpz_class r;
    if (mpz_root(r.get_mpz_t(), n.get_mpz_t(), k))
      a *= r;
    else
      s *= n;
  }
}

// Conjugate multiplication needs the companion relation v^k = payload.
struct Relation {
  VarRef v;
  long k;
  Poly rn, rd;  // v^k = rn / rd
};

struct Rewritten {
  Poly p;
  long den_power = 0;
};

Rewritten apply_relation(const Poly& p, const Relation& rel) {
  long top = 0;
  for (const auto& [m, c] : p.terms()) top = std::max(top, exponent_of(m, rel.v->key) / rel.k);
  std::vector<Poly> rn_pow{Poly(Rational(1))}, rd_pow{Poly(Rational(1))};
  for (long i = 1; i <= top; ++i) {
    rn_pow.push_back(rn_pow.back() * rel.rn);
    rd_pow.push_back(rd_pow.back() * rel.rd);
  }
  Rewritten out;
  out.den_power = top;
  for (const auto& [m, c] : p.terms()) {
    long e = exponent_of(m, rel.v->key);
    long q = e / rel.k, r = e % rel.k;
    Monomial rest = without(m, rel.v->key);
    Poly t = Poly::term(rest, c) * Poly::variable(rel.v, r);
    out.p = out.p + t * rn_pow[q] * rd_pow[top - q];
  }
  return out;
}

std::optional<RatFunc> apply_relation(const Poly& num, const Poly& den, const Relation& rel) {
  Rewritten n = apply_relation(num, rel), d = apply_relation(den, rel);
  Poly nn = n.p * rel.rd.pow(d.den_power);
  Poly dd = d.p * rel.rd.pow(n.den_power);
  if (dd.is_zero()) return std::nullopt;
  return RatFunc::make(std::move(nn), std::move(dd));
}

class Normalizer {
 public:
  explicit Normalizer(const NormalizeContext& ctx) : ctx_(ctx) {}

  RatFunc run(const Expr& e) { return reduce(raw(e)); }

 private:
  RatFunc raw(const Expr& e) {
    switch (e.kind()) {
      case Kind::Const: return RatFunc(e.value());
      case Kind::Time:
      case Kind::State:
      case Kind::Param:
      case Kind::Init: return atom(symbol_var(e));
      case Kind::Neg: return -run(e.child(0));
      case Kind::Add: return reduce(run(e.child(0)) + run(e.child(1)));
      case Kind::Mul: return reduce(run(e.child(0)) * run(e.child(1)));
      case Kind::Div: {
        RatFunc d = run(e.child(1));
        if (d.is_zero()) return opaque(Expr::div(to_expr(run(e.child(0))), Expr::constant(Rational(0))));
        return reduce(run(e.child(0)) / d);
      }
      case Kind::Pow: {
        RatFunc b = run(e.child(0)), x = run(e.child(1));
        return power(b, x, Expr::pow(to_expr(b), to_expr(x)));
      }
      case Kind::Func: {
        RatFunc a = run(e.child(0));
        return function(e.name(), a, Expr::func(e.name(), to_expr(a)));
      }
      case Kind::Tuple: throw Error("cannot normalize a tuple");
    }
    return opaque(e);
  }

  RatFunc opaque(const Expr& e) { return atom(make_var(Tag::Opaque, e)); }

  RatFunc power(const RatFunc& b, const RatFunc& x, const Expr& orig) {
    if (auto r = x.constant()) {
      if (r->is_integer()) {
        auto n = r->to_long();
        if (!n || (b.is_zero() && *n < 0)) return opaque(orig);
        return b.pow(*n);
      }
      return root_power(b, *r, orig);
    }
    if (b.is_zero()) return opaque(orig);
    if (b.constant() && b.constant()->is_one()) return RatFunc(Rational(1));
    Rational c0 = 0;
    if (x.den().is_constant()) c0 = x.num().constant_value();
    RatFunc rest = x - RatFunc(c0);
    RatFunc head = c0.is_zero() ? RatFunc(Rational(1)) : power(b, RatFunc(c0), orig);
    return reduce(head * exp_of(rest * ln_of(b)));
  }

  RatFunc root_power(const RatFunc& b, const Rational& r, const Expr& orig) {
    auto pl = r.numerator(), kl = r.denominator();
    if (!pl.fits_slong_p() || !kl.fits_ulong_p() || kl > 1000) return opaque(orig);
    long p = pl.get_si();
    long k = static_cast<long>(kl.get_ui());
    if (b.is_zero()) return p > 0 ? RatFunc() : opaque(orig);
    if (auto c = b.constant()) {
      if (c->sign() < 0) return opaque(orig);
      mpz_class n = c->numerator(), d = c->denominator();
      mpz_class dk;
      mpz_pow_ui(dk.get_mpz_t(), d.get_mpz_t(), static_cast<unsigned long>(k - 1));
      n *= dk;
      mpz_class a, s;
      split_power(n, static_cast<unsigned long>(k), a, s);
      Rational scale(mpq_class(a, d));
      RatFunc coeff(*scale.pow(p));
      if (s == 1) return coeff;
      Rational rs{mpq_class(s)};
      long q = p >= 0 ? p / k : -((-p + k - 1) / k);
      long rem = p - q * k;
      VarRef v = make_var(Tag::Root, Expr::pow(Expr::constant(rs), Expr::constant(Rational(1, k))),
                          RatFunc(rs), k);
      return coeff * RatFunc(*rs.pow(q)) * atom(v, rem);
    }
    VarRef v = make_var(Tag::Root, Expr::pow(to_expr(b), Expr::constant(Rational(1, k))), b, k);
    return reduce(atom(v, p));
  }

  RatFunc exp_of(const RatFunc& a) {
    if (a.is_zero()) return RatFunc(Rational(1));
    if (!a.den().is_constant()) return atom(make_var(Tag::Exp, Expr::func("exp", to_expr(a)), a));
    RatFunc out(Rational(1));
    for (const auto& [m, c] : a.num().terms()) {
      Rational unit(mpq_class(1, c.denominator()));
      RatFunc x(Poly::term(m, unit));
      VarRef v = make_var(Tag::Exp, Expr::func("exp", to_expr(x)), x);
      mpz_class n = c.numerator();
      if (!n.fits_slong_p()) return atom(make_var(Tag::Exp, Expr::func("exp", to_expr(a)), a));
      out = out * atom(v, n.get_si());
    }
    return out;
  }

  static bool exp_monomial(const Monomial& m) {
    return std::all_of(m.begin(), m.end(), [](const auto& p) { return p.first->tag == Tag::Exp; });
  }

  RatFunc ln_of(const RatFunc& a) {
    if (auto c = a.constant(); c && c->is_one()) return RatFunc();
    const Poly& n = a.num();
    const Poly& d = a.den();
    if (n.terms().size() == 1 && d.terms().size() == 1 && n.leading_coefficient().sign() > 0 &&
        exp_monomial(n.leading_monomial()) && exp_monomial(d.leading_monomial()) &&
        !(n.leading_monomial().empty() && d.leading_monomial().empty())) {
      RatFunc out = ln_of(RatFunc(n.leading_coefficient()));
      for (const auto& [v, e] : n.leading_monomial()) out = out + *v->payload * RatFunc(Rational(e));
      for (const auto& [v, e] : d.leading_monomial()) out = out - *v->payload * RatFunc(Rational(e));
      return out;
    }
    return atom(make_var(Tag::Ln, Expr::func("ln", to_expr(a)), a));
  }

  RatFunc function(const std::string& name, const RatFunc& a, const Expr& orig) {
    if (name == "sin") {
      if (a.is_zero()) return RatFunc();
      if (leading_negative(a)) return -function(name, -a, orig);
      return atom(make_var(Tag::Sin, Expr::func("sin", to_expr(a)), a));
    }
    if (name == "cos") {
      if (a.is_zero()) return RatFunc(Rational(1));
      if (leading_negative(a)) return function(name, -a, orig);
      return atom(make_var(Tag::Cos, Expr::func("cos", to_expr(a)), a));
    }
    if (name == "tan") {
      RatFunc c = function("cos", a, orig);
      if (c.is_zero()) return opaque(orig);
      return reduce(function("sin", a, orig) / c);
    }
    if (name == "sqrt") return root_power(a, Rational(1, 2), orig);
    if (name == "exp") return exp_of(a);
    if (name == "ln") {
      if (a.is_zero()) return opaque(orig);
      return ln_of(a);
    }
    if (name == "arcsin") {
      if (a.is_zero()) return RatFunc();
      if (leading_negative(a)) return -function(name, -a, orig);
    }
    return atom(make_var(Tag::Func, Expr::func(name, to_expr(a)), a));
  }

  bool reducible_root(const Var& v) const {
    if (v.tag != Tag::Root) return false;
    if (auto c = v.payload->constant()) return c->sign() > 0;
    return ctx_.known_nonnegative(*v.payload);
  }

  Relation relation_for(const VarRef& v) const {
    if (v->tag == Tag::Cos) {
      Expr s = Expr::func("sin", v->expr.child(0));
      VarRef sv = make_var(Tag::Sin, s, *v->payload);
      return {v, 2, Poly(Rational(1)) - Poly::variable(sv, 2), Poly(Rational(1))};
    }
    return {v, v->root_index, v->payload->num(), v->payload->den()};
  }

  // Applies cos^2 = 1 - sin^2 and root relations until stable, then clears
  // such atoms from the denominator by conjugate multiplication.
  RatFunc reduce(RatFunc f) {
    for (int round = 0; round < 64; ++round) {
      bool changed = false;
      auto vars = f.num().variables();
      for (const auto& kv : f.den().variables()) vars.insert(kv);
      for (const auto& [key, v] : vars) {
        bool eligible = v->tag == Tag::Cos || reducible_root(*v);
        if (!eligible) continue;
        Relation rel = relation_for(v);
        long top = std::max(f.num().degree_in(key), f.den().degree_in(key));
        if (top >= rel.k) {
          if (auto g = apply_relation(f.num(), f.den(), rel)) {
            f = std::move(*g);
            changed = true;
            break;
          }
        }
        if (rel.k == 2 && f.den().degree_in(key) == 1) {
          auto cs = f.den().coefficients_in(key);
          Poly conj = cs[0] - cs[1] * Poly::variable(v);
          if (auto g = apply_relation(f.num() * conj, f.den() * conj, rel); g && !(*g == f)) {
            f = std::move(*g);
            changed = true;
            break;
          }
        }
      }
      if (!changed) break;
    }
    return f;
  }

  const NormalizeContext& ctx_;
};

}  // namespace

void NormalizeContext::assume_nonnegative(const Expr& e) {
  nonnegative.insert(to_string(normalize(e, *this)));
}

bool NormalizeContext::known_nonnegative(const RatFunc& f) const {
  if (auto c = f.constant()) return c->sign() >= 0;
  return nonnegative.count(to_string(f)) > 0;
}

CanonForm normalize(const Expr& e, const NormalizeContext& ctx) {
  BudgetScope scope;
  return Normalizer(ctx).run(e);
}

std::string_view verdict_name(Verdict v) {
  return v == Verdict::Equal ? "Equal" : "NotEqualInNormalForm";
}

Verdict equal(const Expr& a, const Expr& b, const NormalizeContext& ctx) {
  if (a == b) return Verdict::Equal;
  if (a.kind() == Kind::Tuple || b.kind() == Kind::Tuple) {
    if (a.kind() != b.kind() || a.children().size() != b.children().size())
      return Verdict::NotEqualInNormalForm;
    for (std::size_t i = 0; i < a.children().size(); ++i)
      if (equal(a.child(i), b.child(i), ctx) != Verdict::Equal) return Verdict::NotEqualInNormalForm;
    return Verdict::Equal;
  }
  try {
    return normalize(Expr::add(a, Expr::neg(b)), ctx).is_zero() ? Verdict::Equal
                                                                : Verdict::NotEqualInNormalForm;
  } catch (const NormalFormTooLarge&) {
    return Verdict::NotEqualInNormalForm;
  }
}

std::size_t op_count_of_goal(const Expr& a, const Expr& b) {
  return count_operators(a) + count_operators(b);
}

}  // namespace odecert::canon
