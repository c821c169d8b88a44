#include "odecert/interval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "odecert/deriv.hpp"
#include "odecert/errors.hpp"
#include "odecert/parser.hpp"

namespace odecert {

namespace {

constexpr double kInf = HUGE_VAL;
constexpr double kPi = 3.141592653589793;

double down(double x) { return std::isfinite(x) ? std::nextafter(x, -kInf) : x; }
double up(double x) { return std::isfinite(x) ? std::nextafter(x, kInf) : x; }
double down2(double x) { return down(down(x)); }
double up2(double x) { return up(up(x)); }

bool sum_exact(double a, double b, double s) {
  if (!std::isfinite(s)) return true;
  double bb = s - a;
  return (a - (s - bb)) + (b - bb) == 0;
}

struct End {
  double v;
  bool open;
};

// Product of two endpoints, with 0 * inf = 0.
struct Corner {
  double v;
  bool open;
  bool exact;
};

Corner corner(End x, End y) {
  if (x.v == 0 || y.v == 0) {
    bool attained = (x.v == 0 && !x.open) || (y.v == 0 && !y.open);
    return {0.0, !attained, true};
  }
  double p = x.v * y.v;
  bool exact = !std::isfinite(p) || std::fma(x.v, y.v, -p) == 0;
  return {p, x.open || y.open, exact};
}

Interval merge_defined(Interval r, const Interval& a, const Interval& b) {
  r.maybe_undefined = r.maybe_undefined || a.maybe_undefined || b.maybe_undefined;
  return r;
}

Interval abs_of(const Interval& a) {
  if (a.lo >= 0) return a;
  if (a.hi <= 0) return -a;
  Interval r;
  r.lo = 0;
  r.lo_open = false;
  if (-a.lo > a.hi) {
    r.hi = -a.lo;
    r.hi_open = a.lo_open;
  } else if (-a.lo < a.hi) {
    r.hi = a.hi;
    r.hi_open = a.hi_open;
  } else {
    r.hi = a.hi;
    r.hi_open = a.hi_open && a.lo_open;
  }
  r.maybe_undefined = a.maybe_undefined;
  return r;
}

Interval reciprocal(const Interval& b) {
  Interval r;
  r.maybe_undefined = b.maybe_undefined;
  if (!b.nonzero()) {
    r.maybe_undefined = true;
    return r;
  }
  // b lies entirely on one side of zero; 1/x is decreasing there.
  auto inv = [](double x, bool round_up) {
    if (x == 0) return round_up ? kInf : -kInf;
    if (std::isinf(x)) return 0.0;
    double q = 1.0 / x;
    bool exact = std::fma(q, x, -1.0) == 0;
    return exact ? q : (round_up ? up(q) : down(q));
  };
  r.lo = inv(b.hi, false);
  r.lo_open = b.hi_open;
  r.hi = inv(b.lo, true);
  r.hi_open = b.lo_open;
  if (b.hi == 0) r.lo = -kInf, r.lo_open = true;
  if (b.lo == 0) r.hi = kInf, r.hi_open = true;
  if (std::isinf(b.hi)) r.lo_open = true;
  if (std::isinf(b.lo)) r.hi_open = true;
  return r;
}

Interval monotone(const Interval& a, double (*f)(double), bool increasing) {
  Interval r;
  double flo = f(a.lo), fhi = f(a.hi);
  if (increasing) {
    r.lo = down2(flo), r.hi = up2(fhi);
    r.lo_open = a.lo_open, r.hi_open = a.hi_open;
  } else {
    r.lo = down2(fhi), r.hi = up2(flo);
    r.lo_open = a.hi_open, r.hi_open = a.lo_open;
  }
  r.maybe_undefined = a.maybe_undefined;
  return r;
}

// Whether some phase + 2k*pi lies in [lo, hi], slightly widened.
bool hits(double lo, double hi, double phase) {
  const double eps = 1e-9;
  double k = std::ceil((lo - eps - phase) / (2 * kPi));
  return phase + 2 * kPi * k <= hi + eps;
}

Interval periodic(const Interval& a, double (*f)(double), double max_at, double min_at) {
  Interval r;
  r.maybe_undefined = a.maybe_undefined;
  r.lo_open = r.hi_open = false;
  if (!std::isfinite(a.lo) || !std::isfinite(a.hi) || a.hi - a.lo >= 2 * kPi) {
    r.lo = -1, r.hi = 1;
    return r;
  }
  double x = f(a.lo), y = f(a.hi);
  r.lo = std::max(-1.0, down2(std::min(x, y)));
  r.hi = std::min(1.0, up2(std::max(x, y)));
  if (hits(a.lo, a.hi, max_at)) r.hi = 1;
  if (hits(a.lo, a.hi, min_at)) r.lo = -1;
  return r;
}

}  // namespace

Interval Interval::of(const Rational& q) {
  double d = q.to_double();
  if (Rational(mpq_class(d)) == q) return point(d);
  return {down(d), up(d), false, false, false};
}

bool Interval::within(const Interval& o) const {
  bool lo_ok = lo > o.lo || (lo == o.lo && (!o.lo_open || lo_open));
  bool hi_ok = hi < o.hi || (hi == o.hi && (!o.hi_open || hi_open));
  return lo_ok && hi_ok;
}

std::string Interval::to_string() const {
  std::ostringstream os;
  os.precision(17);
  os << (lo_open ? '(' : '[') << lo << ", " << hi << (hi_open ? ')' : ']');
  if (maybe_undefined) os << '?';
  return os.str();
}

Interval operator+(const Interval& a, const Interval& b) {
  Interval r;
  double lo = a.lo + b.lo, hi = a.hi + b.hi;
  r.lo = sum_exact(a.lo, b.lo, lo) ? lo : down(lo);
  r.hi = sum_exact(a.hi, b.hi, hi) ? hi : up(hi);
  r.lo_open = a.lo_open || b.lo_open;
  r.hi_open = a.hi_open || b.hi_open;
  return merge_defined(r, a, b);
}

Interval operator-(const Interval& a) {
  Interval r = a;
  r.lo = -a.hi, r.hi = -a.lo;
  r.lo_open = a.hi_open, r.hi_open = a.lo_open;
  return r;
}

Interval operator*(const Interval& a, const Interval& b) {
  Corner cs[4] = {corner({a.lo, a.lo_open}, {b.lo, b.lo_open}),
                  corner({a.lo, a.lo_open}, {b.hi, b.hi_open}),
                  corner({a.hi, a.hi_open}, {b.lo, b.lo_open}),
                  corner({a.hi, a.hi_open}, {b.hi, b.hi_open})};
  Interval r;
  r.lo = kInf, r.hi = -kInf;
  for (const auto& c : cs) r.lo = std::min(r.lo, c.v), r.hi = std::max(r.hi, c.v);
  r.lo_open = r.hi_open = true;
  bool lo_exact = true, hi_exact = true;
  for (const auto& c : cs) {
    if (c.v == r.lo) r.lo_open = r.lo_open && c.open, lo_exact = lo_exact && c.exact;
    if (c.v == r.hi) r.hi_open = r.hi_open && c.open, hi_exact = hi_exact && c.exact;
  }
  if (!lo_exact) r.lo = down(r.lo);
  if (!hi_exact) r.hi = up(r.hi);
  if (std::isinf(r.lo)) r.lo_open = true;
  if (std::isinf(r.hi)) r.hi_open = true;
  return merge_defined(r, a, b);
}

Interval operator/(const Interval& a, const Interval& b) {
  Interval inv = reciprocal(b);
  if (!b.nonzero()) return merge_defined(inv, a, b);
  return a * inv;
}

Interval pow(const Interval& a, long n) {
  if (n == 0) {
    Interval r = Interval::point(1);
    r.maybe_undefined = a.maybe_undefined;
    return r;
  }
  if (n < 0) return reciprocal(pow(a, -n));
  Interval base = n % 2 == 0 ? abs_of(a) : a;
  Interval r = base;
  for (long i = 1; i < n; ++i) r = r * base;
  if (n % 2 == 0 && r.lo < 0) r.lo = 0, r.lo_open = false;
  return r;
}

Interval apply_function(std::string_view f, const Interval& a) {
  if (f == "exp") {
    Interval r = monotone(a, [](double x) { return std::exp(x); }, true);
    if (r.lo <= 0) r.lo = 0, r.lo_open = true;
    return r;
  }
  if (f == "ln") {
    if (a.hi <= 0) {
      Interval r;
      r.maybe_undefined = true;
      return r;
    }
    Interval d = a;
    if (!a.positive()) d.lo = 0, d.lo_open = true, d.maybe_undefined = true;
    Interval r = monotone(d, [](double x) { return std::log(x); }, true);
    if (d.lo == 0) r.lo = -kInf, r.lo_open = true;
    return r;
  }
  if (f == "sqrt") {
    if (a.hi < 0) {
      Interval r;
      r.maybe_undefined = true;
      return r;
    }
    Interval d = a;
    if (a.lo < 0) d.lo = 0, d.lo_open = false, d.maybe_undefined = true;
    Interval r = monotone(d, [](double x) { return std::sqrt(x); }, true);
    if (r.lo < 0) r.lo = 0, r.lo_open = d.lo_open;
    return r;
  }
  if (f == "sin") return periodic(a, [](double x) { return std::sin(x); }, kPi / 2, -kPi / 2);
  if (f == "cos") return periodic(a, [](double x) { return std::cos(x); }, 0, kPi);
  if (f == "tan") {
    if (!std::isfinite(a.lo) || !std::isfinite(a.hi) || a.hi - a.lo >= kPi ||
        hits(a.lo, a.hi, kPi / 2) || hits(a.lo, a.hi, -kPi / 2)) {
      Interval r;
      r.maybe_undefined = true;
      return r;
    }
    return monotone(a, [](double x) { return std::tan(x); }, true);
  }
  if (f == "arcsin") {
    if (a.lo > 1 || a.hi < -1) {
      Interval r;
      r.maybe_undefined = true;
      return r;
    }
    Interval d = a;
    if (a.lo < -1) d.lo = -1, d.lo_open = false, d.maybe_undefined = true;
    if (a.hi > 1) d.hi = 1, d.hi_open = false, d.maybe_undefined = true;
    Interval r = monotone(d, [](double x) { return std::asin(x); }, true);
    r.lo = std::max(r.lo, -kPi / 2 - 1e-15);
    r.hi = std::min(r.hi, kPi / 2 + 1e-15);
    return r;
  }
  Interval r;
  r.maybe_undefined = true;
  return r;
}

namespace {

// base^c for a constant non-integer c.
Interval real_power(const Interval& b, const Rational& c) {
  double e = c.to_double();
  if (c.sign() < 0) return reciprocal(real_power(b, -c));
  if (b.hi < 0) {
    Interval r;
    r.maybe_undefined = true;
    return r;
  }
  Interval d = b;
  if (b.lo < 0) d.lo = 0, d.lo_open = false, d.maybe_undefined = true;
  Interval r;
  r.lo = std::max(0.0, down2(std::pow(d.lo, e)));
  r.hi = up2(std::pow(d.hi, e));
  r.lo_open = d.lo_open;
  r.hi_open = d.hi_open;
  r.maybe_undefined = d.maybe_undefined;
  return r;
}

}  // namespace

Interval enclose(const Expr& e, const Box& box) {
  switch (e.kind()) {
    case Kind::Const: return Interval::of(e.value());
    case Kind::Time:
    case Kind::State:
    case Kind::Param:
    case Kind::Init: {
      auto it = box.find(e.as_symbol());
      return it == box.end() ? Interval::whole() : it->second;
    }
    case Kind::Neg: return -enclose(e.child(0), box);
    case Kind::Add: return enclose(e.child(0), box) + enclose(e.child(1), box);
    case Kind::Mul: {
      if (e.child(0) == e.child(1)) return pow(enclose(e.child(0), box), 2);
      return enclose(e.child(0), box) * enclose(e.child(1), box);
    }
    case Kind::Div: return enclose(e.child(0), box) / enclose(e.child(1), box);
    case Kind::Pow: {
      Interval b = enclose(e.child(0), box);
      if (auto q = exact_constant(e.child(1))) {
        if (q->is_integer()) {
          if (auto n = q->to_long()) return pow(b, *n);
        } else {
          return real_power(b, *q);
        }
      }
      Interval x = enclose(e.child(1), box);
      Interval r = apply_function("exp", x * apply_function("ln", b));
      return r;
    }
    case Kind::Func: return apply_function(e.name(), enclose(e.child(0), box));
    case Kind::Tuple: break;
  }
  Interval r;
  r.maybe_undefined = true;
  return r;
}

// ---------------------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<Expr> parse_bound(const std::string& s, std::size_t offset, bool upper) {
  if (s == "inf" || s == "+inf" || s == "oo") {
    if (!upper) throw SyntaxError(offset, "finite or -inf lower bound");
    return std::nullopt;
  }
  if (s == "-inf" || s == "-oo") {
    if (upper) throw SyntaxError(offset, "finite or inf upper bound");
    return std::nullopt;
  }
  try {
    return parse_expr(s);
  } catch (const SyntaxError& e) {
    throw SyntaxError(offset + e.position(), e.expected());
  }
}

}  // namespace

IntervalSpec IntervalSpec::parse(std::string_view text) {
  std::string s = trim(text);
  if (s == "R" || s == "reals" || s == "(-inf,inf)") return whole();
  if (s.size() < 2 || (s.front() != '(' && s.front() != '[')) throw SyntaxError(0, "'(' or '['");
  if (s.back() != ')' && s.back() != ']') throw SyntaxError(s.size() - 1, "')' or ']'");
  int depth = 0;
  std::size_t comma = std::string::npos;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') --depth;
    if (s[i] == ',' && depth == 0) {
      if (comma != std::string::npos) throw SyntaxError(i, "single ','");
      comma = i;
    }
  }
  if (comma == std::string::npos) throw SyntaxError(s.size() - 1, "','");
  IntervalSpec r;
  r.lo_closed = s.front() == '[';
  r.hi_closed = s.back() == ']';
  r.lo = parse_bound(trim(s.substr(1, comma - 1)), 1, false);
  r.hi = parse_bound(trim(s.substr(comma + 1, s.size() - comma - 2)), comma + 1, true);
  if (!r.lo) r.lo_closed = false;
  if (!r.hi) r.hi_closed = false;
  return r;
}

std::string IntervalSpec::to_string() const {
  if (is_whole()) return "R";
  std::string out;
  out += lo_closed ? '[' : '(';
  out += lo ? odecert::to_string(*lo) : "-inf";
  out += ',';
  out += hi ? odecert::to_string(*hi) : "inf";
  out += hi_closed ? ']' : ')';
  return out;
}

Interval IntervalSpec::enclose(const Box& box) const {
  Interval r;
  if (lo) {
    Interval l = odecert::enclose(*lo, box);
    r.lo = l.lo;
    r.lo_open = !lo_closed || l.lo_open;
  }
  if (hi) {
    Interval h = odecert::enclose(*hi, box);
    r.hi = h.hi;
    r.hi_open = !hi_closed || h.hi_open;
  }
  return r;
}

bool operator==(const IntervalSpec& a, const IntervalSpec& b) {
  return a.lo == b.lo && a.hi == b.hi && a.lo_closed == b.lo_closed && a.hi_closed == b.hi_closed;
}

}  // namespace odecert
