#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "odecert/expr.hpp"

namespace odecert {

/// Conservative enclosure [lo, hi] of a real quantity. An open endpoint means
/// the bound itself is excluded. `maybe_undefined` is set when some point of
/// the input box leaves the expression undefined.
struct Interval {
  double lo = -HUGE_VAL;
  double hi = HUGE_VAL;
  bool lo_open = true;
  bool hi_open = true;
  bool maybe_undefined = false;

  static Interval whole() { return {}; }
  static Interval point(double v) { return {v, v, false, false, false}; }
  /// Outward enclosure of an exact rational.
  static Interval of(const Rational& q);

  bool empty() const { return lo > hi || (lo == hi && (lo_open || hi_open)); }
  bool positive() const { return lo > 0 || (lo == 0 && lo_open); }
  bool negative() const { return hi < 0 || (hi == 0 && hi_open); }
  bool nonnegative() const { return lo >= 0; }
  bool nonzero() const { return positive() || negative(); }
  /// True when every point of *this lies in o.
  bool within(const Interval& o) const;

  std::string to_string() const;
};

Interval operator+(const Interval& a, const Interval& b);
Interval operator-(const Interval& a);
Interval operator*(const Interval& a, const Interval& b);
Interval operator/(const Interval& a, const Interval& b);
Interval pow(const Interval& a, long n);
Interval apply_function(std::string_view function, const Interval& a);

using Box = std::map<Symbol, Interval>;

/// Interval image of e over the box; unbound symbols range over the whole line.
Interval enclose(const Expr& e, const Box& box);

/// A real interval with expression bounds, e.g. "R", "(0,inf)", "[a,b)".
/// A missing bound is infinite.
struct IntervalSpec {
  std::optional<Expr> lo, hi;
  bool lo_closed = false, hi_closed = false;

  static IntervalSpec whole() { return {}; }
  /// Throws SyntaxError.
  static IntervalSpec parse(std::string_view text);
  bool is_whole() const { return !lo && !hi; }
  std::string to_string() const;
  /// Enclosure of the set, given enclosures for symbols in the bounds.
  Interval enclose(const Box& box = {}) const;

  friend bool operator==(const IntervalSpec& a, const IntervalSpec& b);
};

}  // namespace odecert
