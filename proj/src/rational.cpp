#include "odecert/rational.hpp"

#include <cctype>
#include <stdexcept>

namespace odecert {

Rational::Rational(long num, long den) {
  if (den == 0) throw std::domain_error("rational with zero denominator");
  q_ = mpq_class(num, den);
  q_.canonicalize();
}

Rational::Rational(mpq_class q) : q_(std::move(q)) { q_.canonicalize(); }

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

}  // namespace

Rational Rational::parse(std::string_view text) {
  bool negative = false;
  if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  mpq_class q;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    auto num = text.substr(0, slash), den = text.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den))
      throw std::invalid_argument("malformed rational: " + std::string(text));
    mpz_class d{std::string(den), 10};
    if (d == 0) throw std::domain_error("rational with zero denominator");
    q = mpq_class(mpz_class(std::string(num), 10), d);
  } else if (auto dot = text.find('.'); dot != std::string_view::npos) {
    auto whole = text.substr(0, dot), frac = text.substr(dot + 1);
    if (!all_digits(whole) || !all_digits(frac))
      throw std::invalid_argument("malformed decimal: " + std::string(text));
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, frac.size());
    q = mpq_class(mpz_class(std::string(whole) + std::string(frac), 10), scale);
  } else {
    if (!all_digits(text)) throw std::invalid_argument("malformed integer: " + std::string(text));
    q = mpq_class(mpz_class(std::string(text), 10));
  }
  q.canonicalize();
  return Rational(negative ? mpq_class(-q) : q);
}

std::optional<long> Rational::to_long() const {
  if (!is_integer() || !q_.get_num().fits_slong_p()) return std::nullopt;
  return q_.get_num().get_si();
}

std::optional<Rational> Rational::pow(long exponent) const {
  if (exponent < 0) {
    if (is_zero()) return std::nullopt;
    return Rational(mpq_class(1) / q_).pow(-exponent);
  }
  mpz_class n, d;
  mpz_pow_ui(n.get_mpz_t(), q_.get_num_mpz_t(), static_cast<unsigned long>(exponent));
  mpz_pow_ui(d.get_mpz_t(), q_.get_den_mpz_t(), static_cast<unsigned long>(exponent));
  return Rational(mpq_class(n, d));
}

std::optional<Rational> Rational::exact_root(unsigned long k) const {
  if (k == 0) return std::nullopt;
  if (sign() < 0 && k % 2 == 0) return std::nullopt;
  mpz_class n = ::abs(q_.get_num()), d = q_.get_den(), rn, rd;
  if (mpz_root(rn.get_mpz_t(), n.get_mpz_t(), k) == 0) return std::nullopt;
  if (mpz_root(rd.get_mpz_t(), d.get_mpz_t(), k) == 0) return std::nullopt;
  if (sign() < 0) rn = -rn;
  return Rational(mpq_class(rn, rd));
}

std::string Rational::to_string() const { return q_.get_str(); }

Rational operator/(const Rational& a, const Rational& b) {
  if (b.is_zero()) throw std::domain_error("rational division by zero");
  return Rational(mpq_class(a.q_ / b.q_));
}

}  // namespace odecert
