#include "qnet/rational.hpp"

#include <stdexcept>

namespace qnet {

Rational parse_rational(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty rational literal");
  std::string s(text);
  if (auto dot = s.find('.'); dot != std::string::npos && s.find('/') == std::string::npos) {
    // Decimal literal: digits after the point become a power-of-ten denominator.
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    std::size_t places = s.size() - dot - 1;
    if (digits.empty() || digits == "-" || places == 0) {
      throw std::invalid_argument("invalid decimal literal '" + s + "'");
    }
    s = digits + "/1" + std::string(places, '0');
  }
  for (char c : s) {
    if (!(c == '-' || c == '/' || (c >= '0' && c <= '9'))) {
      throw std::invalid_argument("invalid rational literal '" + s + "'");
    }
  }
  Rational value;
  if (value.set_str(s, 10) != 0) {
    throw std::invalid_argument("invalid rational literal '" + s + "'");
  }
  if (value.get_den() == 0) throw std::invalid_argument("zero denominator in '" + s + "'");
  value.canonicalize();
  return value;
}

Rational ratio(long num, long den) {
  if (den == 0) throw std::invalid_argument("zero denominator");
  Rational value(num, den);
  value.canonicalize();
  return value;
}

std::string format_rational(const Rational& value) {
  return value.get_num().get_str() + "/" + value.get_den().get_str();
}

Rational pow2(int exponent) {
  mpz_class p = 1;
  unsigned shift = static_cast<unsigned>(exponent < 0 ? -exponent : exponent);
  mpz_mul_2exp(p.get_mpz_t(), p.get_mpz_t(), shift);
  if (exponent >= 0) return Rational(p);
  Rational r(mpz_class(1), p);
  r.canonicalize();
  return r;
}

Rational abs(const Rational& value) { return value < 0 ? Rational(-value) : value; }

mpz_class floor_div(const Rational& value) {
  mpz_class q;
  mpz_fdiv_q(q.get_mpz_t(), value.get_num_mpz_t(), value.get_den_mpz_t());
  return q;
}

mpz_class ceil_div(const Rational& value) {
  mpz_class q;
  mpz_cdiv_q(q.get_mpz_t(), value.get_num_mpz_t(), value.get_den_mpz_t());
  return q;
}

Rational round_to_multiple(const Rational& value, const Rational& step) {
  if (step <= 0) throw std::invalid_argument("rounding step must be positive");
  Rational scaled = abs(value) / step;
  mpz_class lo = floor_div(scaled);
  Rational frac = scaled - Rational(lo);
  mpz_class k = frac > Rational(1, 2) ? mpz_class(lo + 1) : lo;
  Rational out = Rational(k) * step;
  return value < 0 ? Rational(-out) : out;
}

Rational round_to_dyadic(const Rational& value, int bits) {
  return round_to_multiple(value, pow2(-bits));
}

Rational ceil_to_multiple(const Rational& value, const Rational& step) {
  if (step <= 0) throw std::invalid_argument("rounding step must be positive");
  return Rational(ceil_div(value / step)) * step;
}

bool is_dyadic(const Rational& value) {
  const mpz_class& den = value.get_den();
  return mpz_popcount(den.get_mpz_t()) == 1;
}

int ceil_log2(const Rational& value) {
  if (value <= 0) throw std::invalid_argument("ceil_log2 of non-positive value");
  int k = 0;
  while (pow2(k) < value) ++k;
  return k;
}

double to_double(const Rational& value) { return value.get_d(); }

}  // namespace qnet
