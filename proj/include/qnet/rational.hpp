#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <string_view>

namespace qnet {

/// Exact rational scalar used by every construction and by the exact evaluator.
using Rational = mpq_class;

/// Parses "p/q", "p" or a decimal such as "-0.25". Throws std::invalid_argument.
Rational parse_rational(std::string_view text);

/// num/den in canonical form (den != 0).
Rational ratio(long num, long den);

/// Canonical "p/q" form; integers are written as "p/1".
std::string format_rational(const Rational& value);

/// 2^exponent for any integer exponent.
Rational pow2(int exponent);

Rational abs(const Rational& value);

/// Nearest integral multiple of 2^-bits; exact ties go toward zero.
Rational round_to_dyadic(const Rational& value, int bits);

/// Nearest integral multiple of `step` (step > 0); ties go toward zero.
Rational round_to_multiple(const Rational& value, const Rational& step);

/// ceil(value / step) * step.
Rational ceil_to_multiple(const Rational& value, const Rational& step);

mpz_class floor_div(const Rational& value);
mpz_class ceil_div(const Rational& value);

/// True when the denominator is a power of two.
bool is_dyadic(const Rational& value);

/// Smallest k >= 0 with 2^k >= value (value > 0 integer-valued or not).
int ceil_log2(const Rational& value);

double to_double(const Rational& value);

}  // namespace qnet
