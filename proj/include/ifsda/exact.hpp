#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ifsda {

using Integer = mpz_class;
using Rational = mpq_class;
using RationalVector = std::vector<Rational>;

/// Exact rational value of a finite double (every finite double is a dyadic rational).
Rational to_rational(double x);

double to_double(const Rational& x);

/// "num/den" in lowest terms; integers print without a denominator.
std::string to_string(const Rational& x);
std::string to_string(const RationalVector& x);

/// Accepts "p/q", "p", or a vector "(a, b/c)". Throws std::invalid_argument.
Rational parse_rational(std::string_view text);
RationalVector parse_rational_vector(std::string_view text);

Integer pow(const Integer& base, unsigned long exponent);

/// Squared Euclidean distance, exact.
Rational squared_distance(const RationalVector& a, const RationalVector& b);

/// Lexicographic order on equal-length vectors.
bool lex_less(const RationalVector& a, const RationalVector& b);

}  // namespace ifsda
