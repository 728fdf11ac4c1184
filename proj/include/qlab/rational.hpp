#pragma once

#include <gmpxx.h>

#include <array>
#include <string>
#include <string_view>

namespace qlab {

/// Exact rational. mpq_class keeps the denominator positive and the fraction
/// reduced after every arithmetic operation; values built by hand must go
/// through make_rational() so that the same holds for them.
using Rational = mpq_class;

using Vec3Q = std::array<Rational, 3>;

Rational make_rational(long num, long den = 1);

/// Parses "p/q", an integer, or a decimal ("-0.125", "1e-3") exactly.
/// Throws SchemaError on malformed input or a zero denominator.
Rational parse_rational(std::string_view text);

std::string to_string(const Rational& q);

inline double to_double(const Rational& q) { return q.get_d(); }

inline int sign(const Rational& q) { return sgn(q); }

inline Rational abs_q(const Rational& q) { return abs(q); }

} // namespace qlab
