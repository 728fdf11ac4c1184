#pragma once

#include "qlab/qform.hpp"
#include "qlab/rng.hpp"

#include <string>

namespace qtest {

using qlab::operator*;

using qlab::Rational;

inline Rational q(long n, long d = 1) { return qlab::make_rational(n, d); }

/// Pair from the coefficients (A..F) of both forms.
inline qlab::QuadraticPair pair_from_coeffs(std::array<Rational, 6> f1, std::array<Rational, 6> f2)
{
    auto mk = [](const std::array<Rational, 6>& f) {
        return qlab::SymMatrix3::from_form({f[0], f[1], f[2], f[3], f[4], f[5]});
    };
    return qlab::QuadraticPair(mk(f1), mk(f2));
}

// (r^2+s^2, st)
inline qlab::QuadraticPair pair_r2s2_st() { return pair_from_coeffs({q(1), q(1), q(0), q(0), q(0), q(0)}, {q(0), q(0), q(0), q(0), q(0), q(1)}); }
// (r^2+s^2+t^2, rs+rt+st)
inline qlab::QuadraticPair pair_sum_sq() { return pair_from_coeffs({q(1), q(1), q(1), q(0), q(0), q(0)}, {q(0), q(0), q(0), q(1), q(1), q(1)}); }
// (r^2, s^2)
inline qlab::QuadraticPair pair_r2_s2() { return pair_from_coeffs({q(1), q(0), q(0), q(0), q(0), q(0)}, {q(0), q(1), q(0), q(0), q(0), q(0)}); }

inline Rational random_rational(qlab::Stream& rng, long num_bound = 9, long den_bound = 5)
{
    const long n = static_cast<long>(rng.below(2 * num_bound + 1)) - num_bound;
    const long d = 1 + static_cast<long>(rng.below(den_bound));
    return q(n, d);
}

/// Random unimodular integer matrix: a product of elementary shears and
/// signed permutations.
inline qlab::Mat3Q random_unimodular(qlab::Stream& rng)
{
    qlab::Mat3Q m = qlab::identity3();
    for (int k = 0; k < 6; ++k) {
        qlab::Mat3Q e = qlab::identity3();
        const int i = static_cast<int>(rng.below(3));
        int j = static_cast<int>(rng.below(2));
        if (j >= i)
            ++j;
        e[i][j] = static_cast<long>(rng.below(5)) - 2;
        m = m * e;
    }
    if (rng.below(2))
        for (auto& row : m)
            std::swap(row[0], row[2]);
    return m;
}

} // namespace qtest
