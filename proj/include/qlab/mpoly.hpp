#pragma once

#include "qlab/rational.hpp"

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace qlab {

/// Sparse multivariate polynomial over Q in a fixed number of variables.
/// Used for the generic-indeterminate identity checks, where every
/// coefficient (A..F, alpha, beta, gamma, r, s, s0) is a symbol.
class MPoly {
public:
    using Monomial = std::vector<unsigned>;

    explicit MPoly(std::size_t nvars = 0) : nvars_(nvars) {}

    static MPoly constant(std::size_t nvars, const Rational& c);
    static MPoly variable(std::size_t nvars, std::size_t index);

    std::size_t nvars() const { return nvars_; }
    bool is_zero() const { return terms_.empty(); }
    unsigned total_degree() const;
    unsigned degree_in(std::size_t var) const;
    std::size_t term_count() const { return terms_.size(); }
    const std::map<Monomial, Rational>& terms() const { return terms_; }

    /// Polynomial multiplying var^power, with var eliminated (exponent 0).
    MPoly coefficient_of(std::size_t var, unsigned power) const;

    /// Substitutes values for every variable.
    Rational evaluate(std::span<const Rational> values) const;

    /// Substitutes a value for one variable only.
    MPoly substitute(std::size_t var, const Rational& value) const;

    MPoly& operator+=(const MPoly& o);
    MPoly& operator-=(const MPoly& o);
    MPoly& operator*=(const Rational& s);

    friend MPoly operator+(MPoly a, const MPoly& b) { return a += b; }
    friend MPoly operator-(MPoly a, const MPoly& b) { return a -= b; }
    friend MPoly operator-(MPoly a) { return a *= Rational(-1); }
    friend MPoly operator*(const MPoly& a, const MPoly& b);
    friend MPoly operator*(const Rational& s, MPoly a) { return a *= s; }
    friend MPoly operator*(MPoly a, const Rational& s) { return a *= s; }
    friend bool operator==(const MPoly& a, const MPoly& b) { return a.nvars_ == b.nvars_ && a.terms_ == b.terms_; }

    std::string to_string(std::span<const std::string> names) const;

private:
    void add_term(const Monomial& m, const Rational& c);

    std::size_t nvars_;
    std::map<Monomial, Rational> terms_;
};

} // namespace qlab
