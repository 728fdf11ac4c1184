#include "qlab/mpoly.hpp"

#include "qlab/errors.hpp"

#include <algorithm>
#include <sstream>

namespace qlab {

MPoly MPoly::constant(std::size_t nvars, const Rational& c)
{
    MPoly p(nvars);
    p.add_term(Monomial(nvars, 0), c);
    return p;
}

MPoly MPoly::variable(std::size_t nvars, std::size_t index)
{
    if (index >= nvars)
        throw Error("MPoly variable index out of range");
    MPoly p(nvars);
    Monomial m(nvars, 0);
    m[index] = 1;
    p.add_term(m, Rational(1));
    return p;
}

unsigned MPoly::total_degree() const
{
    unsigned d = 0;
    for (const auto& [m, c] : terms_) {
        unsigned s = 0;
        for (auto e : m)
            s += e;
        d = std::max(d, s);
    }
    return d;
}

unsigned MPoly::degree_in(std::size_t var) const
{
    unsigned d = 0;
    for (const auto& [m, c] : terms_)
        d = std::max(d, m[var]);
    return d;
}

MPoly MPoly::coefficient_of(std::size_t var, unsigned power) const
{
    MPoly out(nvars_);
    for (const auto& [m, c] : terms_) {
        if (m[var] != power)
            continue;
        Monomial mm = m;
        mm[var] = 0;
        out.add_term(mm, c);
    }
    return out;
}

Rational MPoly::evaluate(std::span<const Rational> values) const
{
    if (values.size() != nvars_)
        throw Error("MPoly::evaluate arity mismatch");
    Rational sum = 0;
    for (const auto& [m, c] : terms_) {
        Rational t = c;
        for (std::size_t i = 0; i < nvars_; ++i)
            for (unsigned e = 0; e < m[i]; ++e)
                t *= values[i];
        sum += t;
    }
    return sum;
}

MPoly MPoly::substitute(std::size_t var, const Rational& value) const
{
    MPoly out(nvars_);
    for (const auto& [m, c] : terms_) {
        Rational t = c;
        for (unsigned e = 0; e < m[var]; ++e)
            t *= value;
        Monomial mm = m;
        mm[var] = 0;
        out.add_term(mm, t);
    }
    return out;
}

void MPoly::add_term(const Monomial& m, const Rational& c)
{
    if (sgn(c) == 0)
        return;
    auto [it, inserted] = terms_.try_emplace(m, c);
    if (!inserted) {
        it->second += c;
        if (sgn(it->second) == 0)
            terms_.erase(it);
    }
}

MPoly& MPoly::operator+=(const MPoly& o)
{
    if (o.nvars_ != nvars_)
        throw Error("MPoly arity mismatch");
    for (const auto& [m, c] : o.terms_)
        add_term(m, c);
    return *this;
}

MPoly& MPoly::operator-=(const MPoly& o)
{
    if (o.nvars_ != nvars_)
        throw Error("MPoly arity mismatch");
    for (const auto& [m, c] : o.terms_)
        add_term(m, -c);
    return *this;
}

MPoly& MPoly::operator*=(const Rational& s)
{
    if (sgn(s) == 0) {
        terms_.clear();
        return *this;
    }
    for (auto& [m, c] : terms_)
        c *= s;
    return *this;
}

MPoly operator*(const MPoly& a, const MPoly& b)
{
    if (a.nvars_ != b.nvars_)
        throw Error("MPoly arity mismatch");
    MPoly out(a.nvars_);
    for (const auto& [ma, ca] : a.terms_)
        for (const auto& [mb, cb] : b.terms_) {
            MPoly::Monomial m(a.nvars_);
            for (std::size_t i = 0; i < a.nvars_; ++i)
                m[i] = ma[i] + mb[i];
            out.add_term(m, ca * cb);
        }
    return out;
}

std::string MPoly::to_string(std::span<const std::string> names) const
{
    if (terms_.empty())
        return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [m, c] : terms_) {
        if (!first)
            os << (sgn(c) < 0 ? " - " : " + ");
        else if (sgn(c) < 0)
            os << "-";
        first = false;
        Rational ac = abs(c);
        bool unit = true;
        for (auto e : m)
            unit = unit && e == 0;
        if (ac != 1 || unit)
            os << ac.get_str();
        bool need_star = ac != 1;
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (m[i] == 0)
                continue;
            if (need_star)
                os << "*";
            os << (i < names.size() ? names[i] : "x" + std::to_string(i));
            if (m[i] > 1)
                os << "^" << m[i];
            need_star = true;
        }
    }
    return os.str();
}

} // namespace qlab
