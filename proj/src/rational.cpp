#include "qlab/rational.hpp"

#include "qlab/errors.hpp"

#include <cctype>

namespace qlab {

Rational make_rational(long num, long den)
{
    if (den == 0)
        throw SchemaError("zero denominator");
    Rational q(num, den);
    q.canonicalize();
    return q;
}

namespace {

bool is_digits(std::string_view s)
{
    if (s.empty())
        return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            return false;
    return true;
}

mpz_class parse_integer(std::string_view s)
{
    bool neg = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        neg = s.front() == '-';
        s.remove_prefix(1);
    }
    if (!is_digits(s))
        throw SchemaError("malformed integer '" + std::string(s) + "'");
    mpz_class z(std::string(s), 10);
    return neg ? mpz_class(-z) : z;
}

Rational parse_decimal(std::string_view s)
{
    std::string_view mant = s;
    long exp10 = 0;
    if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
        mant = s.substr(0, e);
        mpz_class ez = parse_integer(s.substr(e + 1));
        if (!ez.fits_slong_p() || abs(ez) > 4096)
            throw SchemaError("exponent out of range in '" + std::string(s) + "'");
        exp10 = ez.get_si();
    }
    bool neg = false;
    if (!mant.empty() && (mant.front() == '-' || mant.front() == '+')) {
        neg = mant.front() == '-';
        mant.remove_prefix(1);
    }
    std::string digits;
    long frac_len = 0;
    if (auto dot = mant.find('.'); dot != std::string_view::npos) {
        std::string_view ip = mant.substr(0, dot);
        std::string_view fp = mant.substr(dot + 1);
        if ((!ip.empty() && !is_digits(ip)) || (!fp.empty() && !is_digits(fp)) || (ip.empty() && fp.empty()))
            throw SchemaError("malformed decimal '" + std::string(s) + "'");
        digits = std::string(ip) + std::string(fp);
        frac_len = static_cast<long>(fp.size());
    } else {
        if (!is_digits(mant))
            throw SchemaError("malformed number '" + std::string(s) + "'");
        digits = std::string(mant);
    }
    mpz_class num(digits, 10);
    if (neg)
        num = -num;
    long shift = exp10 - frac_len;
    mpz_class pow10;
    mpz_ui_pow_ui(pow10.get_mpz_t(), 10, static_cast<unsigned long>(shift < 0 ? -shift : shift));
    Rational q = shift >= 0 ? Rational(num * pow10) : Rational(num, pow10);
    q.canonicalize();
    return q;
}

} // namespace

Rational parse_rational(std::string_view text)
{
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front())))
        text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
        text.remove_suffix(1);
    if (text.empty())
        throw SchemaError("empty rational");
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        mpz_class num = parse_integer(text.substr(0, slash));
        mpz_class den = parse_integer(text.substr(slash + 1));
        if (den == 0)
            throw SchemaError("zero denominator in '" + std::string(text) + "'");
        Rational q(num, den);
        q.canonicalize();
        return q;
    }
    return parse_decimal(text);
}

std::string to_string(const Rational& q)
{
    return q.get_str(10);
}

} // namespace qlab
