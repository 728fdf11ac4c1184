#include "qlab/cylgeom.hpp"

#include "qlab/errors.hpp"
#include "qlab/exact_linalg.hpp"
#include "qlab/mpoly.hpp"

#include <cmath>
#include <utility>

namespace qlab {

std::string to_string(PlaneCase c)
{
    switch (c) {
    case PlaneCase::CASE1_A:
        return "CASE1_A";
    case PlaneCase::CASE2_B:
        return "CASE2_B";
    case PlaneCase::CASE3_C:
        return "CASE3_C";
    }
    return "?";
}

namespace {

// Everything below is written over a ring T so the same formulas run on
// rationals and on symbolic polynomials.
template <class T>
struct Coef {
    T A, B, C, D, E, F, al, be, ga;
};

template <class T>
using V4 = std::array<T, 4>;

template <class T>
T twice(const T& x)
{
    return x + x;
}

template <class T>
struct Ring {
    T zero, one;
};

// v_j = (e_j, dQ/dx_j) at (r, s, t) with t on the plane, unsimplified.
template <class T>
std::array<V4<T>, 3> tangent(const Coef<T>& k, const T& r, const T& s, const Ring<T>& R)
{
    const T t = k.al + k.be * r + k.ga * s;
    return {{{R.one, R.zero, R.zero, twice(k.A) * r + k.D * s + k.E * t},
             {R.zero, R.one, R.zero, twice(k.B) * s + k.D * r + k.F * t},
             {R.zero, R.zero, R.one, twice(k.C) * t + k.E * r + k.F * s}}};
}

// Last entry of u0 v1 + u1 v2 + u2 v3; u lies in T iff it equals u[3].
template <class T>
T tangent_last(const V4<T>& u, const std::array<V4<T>, 3>& v)
{
    return u[0] * v[0][3] + u[1] * v[1][3] + u[2] * v[2][3];
}

template <class T>
struct Shorthand {
    T X, P, R, Y, Z, W;
};

template <class T>
Shorthand<T> shorthand(const Coef<T>& k)
{
    return {twice(k.A) + k.E * k.be, k.D + k.F * k.be, k.E + twice(k.C) * k.be,
            k.D + k.E * k.ga,        twice(k.B) + k.F * k.ga, k.F + twice(k.C) * k.ga};
}

template <class T>
std::array<V4<T>, 2> case1_vectors(const Coef<T>& k, const T& s0, int sub, const Ring<T>& Rg)
{
    const auto [X, P, R, Y, Z, W] = shorthand(k);
    const T g1 = k.D * s0 + k.E * k.ga * s0 + k.E * k.al;
    const T g2 = twice(k.B) * s0 + k.F * k.ga * s0 + k.F * k.al;
    const T g3 = k.F * s0 + twice(k.C) * k.ga * s0 + twice(k.C) * k.al;
    if (sub == 1)
        return {{{Rg.zero - P, X, Rg.zero, X * g2 - P * g1}, {Rg.zero - R, Rg.zero, X, X * g3 - R * g1}}};
    const T eb = k.E * k.be + twice(k.C) * k.be * k.be;
    const T db = k.D * k.be + k.F * k.be * k.be;
    return {{{R, Rg.zero, Rg.zero - X, R * g1 - X * g3}, {Rg.zero, eb, Rg.zero - db, eb * g2 - db * g3}}};
}

template <class T>
std::array<T, 3> case3_minors(const Coef<T>& k)
{
    const auto [X, P, R, Y, Z, W] = shorthand(k);
    return {P * W - R * Z, Y * R - W * X, X * Z - P * Y};
}

template <class T>
V4<T> case3_vector(const Coef<T>& k, const T& r, const T& s)
{
    const auto [X, P, R, Y, Z, W] = shorthand(k);
    const auto d = case3_minors(k);
    const T star = d[0] * (X * r + Y * s + k.E * k.al) + d[1] * (P * r + Z * s + k.F * k.al) +
                   d[2] * (R * r + W * s + twice(k.C) * k.al);
    return {d[0], d[1], d[2], star};
}

template <class T>
T det3(const std::array<std::array<T, 3>, 3>& m)
{
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

// Determinant of the matrix with the given columns.
template <class T>
T det4(const std::array<V4<T>, 4>& cols, const Ring<T>& R)
{
    T acc = R.zero;
    for (int j = 0; j < 4; ++j) {
        std::array<std::array<T, 3>, 3> minor;
        for (int i = 1; i < 4; ++i) {
            int cc = 0;
            for (int c = 0; c < 4; ++c)
                if (c != j)
                    minor[i - 1][cc++] = cols[c][i];
        }
        const T term = cols[j][0] * det3(minor);
        if (j % 2 == 0)
            acc = acc + term;
        else
            acc = acc - term;
    }
    return acc;
}

Coef<Rational> coef(const FormCoefficients& f, const Plane& p)
{
    return {f.A, f.B, f.C, f.D, f.E, f.F, p.alpha, p.beta, p.gamma};
}

Coef<MPoly> lift(const Coef<Rational>& k, std::size_t n)
{
    auto c = [n](const Rational& x) { return MPoly::constant(n, x); };
    return {c(k.A), c(k.B), c(k.C), c(k.D), c(k.E), c(k.F), c(k.al), c(k.be), c(k.ga)};
}

const Ring<Rational> kQ{Rational(0), Rational(1)};

Ring<MPoly> poly_ring(std::size_t n)
{
    return {MPoly(n), MPoly::constant(n, 1)};
}

bool in_tangent(const Coef<Rational>& k, const Vec4Q& u, const Rational& r, const Rational& s)
{
    return tangent_last(u, tangent(k, r, s, kQ)) == u[3];
}

// Symbolic check that u, assembled from the tangent vectors with r (and s)
// left free, reproduces the printed vector and has no r, s dependence.
bool assembled_constant(const V4<MPoly>& printed, const std::array<V4<MPoly>, 3>& v)
{
    for (const auto& x : printed)
        for (std::size_t var = 0; var < x.nvars(); ++var)
            if (x.degree_in(var) != 0)
                return false;
    return tangent_last(printed, v) == printed[3];
}

Vec4Q swap_rs(Vec4Q v)
{
    std::swap(v[0], v[1]);
    return v;
}

FormCoefficients swapped(const FormCoefficients& f)
{
    return {f.B, f.A, f.C, f.D, f.F, f.E};
}

} // namespace

std::optional<PlaneCase> classify_case(const Rational& a, const Rational& b, const Rational& c, const Rational& eta)
{
    const Rational quarter = eta / 4;
    if (abs(a) > quarter)
        return PlaneCase::CASE1_A;
    if (abs(b) > quarter)
        return PlaneCase::CASE2_B;
    if (abs(c) > eta)
        return PlaneCase::CASE3_C;
    return std::nullopt;
}

CaseSplit case_split(const QuadraticPair& pair, const Plane& plane, const Rational& eta)
{
    for (int i = 0; i < 2; ++i) {
        const auto q = restrict_to_plane(pair.form(i), plane.alpha, plane.beta, plane.gamma);
        if (q.max_abs_quadratic() < eta)
            continue;
        const auto kase = classify_case(q.a, q.b, q.c, eta);
        if (!kase)
            continue;
        CaseSplit s;
        s.eta = eta;
        s.kase = *kase;
        s.a = q.a;
        s.b = q.b;
        s.c = q.c;
        s.plane = plane;
        s.form = i;
        s.coeffs = pair.form(i).form();
        s.discriminant = q.c * q.c - 4 * q.a * q.b;
        return s;
    }
    throw EtaViolated("no form restricted to t = " + to_string(plane.alpha) + " + " + to_string(plane.beta) + " r + " +
                      to_string(plane.gamma) + " s has a quadratic coefficient of size eta = " + to_string(eta));
}

Form1Check form1_identity_check(const FormCoefficients& f, const Rational& beta, const Rational& gamma)
{
    const auto k = coef(f, {0, beta, gamma});
    const auto d = case3_minors(k);
    Form1Check out;
    out.signed_lhs = d[2] - beta * d[0] - gamma * d[1];
    const Rational c = 2 * beta * gamma * f.C + f.D + f.E * gamma + f.F * beta;
    const Rational a = f.A + f.C * beta * beta + f.E * beta;
    const Rational b = f.B + f.C * gamma * gamma + f.F * gamma;
    out.lhs = abs(out.signed_lhs);
    out.rhs = abs(Rational(c * c - 4 * a * b));
    out.equal = out.lhs == out.rhs;
    return out;
}

std::size_t case3_rank(const FormCoefficients& f, const Rational& beta, const Rational& gamma)
{
    const auto h = shorthand(coef(f, {0, beta, gamma}));
    return rank(QMatrix{{h.X, h.P, h.R}, {h.Y, h.Z, h.W}});
}

CylinderFrame cylinder_frame_case1(const FormCoefficients& f, const Plane& plane, const Rational& s0, const Rational& eta,
                                   Subcase sub)
{
    const auto k = coef(f, plane);
    const auto h = shorthand(k);
    const Rational a = f.A + f.C * plane.beta * plane.beta + f.E * plane.beta;
    if (!(abs(a) > eta / 4))
        throw CaseHypothesisFailed("|a| = " + to_string(abs(a)) + " <= eta/4");
    const bool first = abs(h.X) > eta / 4;
    const bool second = abs(Rational(2 * f.C * plane.beta * plane.beta + f.E * plane.beta)) > eta / 4;
    int which = 0;
    if (sub == Subcase::First || (sub == Subcase::Auto && first))
        which = first ? 1 : -1;
    else
        which = second ? 2 : -2;
    if (which < 0)
        throw SubcaseHypothesisFailed("subcase " + std::to_string(-which) + " hypothesis fails");

    CylinderFrame out;
    out.kase = PlaneCase::CASE1_A;
    out.subcase = which;
    const auto u = case1_vectors(k, s0, which, kQ);
    out.base = {Vec4Q{1, 0, plane.beta, 0}, Vec4Q{0, 0, 0, 1}};
    out.vertical = {u[0], u[1]};
    out.det = det4<Rational>({out.base[0], out.base[1], u[0], u[1]}, kQ);
    if (which == 1) {
        out.predicted = abs(h.X) * abs(Rational(2 * a));
        out.det_matches = abs(out.det) == *out.predicted;
    } else {
        out.det_matches = std::abs(out.det.get_d()) >= 1e-8;
    }

    out.tangent = true;
    for (int i = 0; i <= 4; ++i) {
        const Rational r = make_rational(i, 4);
        out.samples.push_back({r, s0});
        for (const auto& v : u)
            out.tangent = out.tangent && in_tangent(k, v, r, s0);
    }

    const auto rg = poly_ring(1);
    const auto kp = lift(k, 1);
    const auto s0p = MPoly::constant(1, s0);
    const auto up = case1_vectors(kp, s0p, which, rg);
    const auto vp = tangent(kp, MPoly::variable(1, 0), s0p, rg);
    out.constant = assembled_constant(up[0], vp) && assembled_constant(up[1], vp);
    return out;
}

CylinderFrame cylinder_frame_case2(const FormCoefficients& f, const Plane& plane, const Rational& r0, const Rational& eta,
                                   Subcase sub)
{
    CylinderFrame out;
    try {
        out = cylinder_frame_case1(swapped(f), {plane.alpha, plane.gamma, plane.beta}, r0, eta, sub);
    } catch (const CaseHypothesisFailed& e) {
        throw CaseHypothesisFailed("|b| <= eta/4");
    }
    out.kase = PlaneCase::CASE2_B;
    for (auto& w : out.base)
        w = swap_rs(w);
    for (auto& v : out.vertical)
        v = swap_rs(v);
    out.det = -out.det;
    const auto k = coef(f, plane);
    out.tangent = true;
    for (auto& p : out.samples) {
        std::swap(p[0], p[1]);
        for (const auto& v : out.vertical)
            out.tangent = out.tangent && in_tangent(k, v, p[0], p[1]);
    }
    return out;
}

CylinderFrame cylinder_frame_case3(const FormCoefficients& f, const Plane& plane, const std::optional<Rational>& eta)
{
    const auto k = coef(f, plane);
    const auto check = form1_identity_check(f, plane.beta, plane.gamma);
    if (check.rhs == 0)
        throw CaseHypothesisFailed("c^2 - 4ab = 0");
    if (eta) {
        const Rational a = f.A + f.C * plane.beta * plane.beta + f.E * plane.beta;
        const Rational b = f.B + f.C * plane.gamma * plane.gamma + f.F * plane.gamma;
        const Rational c = 2 * plane.beta * plane.gamma * f.C + f.D + f.E * plane.gamma + f.F * plane.beta;
        if (classify_case(a, b, c, *eta) != PlaneCase::CASE3_C)
            throw CaseHypothesisFailed("case 3 inequalities fail for eta = " + to_string(*eta));
    }

    CylinderFrame out;
    out.kase = PlaneCase::CASE3_C;
    const auto u = case3_vector(k, Rational(0), Rational(0));
    out.base = {Vec4Q{1, 0, plane.beta, 0}, Vec4Q{0, 1, plane.gamma, 0}, Vec4Q{0, 0, 0, 1}};
    out.vertical = {u};
    out.det = det4<Rational>({out.base[0], out.base[1], out.base[2], u}, kQ);
    out.predicted = check.lhs;
    out.det_matches = abs(out.det) == check.lhs && check.equal;
    if (eta)
        out.det_matches = out.det_matches && abs(out.det) >= Rational(3, 4) * *eta * *eta;

    out.tangent = true;
    for (int i = 0; i <= 2; ++i)
        for (int j = 0; j <= 2; ++j) {
            const Rational r = make_rational(i, 2), s = make_rational(j, 2);
            out.samples.push_back({r, s});
            out.tangent = out.tangent && in_tangent(k, u, r, s) && case3_vector(k, r, s) == u;
        }

    const auto rg = poly_ring(2);
    const auto kp = lift(k, 2);
    const auto r = MPoly::variable(2, 0), s = MPoly::variable(2, 1);
    const auto up = case3_vector(kp, r, s);
    out.constant = assembled_constant(up, tangent(kp, r, s, rg));
    return out;
}

CylinderFrame cylinder_frame(const CaseSplit& split, const Rational& slab)
{
    switch (split.kase) {
    case PlaneCase::CASE1_A:
        return cylinder_frame_case1(split.coeffs, split.plane, slab, split.eta);
    case PlaneCase::CASE2_B:
        return cylinder_frame_case2(split.coeffs, split.plane, slab, split.eta);
    case PlaneCase::CASE3_C:
        break;
    }
    return cylinder_frame_case3(split.coeffs, split.plane, split.eta);
}

SymbolicAudit generic_symbolic_audit()
{
    constexpr std::size_t n = 12; // A..F, alpha, beta, gamma, r, s, s0
    auto x = [](std::size_t i) { return MPoly::variable(n, i); };
    const Coef<MPoly> k{x(0), x(1), x(2), x(3), x(4), x(5), x(6), x(7), x(8)};
    const auto r = x(9), s = x(10), s0 = x(11);
    const auto rg = poly_ring(n);

    // Free of r and s; s0 and the coefficients stay symbolic.
    auto free_rs = [](const V4<MPoly>& u) {
        for (const auto& c : u)
            if (c.degree_in(9) != 0 || c.degree_in(10) != 0)
                return false;
        return true;
    };

    SymbolicAudit out;
    const auto v1 = tangent(k, r, s0, rg);
    const V4<MPoly> w1{rg.one, rg.zero, k.be, rg.zero}, w2{rg.zero, rg.zero, rg.zero, rg.one};
    for (int sub : {1, 2}) {
        const auto u = case1_vectors(k, s0, sub, rg);
        const bool ok = free_rs(u[0]) && free_rs(u[1]) && tangent_last(u[0], v1) == u[0][3] && tangent_last(u[1], v1) == u[1][3];
        (sub == 1 ? out.case1_sub1_constant : out.case1_sub2_constant) = ok;
    }
    {
        const auto u = case1_vectors(k, s0, 1, rg);
        const auto h = shorthand(k);
        const MPoly pred = h.X * (twice(k.A) + twice(k.C) * k.be * k.be + twice(k.E) * k.be);
        const MPoly d = det4<MPoly>({w1, w2, u[0], u[1]}, rg);
        out.case1_fm2 = d == pred || d == -pred;
    }

    const auto u = case3_vector(k, r, s);
    out.case3_star_constant = free_rs(u) && tangent_last(u, tangent(k, r, s, rg)) == u[3];
    const V4<MPoly> w2b{rg.zero, rg.one, k.ga, rg.zero};
    const MPoly lhs = u[2] - k.be * u[0] - k.ga * u[1];
    const MPoly d3 = det4<MPoly>({w1, w2b, w2, u}, rg);
    out.case3_det = d3 == lhs || d3 == -lhs;

    // a, b, c read off Q(r, s, alpha + beta r + gamma s) directly.
    const MPoly t = k.al + k.be * r + k.ga * s;
    const MPoly q = k.A * r * r + k.B * s * s + k.C * t * t + k.D * r * s + k.E * r * t + k.F * s * t;
    const MPoly a = q.coefficient_of(9, 2).coefficient_of(10, 0);
    const MPoly b = q.coefficient_of(10, 2).coefficient_of(9, 0);
    const MPoly c = q.coefficient_of(9, 1).coefficient_of(10, 1);
    const MPoly four = MPoly::constant(n, 4);
    out.form1 = lhs == -(c * c - four * a * b);
    return out;
}

namespace {

nlohmann::json vec_json(const Vec4Q& v)
{
    auto j = nlohmann::json::array();
    for (const auto& x : v)
        j.push_back(to_string(x));
    return j;
}

} // namespace

nlohmann::json to_json(const CaseSplit& s)
{
    return {{"case", to_string(s.kase)},
            {"eta", to_string(s.eta)},
            {"form", s.form + 1},
            {"a", to_string(s.a)},
            {"b", to_string(s.b)},
            {"c", to_string(s.c)},
            {"discriminant", to_string(s.discriminant)},
            {"plane", {{"alpha", to_string(s.plane.alpha)}, {"beta", to_string(s.plane.beta)}, {"gamma", to_string(s.plane.gamma)}}}};
}

nlohmann::json to_json(const CylinderFrame& f)
{
    nlohmann::json j;
    j["case"] = to_string(f.kase);
    if (f.subcase)
        j["subcase"] = f.subcase;
    j["base"] = nlohmann::json::array();
    for (const auto& w : f.base)
        j["base"].push_back(vec_json(w));
    j["vertical"] = nlohmann::json::array();
    for (const auto& u : f.vertical)
        j["vertical"].push_back(vec_json(u));
    j["det"] = to_string(f.det);
    j["predicted_abs_det"] = f.predicted ? nlohmann::json(to_string(*f.predicted)) : nlohmann::json(nullptr);
    j["det_matches"] = f.det_matches;
    j["tangent"] = f.tangent;
    j["constant_in_rs"] = f.constant;
    j["samples"] = f.samples.size();
    return j;
}

} // namespace qlab
