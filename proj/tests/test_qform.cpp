#include "doctest.h"
#include "helpers.hpp"

#include "qlab/errors.hpp"
#include "qlab/mpoly.hpp"

using namespace qlab;
using qtest::q;

TEST_SUITE("qform") {

TEST_CASE("rational parsing is exact")
{
    CHECK(parse_rational("3/6") == q(1, 2));
    CHECK(parse_rational("-0.125") == q(-1, 8));
    CHECK(parse_rational("1e-3") == q(1, 1000));
    CHECK(parse_rational("2.5E2") == q(250));
    CHECK_THROWS_AS(parse_rational("1/0"), SchemaError);
    CHECK_THROWS_AS(parse_rational("abc"), SchemaError);
    const Rational x = parse_rational("-4/6");
    CHECK(x.get_den() > 0);
    CHECK(x.get_num() == -2);
}

TEST_CASE("evaluate")
{
    auto p1 = qtest::pair_from_coeffs({q(1), q(1), q(0), q(0), q(0), q(0)}, {q(0), q(0), q(0), q(0), q(0), q(1)});
    auto [a, b] = evaluate(p1, {q(1), q(1), q(1)});
    CHECK(a == 2);
    CHECK(b == 1);
    auto [z1, z2] = evaluate(qtest::pair_sum_sq(), {q(0), q(0), q(0)});
    CHECK(z1 == 0);
    CHECK(z2 == 0);
    auto [c, d] = evaluate(qtest::pair_sum_sq(), {q(1), q(2), q(3)});
    CHECK(c == 14);
    CHECK(d == 11);
}

TEST_CASE("gradient")
{
    auto [g1, g2] = gradient(qtest::pair_sum_sq(), {q(1), q(2), q(3)});
    CHECK(g1 == Vec3Q{q(2), q(4), q(6)});
    auto [h1, h2] = gradient(qtest::pair_sum_sq(), {q(1), q(0), q(0)});
    CHECK(h2 == Vec3Q{q(0), q(1), q(1)});
    auto [o1, o2] = gradient(qtest::pair_r2s2_st(), {q(0), q(0), q(0)});
    CHECK(o2 == Vec3Q{q(0), q(0), q(0)});
}

TEST_CASE("change of variables examples")
{
    const QuadraticPair p(SymMatrix3::diagonal(1, -1, 0), SymMatrix3::diagonal(0, 1, -1));
    Mat2Q id{{{q(1), q(0)}, {q(0), q(1)}}};
    CHECK(change_of_variables(p, identity3(), id) == p);
    Mat2Q swap{{{q(0), q(1)}, {q(1), q(0)}}};
    const auto sw = change_of_variables(p, identity3(), swap);
    CHECK(sw.A1 == p.A2);
    CHECK(sw.A2 == p.A1);
    // new (r, s, t) = old (s, t, r)
    Mat3Q perm{};
    perm[0][1] = 1;
    perm[1][2] = 1;
    perm[2][0] = 1;
    for (auto& row : perm)
        for (auto& x : row)
            if (x != 1)
                x = 0;
    const auto pp = change_of_variables(p, perm, id);
    CHECK(pp.A1 == SymMatrix3::diagonal(0, 1, -1));
    CHECK(pp.A2 == SymMatrix3::diagonal(-1, 0, 1));
    Mat3Q sing{};
    for (auto& row : sing)
        for (auto& x : row)
            x = 1;
    CHECK_THROWS_AS(change_of_variables(p, sing, id), SingularTransform);
    Mat2Q bsing{{{q(1), q(2)}, {q(2), q(4)}}};
    CHECK_THROWS_AS(change_of_variables(p, identity3(), bsing), SingularTransform);
}

TEST_CASE("restrict_to_plane examples")
{
    const auto t2 = SymMatrix3::from_form({q(0), q(0), q(1), q(0), q(0), q(0)});
    const QuadPoly2 r1 = restrict_to_plane(t2, q(0), q(1), q(0));
    CHECK(r1.a == 1);
    CHECK(r1.b == 0);
    CHECK(r1.c == 0);
    CHECK(r1.lr == 0);
    CHECK(r1.ls == 0);
    CHECK(r1.k == 0);

    const auto f = SymMatrix3::from_form({q(1), q(2), q(3), q(4), q(5), q(6)});
    const QuadPoly2 r2 = restrict_to_plane(f, q(0), q(1), q(1));
    CHECK(r2.a == 9);
    CHECK(r2.b == 11);
    CHECK(r2.c == 21);

    const QuadPoly2 r3 = restrict_to_plane(f, q(7, 3), q(0), q(0));
    CHECK(r3.a == 1);
    CHECK(r3.b == 2);
    CHECK(r3.c == 4);
}

TEST_CASE("restrict_to_plane matches symbolic substitution")
{
    // Variables: A..F (0..5), alpha, beta, gamma (6..8), r, s (9, 10).
    const std::size_t n = 11;
    auto v = [&](std::size_t i) { return MPoly::variable(n, i); };
    const MPoly r = v(9), s = v(10);
    const MPoly t = v(6) + v(7) * r + v(8) * s;
    const MPoly Q = v(0) * r * r + v(1) * s * s + v(2) * t * t + v(3) * r * s + v(4) * r * t + v(5) * s * t;
    // Coefficient extraction by degree in r and s.
    const MPoly a = Q.coefficient_of(9, 2).coefficient_of(10, 0);
    const MPoly b = Q.coefficient_of(10, 2).coefficient_of(9, 0);
    const MPoly c = Q.coefficient_of(9, 1).coefficient_of(10, 1);
    const MPoly A = v(0), B = v(1), C = v(2), D = v(3), E = v(4), F = v(5), be = v(7), ga = v(8);
    CHECK(a == A + C * be * be + E * be);
    CHECK(b == B + C * ga * ga + F * ga);
    CHECK(c == q(2) * be * ga * C + D + E * ga + F * be);

    Stream rng(7, 0, 0);
    for (int it = 0; it < 200; ++it) {
        std::vector<Rational> vals(n);
        for (auto& x : vals)
            x = qtest::random_rational(rng);
        const auto form = SymMatrix3::from_form({vals[0], vals[1], vals[2], vals[3], vals[4], vals[5]});
        const QuadPoly2 rp = restrict_to_plane(form, vals[6], vals[7], vals[8]);
        const Rational rr = vals[9], ss = vals[10];
        const Rational lhs = rp.a * rr * rr + rp.b * ss * ss + rp.c * rr * ss + rp.lr * rr + rp.ls * ss + rp.k;
        CHECK(lhs == Q.evaluate(vals));
    }
}

TEST_CASE("properties: inverse transform, linearity, Euler, alpha independence")
{
    Stream rng(11, 0, 0);
    for (int it = 0; it < 200; ++it) {
        std::array<Rational, 6> f1, f2;
        for (auto& x : f1)
            x = qtest::random_rational(rng);
        for (auto& x : f2)
            x = qtest::random_rational(rng);
        f1[0] += 1; // keep the pair nonzero
        const auto pair = qtest::pair_from_coeffs(f1, f2);

        Mat3Q M;
        for (auto& row : M)
            for (auto& x : row)
                x = qtest::random_rational(rng);
        Mat2Q beta;
        for (auto& row : beta)
            for (auto& x : row)
                x = qtest::random_rational(rng);
        if (det(M) != 0 && det(beta) != 0) {
            const auto moved = change_of_variables(pair, M, beta);
            CHECK(moved.A1.dense() == transpose(moved.A1.dense()));
            const auto [Mi, bi] = inverse_transform(M, beta);
            CHECK(change_of_variables(moved, Mi, bi) == pair);
        }

        Vec3Q u, w;
        for (auto& x : u)
            x = qtest::random_rational(rng);
        for (auto& x : w)
            x = qtest::random_rational(rng);
        Vec3Q uw{u[0] + w[0], u[1] + w[1], u[2] + w[2]};
        const auto [gu, gu2] = gradient(pair, u);
        const auto [gw, gw2] = gradient(pair, w);
        const auto [guw, guw2] = gradient(pair, uw);
        for (int k = 0; k < 3; ++k) {
            CHECK(guw[k] == gu[k] + gw[k]);
            CHECK(guw2[k] == gu2[k] + gw2[k]);
        }
        const auto [q1, q2] = evaluate(pair, u);
        CHECK(u[0] * gu[0] + u[1] * gu[1] + u[2] * gu[2] == 2 * q1);
        CHECK(u[0] * gu2[0] + u[1] * gu2[1] + u[2] * gu2[2] == 2 * q2);

        const QuadPoly2 at0 = restrict_to_plane(pair.A1, q(0), u[1], u[2]);
        const QuadPoly2 atA = restrict_to_plane(pair.A1, u[0], u[1], u[2]);
        CHECK(at0.a == atA.a);
        CHECK(at0.b == atA.b);
        CHECK(at0.c == atA.c);
    }
}

TEST_CASE("pair JSON round trip and validation")
{
    const auto p = qtest::pair_sum_sq();
    CHECK(pair_from_json(pair_to_json(p)) == p);
    auto j = nlohmann::json::parse(R"({"A1": [[1,0,0],[0,1,0],[0,0,"1/3"]], "A2": [[0,"1/2",0],["1/2",0,0],[0,0,0.25]]})");
    const auto r = pair_from_json(j);
    CHECK(r.A1(2, 2) == q(1, 3));
    CHECK(r.A2(2, 2) == q(1, 4));
    auto bad = nlohmann::json::parse(R"({"A1": [[1,2,0],[0,1,0],[0,0,1]], "A2": [[0,0,0],[0,0,0],[0,0,0]]})");
    CHECK_THROWS_AS(pair_from_json(bad), SchemaError);
    auto zero = nlohmann::json::parse(R"({"A1": [[0,0,0],[0,0,0],[0,0,0]], "A2": [[0,0,0],[0,0,0],[0,0,0]]})");
    CHECK_THROWS_AS(pair_from_json(zero), SchemaError);
    CHECK(pair_hash(p) == pair_hash(pair_from_json(pair_to_json(p))));
    CHECK(pair_hash(p) != pair_hash(qtest::pair_r2_s2()));
}

TEST_CASE("exact linear algebra")
{
    QMatrix m{{q(1), q(2), q(3)}, {q(2), q(4), q(6)}, {q(1), q(0), q(1)}};
    CHECK(rank(m) == 2);
    const auto ns = nullspace(m);
    REQUIRE(ns.size() == 1);
    for (std::size_t i = 0; i < 3; ++i) {
        Rational acc = 0;
        for (std::size_t j = 0; j < 3; ++j)
            acc += m(i, j) * ns[0][j];
        CHECK(acc == 0);
    }
    CHECK(determinant(m) == 0);
    CHECK_THROWS_AS(inverse(m), SingularTransform);
    QMatrix a{{q(2), q(1)}, {q(1), q(1)}};
    CHECK(inverse(a) * a == QMatrix::identity(2));
    CHECK(determinant(a) == 1);
}

}
