#include "doctest.h"
#include "helpers.hpp"

#include "qlab/classify.hpp"
#include "qlab/errors.hpp"
#include "qlab/transversality.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>

using namespace qlab;
using qtest::q;

namespace {

Vec5d unit(int i)
{
    Vec5d v = Vec5d::Zero();
    v(i) = 1;
    return v;
}

Vec5Q unit_q(int i)
{
    Vec5Q v{0, 0, 0, 0, 0};
    v[i] = 1;
    return v;
}

// Worst q-subset by enumeration: min over q-subsets of the max inside.
double brute_force_nu(const std::vector<double>& d, std::size_t q)
{
    const std::size_t m = d.size();
    double best = std::numeric_limits<double>::infinity();
    std::vector<bool> mask(m, false);
    std::fill(mask.begin(), mask.begin() + static_cast<long>(q), true);
    std::sort(mask.begin(), mask.end());
    do {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i)
            if (mask[i])
                mx = std::max(mx, d[i]);
        best = std::min(best, mx);
    } while (std::next_permutation(mask.begin(), mask.end()));
    return best;
}

} // namespace

TEST_SUITE("transversality") {

TEST_CASE("tangent frame entries follow the gradient")
{
    const auto p = qtest::pair_sum_sq();
    const auto f = tangent_frame(p, 0.25, 0.5, 0.75);
    auto [g1, g2] = gradient(p, {q(1, 4), q(1, 2), q(3, 4)});
    for (int j = 0; j < 3; ++j) {
        CHECK(f.n[j](j) == 1.0);
        CHECK(f.n[j](3) == doctest::Approx(g1[j].get_d()));
        CHECK(f.n[j](4) == doctest::Approx(g2[j].get_d()));
    }
}

TEST_CASE("random subspaces are orthonormal")
{
    for (int dim : {1, 2, 4}) {
        for (std::uint64_t s = 0; s < 20; ++s) {
            Stream rng(1, 0, s);
            const auto V = random_subspace(dim, rng);
            const Eigen::MatrixXd G = V.basis.transpose() * V.basis;
            CHECK((G - Eigen::MatrixXd::Identity(dim, dim)).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("minor_det examples")
{
    const auto nf = normal_form_pair(q(1), q(1));
    const auto e1 = make_subspace({unit(0)});
    CHECK(minor_det(e1, {0.3, 0.2, 0.9}, nf) == doctest::Approx(1.0));
    const auto e4 = make_subspace({unit(3)});
    CHECK(minor_det(e4, {0, 0, 0}, nf) == 0.0);
    for (auto p : {std::array<double, 3>{0.3, -0.2, 0.9}, std::array<double, 3>{1, 1, 1}})
        CHECK(minor_det(e4, p, nf) == doctest::Approx(std::abs(p[0]) + std::abs(p[1])));
}

TEST_CASE("minor_det vanishes exactly on rank deficiency")
{
    Stream rng(9, 0, 0);
    const auto pair = qtest::pair_r2s2_st();
    int agree = 0, total = 0;
    for (int it = 0; it < 1000; ++it) {
        const int dim = std::array<int, 3>{1, 2, 4}[it % 3];
        SubspaceSample V;
        std::array<double, 3> p{rng.uniform(), rng.uniform(), rng.uniform()};
        if (it % 5 == 0) {
            // Force deficiency: a direction orthogonal to the whole tangent
            // space lies in V.
            const auto f = tangent_frame(pair, p[0], p[1], p[2]);
            Eigen::Matrix<double, 3, 5> N;
            for (int j = 0; j < 3; ++j)
                N.row(j) = f.n[j].transpose();
            Eigen::JacobiSVD<Eigen::Matrix<double, 3, 5>> svd(N, Eigen::ComputeFullV);
            std::vector<Vec5d> cols{svd.matrixV().col(4)};
            if (dim == 4)
                cols.push_back(svd.matrixV().col(3));
            for (int k = static_cast<int>(cols.size()); k < dim; ++k) {
                Vec5d g;
                for (int i = 0; i < 5; ++i)
                    g(i) = rng.normal();
                cols.push_back(g);
            }
            V = make_subspace(cols);
        } else {
            V = random_subspace(dim, rng);
        }
        const ProjectionField field(V, pair);
        const Eigen::MatrixXd M = field.matrix(p);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
        const auto sv = svd.singularValues();
        const int full = std::min(dim, 3);
        const bool deficient = sv(full - 1) < 1e-10;
        const bool tiny = field.minor_det(p) < 1e-10;
        ++total;
        if (deficient == tiny)
            ++agree;
    }
    CHECK(agree == total);
}

TEST_CASE("set_infimum examples")
{
    const auto nf = normal_form_pair(q(1), q(1));
    const long K = 8;
    CubeCollection cubes;
    cubes.scale = K;
    cubes.corners = {{0, 0, 3}, {5, 6, 7}};
    const auto e1 = make_subspace({unit(0)});
    CHECK(set_infimum(e1, cubes, 0, nf) == doctest::Approx(1.0));
    CHECK(set_infimum(e1, cubes, 1, nf) == doctest::Approx(1.0));
    const auto e4 = make_subspace({unit(3)});
    CHECK(set_infimum(e4, cubes, 0, nf) <= 2.0 / K);
    CHECK(set_infimum(e4, cubes, 0, nf) == 0.0);

    // V = span(e5) for (r^2, s^2): entries (0, 2s, 0), zero on the s = 0 face.
    const auto e5 = make_subspace({unit(4)});
    CHECK(set_infimum(e5, cubes, 0, qtest::pair_r2_s2()) == 0.0);
    CHECK(set_infimum(e5, cubes, 1, qtest::pair_r2_s2()) == doctest::Approx(2.0 * 6 / K));
}

TEST_CASE("order statistic equals brute-force subset enumeration")
{
    Stream rng(13, 0, 0);
    for (std::size_t m = 1; m <= 10; ++m)
        for (std::size_t qq = 1; qq <= m; ++qq)
            for (int rep = 0; rep < 5; ++rep) {
                std::vector<double> d(m);
                for (auto& x : d)
                    x = rep == 4 ? std::floor(rng.uniform() * 3) : rng.uniform();
                CHECK(nu_of_subspace(d, qq) == brute_force_nu(d, qq));
            }
    CHECK(order_statistic_index(50) == 1);
    CHECK(order_statistic_index(10000) == 100);
    CHECK(order_statistic_index(10099) == 100);
}

TEST_CASE("nu_estimate")
{
    const auto nf = normal_form_pair(q(1), q(1));
    CubeCollection empty;
    empty.scale = 4;
    CHECK_THROWS_AS(nu_estimate(empty, nf), EmptyCollection);

    // Cubes touching the origin edge: span(e4) gives 0 <= 4/K.
    const long K = 8;
    CubeCollection corner;
    corner.scale = K;
    for (long k = 0; k < K; ++k)
        corner.corners.push_back({0, 0, k});
    NuOptions opt;
    opt.samples = 64;
    opt.seed = 5;
    const auto est = nu_estimate(corner, nf, opt);
    CHECK(est.value >= 0.0);
    CHECK(est.warning.has_value());
    CHECK(est.q == 1);
    const double e4 = nu_of_subspace({set_infimum(make_subspace({unit(3)}), corner, 0, nf)}, 1);
    CHECK(e4 <= 4.0 / K);

    // Two antipodal cubes, V = span(e1) only.
    CubeCollection two;
    two.scale = 4;
    two.corners = {{0, 0, 0}, {3, 3, 3}};
    const auto e1 = make_subspace({unit(0)});
    std::vector<double> d{set_infimum(e1, two, 0, nf), set_infimum(e1, two, 1, nf)};
    CHECK(nu_of_subspace(d, order_statistic_index(2)) == doctest::Approx(1.0));

    // Monotone in the sample count (full refinement keeps the per-sample
    // values independent of the sample count).
    NuOptions mono;
    mono.seed = 21;
    mono.refine_fraction = 1.0;
    mono.perturbations = 2;
    mono.fine.grid = 3;
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t n : {3, 6, 12, 24}) {
        mono.samples = n;
        const auto e = nu_estimate(two, qtest::pair_r2s2_st(), mono);
        CHECK(e.value <= prev);
        prev = e.value;
    }

    // Deterministic.
    const auto a = nu_estimate(corner, nf, opt);
    const auto b = nu_estimate(corner, nf, opt);
    CHECK(a.value == b.value);
    CHECK(to_json(a).dump() == to_json(b).dump());
}

TEST_CASE("bad set polynomials")
{
    const auto nf = normal_form_pair(q(1), q(1));
    const auto p1 = bad_set_polynomials(ExactSubspace{{unit_q(3)}}, nf);
    REQUIRE(p1.size() == 2);
    CHECK(p1[0] == Quadric3::affine(0, {q(1), q(0), q(0)}));
    CHECK(p1[1] == Quadric3::affine(0, {q(0), q(1), q(0)}));

    const auto p2 = bad_set_polynomials(ExactSubspace{{unit_q(0)}}, nf);
    REQUIRE(p2.size() == 1);
    CHECK(p2[0] == Quadric3::constant(1));

    const auto p3 = bad_set_polynomials(ExactSubspace{{unit_q(0), unit_q(1), unit_q(3), unit_q(4)}}, qtest::pair_r2s2_st());
    bool quadratic = false;
    for (const auto& p : p3)
        quadratic = quadratic || (!p.is_zero() && p.degree() == 2);
    CHECK(quadratic);
    for (const auto& p : p3)
        CHECK(p.degree() <= 2);
}

TEST_CASE("bad set polynomials cut out the rank-deficient points")
{
    // Symbolic minors against numeric evaluation of M_V.
    Stream rng(31, 0, 0);
    const auto pair = qtest::pair_r2s2_st();
    for (int it = 0; it < 60; ++it) {
        const int dim = std::array<int, 3>{1, 2, 4}[it % 3];
        ExactSubspace V;
        for (int a = 0; a < dim; ++a) {
            Vec5Q v;
            for (auto& x : v)
                x = qtest::random_rational(rng, 3, 2);
            V.basis.push_back(v);
        }
        std::vector<Quadric3> polys;
        try {
            polys = bad_set_polynomials(V, pair);
        } catch (const Error&) {
            continue; // dependent random basis
        }
        REQUIRE_FALSE(polys.empty());
        if (polys.size() == 1 && polys[0] == Quadric3::constant(1))
            continue;
        const auto S = to_sample(V);
        const ProjectionField field(S, pair);
        for (int k = 0; k < 10; ++k) {
            const std::array<double, 3> p{rng.uniform(), rng.uniform(), rng.uniform()};
            double all = 0;
            for (const auto& poly : polys)
                all += std::abs(poly.evaluate(p[0], p[1], p[2]));
            // Both vanish together; off the zero set both are positive.
            CHECK((all < 1e-12) == (field.minor_det(p) < 1e-12));
        }
    }
}

TEST_CASE("degenerate directions raise DegeneratePair")
{
    const auto ss = qtest::pair_sum_sq();
    const auto v = nondegeneracy_check(ss);
    REQUIRE(v.witness.has_value());
    const auto V = degenerate_direction_subspace(ss, *v.witness);
    REQUIRE(V.has_value());
    CHECK(V->dim() == 2);
    CHECK_THROWS_AS(bad_set_polynomials(*V, ss), DegeneratePair);

    const auto dep = qtest::pair_from_coeffs({q(1), q(0), q(0), q(0), q(0), q(0)}, {q(2), q(0), q(0), q(0), q(0), q(0)});
    const auto vd = nondegeneracy_check(dep);
    REQUIRE(vd.witness.has_value());
    const auto V1 = degenerate_direction_subspace(dep, *vd.witness);
    REQUIRE(V1.has_value());
    CHECK(V1->dim() == 1);
    CHECK_THROWS_AS(bad_set_polynomials(*V1, dep), DegeneratePair);

    const auto vr = nondegeneracy_check(qtest::pair_r2_s2());
    const auto V2 = degenerate_direction_subspace(qtest::pair_r2_s2(), *vr.witness);
    REQUIRE(V2.has_value());
    CHECK_THROWS_AS(bad_set_polynomials(*V2, qtest::pair_r2_s2()), DegeneratePair);
}

TEST_CASE("nondegenerate pairs never raise DegeneratePair")
{
    Stream rng(37, 0, 0);
    const auto pair = qtest::pair_r2s2_st();
    for (int it = 0; it < 300; ++it) {
        const int dim = std::array<int, 3>{1, 2, 4}[it % 3];
        ExactSubspace V;
        for (int a = 0; a < dim; ++a) {
            Vec5Q v;
            for (auto& x : v)
                x = rng.below(3) ? Rational(0) : qtest::random_rational(rng, 2, 2);
            V.basis.push_back(v);
        }
        try {
            const auto polys = bad_set_polynomials(V, pair);
            CHECK_FALSE(polys.empty());
        } catch (const DegeneratePair&) {
            FAIL("DegeneratePair on a nondegenerate pair");
        } catch (const Error&) {
            // dependent basis
        }
    }
}

TEST_CASE("quadric cluster detector")
{
    // Centers on the plane r = 5/16.
    CubeCollection plane;
    plane.scale = 8;
    for (long j = 0; j < 8; ++j)
        for (long k = 0; k < 8; ++k)
            plane.corners.push_back({2, j, k});
    const auto a = quadric_cluster_detect(plane);
    CHECK(a.found);
    CHECK(a.count == plane.size());
    CHECK(a.method == "exact-moment-rank");
    // P is proportional to r - 5/16.
    CHECK(std::abs(a.P[0] + 5.0 / 16 * a.P[1]) < 1e-12);
    for (int k = 2; k < 10; ++k)
        CHECK(std::abs(a.P[k]) < 1e-12);

    CubeCollection few;
    few.scale = 16;
    Stream rng(41, 0, 0);
    for (int i = 0; i < 9; ++i)
        few.corners.push_back({static_cast<long>(rng.below(16)), static_cast<long>(rng.below(16)), static_cast<long>(rng.below(16))});
    const auto b = quadric_cluster_detect(few);
    CHECK(b.found);
    CHECK(b.count == few.size());

    CHECK(lipschitz_bound({0, 1, 0, 0, 0, 0, 0, 0, 0, 0}) == 1.0);

    // A sphere-like shell of cubes is picked up by RANSAC even when no
    // coordinate layer is heavy enough.
    CubeCollection shell;
    shell.scale = 32;
    for (long i = 0; i < 32; ++i)
        for (long j = 0; j < 32; ++j)
            for (long k = 0; k < 32; ++k) {
                const double x = (i + 0.5) / 32 - 0.5, y = (j + 0.5) / 32 - 0.5, z = (k + 0.5) / 32 - 0.5;
                if (std::abs(x * x + y * y + z * z - 0.16) < 0.004)
                    shell.corners.push_back({i, j, k});
            }
    ClusterOptions copt;
    copt.ransac_iterations = 2000;
    copt.threshold_fraction = 0.5;
    copt.margin = 0.5 / 32;
    const auto c = quadric_cluster_detect(shell, copt);
    CHECK(c.found);
    CHECK(c.count > shell.size() / 2);
}

TEST_CASE("cube collection JSON")
{
    const auto j = nlohmann::json::parse(R"({"scale": 4, "corners": [[0,1,2],[3,3,3]]})");
    const auto c = collection_from_json(j);
    CHECK(c.size() == 2);
    CHECK(c.dyadic());
    CHECK(collection_to_json(c) == j);
    CHECK_THROWS_AS(collection_from_json(nlohmann::json::parse(R"({"scale": 4, "corners": [[0,1,4]]})")), SchemaError);
    CHECK_THROWS_AS(collection_from_json(nlohmann::json::parse(R"({"corners": []})")), SchemaError);
    CHECK(full_collection(4).size() == 64);
}

}
