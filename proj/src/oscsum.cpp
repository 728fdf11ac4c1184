#include "qlab/oscsum.hpp"

#include "qlab/errors.hpp"
#include "qlab/parallel.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace qlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// e(phase) with the phase reduced mod 1 first.
cplx expi(double phase)
{
    phase -= std::nearbyint(phase);
    return std::polar(1.0, kTwoPi * phase);
}

struct PairD {
    double a[2][3][3];
};

PairD to_double(const QuadraticPair& pair)
{
    PairD d{};
    for (int f = 0; f < 2; ++f)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                d.a[f][i][j] = pair.form(f)(i, j).get_d();
    return d;
}

double quad(const double (&a)[3][3], double r, double s, double t)
{
    const double u[3] = {r, s, t};
    double q = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            q += a[i][j] * u[i] * u[j];
    return q;
}

double phase_at(const PairD& p, const Vec5& x, double r, double s, double t)
{
    return x[0] * r + x[1] * s + x[2] * t + x[3] * quad(p.a[0], r, s, t) + x[4] * quad(p.a[1], r, s, t);
}

long nodes_for(double length, double h)
{
    return std::max(1L, static_cast<long>(std::ceil(length / h - 1e-9)));
}

long block_of(double u, long side)
{
    return std::clamp(static_cast<long>(std::floor(u * static_cast<double>(side))), 0L, side - 1);
}

// Midpoint sums of h e(a u + b u^2) over [lo, hi], binned by the cube
// partition of [0,1].
void axis_block_sums(double a, double b, double lo, double hi, long n, long side, cplx* out)
{
    std::fill(out, out + side, cplx{});
    const double h = (hi - lo) / static_cast<double>(n);
    for (long m = 0; m < n; ++m) {
        const double u = lo + (static_cast<double>(m) + 0.5) * h;
        out[block_of(u, side)] += expi(a * u + b * u * u);
    }
    for (long i = 0; i < side; ++i)
        out[i] *= h;
}

double step_for(const QuadraticPair& pair, const Vec5& x, double h, bool auto_refine)
{
    const double limit = max_step(pair, x);
    if (h > limit) {
        if (!auto_refine)
            throw StepTooCoarse("h = " + std::to_string(h) + " exceeds " + std::to_string(limit));
        return limit;
    }
    return h;
}

long isqrt_power_of_four(long N)
{
    if (N < 1 || (N & (N - 1)) != 0)
        throw InvalidArgument("N = " + std::to_string(N) + " is not a power of 4");
    long side = 1;
    while (side * side < N)
        side *= 2;
    if (side * side != N)
        throw InvalidArgument("N = " + std::to_string(N) + " is not a power of 4");
    return side;
}

} // namespace

double WeightBall::operator()(const Vec5& x) const
{
    double d2 = 0;
    for (int i = 0; i < 5; ++i)
        d2 += (x[i] - center[i]) * (x[i] - center[i]);
    return std::pow(1.0 + std::sqrt(d2) / radius, -C);
}

namespace {

constexpr double kSphere4 = 8.0 * std::numbers::pi * std::numbers::pi / 3.0;
constexpr double kTruncation = 8.0;

// Integral of u^4 (1+u)^(-shape) over [0, U].
double radial_mass(double shape, double U)
{
    return boost::math::beta(5.0, shape - 5.0, U / (1.0 + U));
}

} // namespace

double weight_integral(const WeightBall& ball)
{
    if (!(ball.C > 5))
        throw InvalidArgument("weight exponent must exceed 5");
    return kSphere4 * std::pow(ball.radius, 5) * radial_mass(ball.C, kTruncation);
}

std::string to_string(DensityKind k)
{
    switch (k) {
    case DensityKind::ONE:
        return "ONE";
    case DensityKind::RANDOM_UNIT_MODULUS:
        return "RANDOM_UNIT_MODULUS";
    case DensityKind::SINGLE_DELTA:
        return "SINGLE_DELTA";
    case DensityKind::PLANE_CLUSTER:
        return "PLANE_CLUSTER";
    case DensityKind::PRODUCT:
        return "PRODUCT";
    }
    return "?";
}

cplx CubeDensity::at(double r, double s, double t) const
{
    return (*this)(block_of(r, side), block_of(s, side), block_of(t, side));
}

std::size_t CubeDensity::support() const
{
    return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [](const cplx& z) { return z != cplx{}; }));
}

std::vector<std::array<long, 3>> plane_cubes(const Plane& plane, long K)
{
    const long side = isqrt_power_of_four(K);
    std::vector<std::array<long, 3>> out;
    for (long i = 0; i < side; ++i)
        for (long j = 0; j < side; ++j) {
            // Range of alpha + beta r + gamma s over the closed rectangle.
            Rational lo = plane.alpha, hi = plane.alpha;
            for (const auto& [c, idx] : {std::pair{plane.beta, i}, std::pair{plane.gamma, j}}) {
                const Rational a = c * make_rational(idx, side), b = c * make_rational(idx + 1, side);
                lo += std::min(a, b);
                hi += std::max(a, b);
            }
            for (long k = 0; k < side; ++k)
                if (make_rational(k, side) <= hi && make_rational(k + 1, side) >= lo)
                    out.push_back({i, j, k});
        }
    return out;
}

CubeDensity realize(const DensitySpec& g, long N)
{
    CubeDensity d;
    d.side = isqrt_power_of_four(N);
    const long side = d.side;
    const auto cells = static_cast<std::size_t>(side * side * side);
    d.values.assign(cells, cplx{});
    auto unit = [](std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
        Stream rng(seed, stream, index);
        return std::polar(1.0, kTwoPi * rng.uniform());
    };
    switch (g.kind) {
    case DensityKind::ONE:
        std::fill(d.values.begin(), d.values.end(), cplx{1.0, 0.0});
        break;
    case DensityKind::RANDOM_UNIT_MODULUS:
        for (std::size_t c = 0; c < cells; ++c)
            d.values[c] = unit(g.seed, 4, c);
        break;
    case DensityKind::SINGLE_DELTA:
        for (long v : g.delta)
            if (v < 0 || v >= side)
                throw InvalidArgument("delta cube index outside the " + std::to_string(side) + "^3 partition");
        d.values[static_cast<std::size_t>((g.delta[0] * side + g.delta[1]) * side + g.delta[2])] = 1.0;
        break;
    case DensityKind::PLANE_CLUSTER:
        for (const auto& c : plane_cubes(g.plane, N))
            d.values[static_cast<std::size_t>((c[0] * side + c[1]) * side + c[2])] = 1.0;
        break;
    case DensityKind::PRODUCT: {
        if (g.split_axis < 0 || g.split_axis > 2)
            throw InvalidArgument("split axis must be 0, 1 or 2");
        const int ax = g.split_axis;
        const int o1 = ax == 0 ? 1 : 0, o2 = ax == 2 ? 1 : 2;
        for (long i = 0; i < side; ++i)
            for (long j = 0; j < side; ++j)
                for (long k = 0; k < side; ++k) {
                    const long idx[3] = {i, j, k};
                    const auto pair_index = static_cast<std::uint64_t>(idx[o1] * side + idx[o2]);
                    const cplx g1 = g.factor_seed1 ? unit(g.factor_seed1, 7, pair_index) : cplx{1.0, 0.0};
                    const cplx g2 = g.factor_seed2 ? unit(g.factor_seed2, 8, static_cast<std::uint64_t>(idx[ax])) : cplx{1.0, 0.0};
                    d.values[static_cast<std::size_t>((i * side + j) * side + k)] = g1 * g2;
                }
        break;
    }
    }
    return d;
}

double gradient_bound(const QuadraticPair& pair)
{
    const auto d = to_double(pair);
    double G = 0;
    for (int f = 0; f < 2; ++f) {
        double s = 0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                s += 2.0 * std::abs(d.a[f][i][j]);
        G = std::max(G, s);
    }
    return G;
}

double max_step(const QuadraticPair& pair, const Vec5& x)
{
    double m = 0;
    for (double v : x)
        m = std::max(m, std::abs(v));
    if (m == 0)
        return std::numeric_limits<double>::infinity();
    return 1.0 / (4.0 * m * (1.0 + gradient_bound(pair)));
}

bool separable(const QuadraticPair& pair)
{
    return pair.A1.is_diagonal() && pair.A2.is_diagonal();
}

cplx extension_eval(const QuadraticPair& pair, const CubeDensity& g, const Box& R, const Vec5& x, double h, bool auto_refine)
{
    h = step_for(pair, x, h, auto_refine);
    if (!separable(pair))
        return extension_eval_direct(pair, g, R, x, h);
    const auto d = to_double(pair);
    const long side = g.side;
    std::vector<cplx> I[3];
    for (int a = 0; a < 3; ++a) {
        I[a].resize(static_cast<std::size_t>(side));
        const double b = x[3] * d.a[0][a][a] + x[4] * d.a[1][a][a];
        axis_block_sums(x[a], b, R.lo[a], R.hi[a], nodes_for(R.hi[a] - R.lo[a], h), side, I[a].data());
    }
    KahanSum<cplx> acc;
    for (long i = 0; i < side; ++i)
        for (long j = 0; j < side; ++j) {
            const cplx ij = I[0][i] * I[1][j];
            for (long k = 0; k < side; ++k)
                acc.add(g(i, j, k) * ij * I[2][k]);
        }
    return acc.value();
}

cplx extension_eval_direct(const QuadraticPair& pair, const CubeDensity& g, const Box& R, const Vec5& x, double h)
{
    const auto d = to_double(pair);
    long n[3];
    double step[3];
    for (int a = 0; a < 3; ++a) {
        n[a] = nodes_for(R.hi[a] - R.lo[a], h);
        step[a] = (R.hi[a] - R.lo[a]) / static_cast<double>(n[a]);
    }
    std::vector<cplx> rows(static_cast<std::size_t>(n[0]));
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n[0]; ++i) {
        const double r = R.lo[0] + (static_cast<double>(i) + 0.5) * step[0];
        KahanSum<cplx> acc;
        for (long j = 0; j < n[1]; ++j) {
            const double s = R.lo[1] + (static_cast<double>(j) + 0.5) * step[1];
            for (long k = 0; k < n[2]; ++k) {
                const double t = R.lo[2] + (static_cast<double>(k) + 0.5) * step[2];
                acc.add(g.at(r, s, t) * expi(phase_at(d, x, r, s, t)));
            }
        }
        rows[static_cast<std::size_t>(i)] = acc.value();
    }
    return pairwise_sum(std::span<const cplx>(rows)) * (step[0] * step[1] * step[2]);
}

cplx extension_eval_serial(const QuadraticPair& pair, const CubeDensity& g, const Box& R, const Vec5& x, double h)
{
    const auto d = to_double(pair);
    long n[3];
    double step[3];
    for (int a = 0; a < 3; ++a) {
        n[a] = nodes_for(R.hi[a] - R.lo[a], h);
        step[a] = (R.hi[a] - R.lo[a]) / static_cast<double>(n[a]);
    }
    KahanSum<cplx> acc;
    for (long i = 0; i < n[0]; ++i)
        for (long j = 0; j < n[1]; ++j)
            for (long k = 0; k < n[2]; ++k) {
                const double r = R.lo[0] + (static_cast<double>(i) + 0.5) * step[0];
                const double s = R.lo[1] + (static_cast<double>(j) + 0.5) * step[1];
                const double t = R.lo[2] + (static_cast<double>(k) + 0.5) * step[2];
                acc.add(g.at(r, s, t) * expi(phase_at(d, x, r, s, t)));
            }
    return acc.value() * (step[0] * step[1] * step[2]);
}

namespace {

// Sum over i3 of e(c0 + c1 i3 + c2 i3^2), i3 = 0..N, by phase recurrence.
cplx quadratic_row(double c0, double c1, double c2, long N)
{
    if (c2 == 0.0) {
        const double f = c1 - std::round(c1);
        if (std::abs(f) > 1e-3)
            return expi(c0 + 0.5 * static_cast<double>(N) * f) *
                   (std::sin(std::numbers::pi * static_cast<double>(N + 1) * f) / std::sin(std::numbers::pi * f));
    }
    cplx z = expi(c0), w = expi(c1 + c2);
    const cplx rot = expi(2.0 * c2);
    KahanSum<cplx> acc;
    for (long k = 0; k <= N; ++k) {
        acc.add(z);
        z *= w;
        w *= rot;
    }
    return acc.value();
}

cplx lattice_separable(const PairD& d, long N, const Vec5& x)
{
    const double inv = 1.0 / static_cast<double>(N);
    cplx prod{1.0, 0.0};
    for (int a = 0; a < 3; ++a) {
        const double b = (x[3] * d.a[0][a][a] + x[4] * d.a[1][a][a]) * inv * inv;
        prod *= quadratic_row(0.0, x[a] * inv, b, N);
    }
    return prod;
}

cplx lattice_rows(const PairD& d, long N, const Vec5& x, bool parallel)
{
    const double inv = 1.0 / static_cast<double>(N);
    double B[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            B[i][j] = x[3] * d.a[0][i][j] + x[4] * d.a[1][i][j];
    const long rows = (N + 1) * (N + 1);
    std::vector<cplx> part(static_cast<std::size_t>(rows));
    auto row = [&](long idx) {
        const double u1 = static_cast<double>(idx / (N + 1)) * inv, u2 = static_cast<double>(idx % (N + 1)) * inv;
        const double c0 = x[0] * u1 + x[1] * u2 + B[0][0] * u1 * u1 + B[1][1] * u2 * u2 + 2.0 * B[0][1] * u1 * u2;
        const double c1 = (x[2] + 2.0 * (B[0][2] * u1 + B[1][2] * u2)) * inv;
        const double c2 = B[2][2] * inv * inv;
        part[static_cast<std::size_t>(idx)] = quadratic_row(c0, c1, c2, N);
    };
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (long idx = 0; idx < rows; ++idx)
            row(idx);
    } else {
        for (long idx = 0; idx < rows; ++idx)
            row(idx);
    }
    return pairwise_sum(std::span<const cplx>(part));
}

} // namespace

cplx lattice_exp_sum(const QuadraticPair& pair, long N, const Vec5& x)
{
    if (N < 1)
        throw InvalidArgument("N must be positive");
    const auto d = to_double(pair);
    return separable(pair) ? lattice_separable(d, N, x) : lattice_rows(d, N, x, true);
}

cplx lattice_exp_sum_serial(const QuadraticPair& pair, long N, const Vec5& x)
{
    if (N < 1)
        throw InvalidArgument("N must be positive");
    const auto d = to_double(pair);
    const double inv = 1.0 / static_cast<double>(N);
    KahanSum<cplx> acc;
    for (long i = 0; i <= N; ++i)
        for (long j = 0; j <= N; ++j)
            for (long k = 0; k <= N; ++k)
                acc.add(expi(phase_at(d, x, static_cast<double>(i) * inv, static_cast<double>(j) * inv, static_cast<double>(k) * inv)));
    return acc.value();
}

namespace detail {

// Per-sample lattice sum without nested parallelism.
cplx lattice_exp_sum_inner(const QuadraticPair& pair, long N, const Vec5& x)
{
    const auto d = to_double(pair);
    return separable(pair) ? lattice_separable(d, N, x) : lattice_rows(d, N, x, false);
}

// Per-cube values E_cube 1(x) on [0,1]^3, midpoint step at most h with a
// whole number of nodes per cube.
void cube_values(const QuadraticPair& pair, long side, const Vec5& x, double h, std::vector<cplx>& out, std::vector<cplx>& scratch)
{
    const auto d = to_double(pair);
    const long per = std::max(1L, static_cast<long>(std::ceil(1.0 / (static_cast<double>(side) * h) - 1e-9)));
    const long n = per * side;
    const auto cells = static_cast<std::size_t>(side * side * side);
    out.assign(cells, cplx{});
    if (separable(pair)) {
        scratch.resize(static_cast<std::size_t>(3 * side));
        for (int a = 0; a < 3; ++a) {
            const double b = x[3] * d.a[0][a][a] + x[4] * d.a[1][a][a];
            axis_block_sums(x[a], b, 0.0, 1.0, n, side, scratch.data() + a * side);
        }
        const cplx* I0 = scratch.data();
        const cplx* I1 = I0 + side;
        const cplx* I2 = I1 + side;
        for (long i = 0; i < side; ++i)
            for (long j = 0; j < side; ++j) {
                const cplx ij = I0[i] * I1[j];
                for (long k = 0; k < side; ++k)
                    out[static_cast<std::size_t>((i * side + j) * side + k)] = ij * I2[k];
            }
        return;
    }
    const double step = 1.0 / static_cast<double>(n);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j)
            for (long k = 0; k < n; ++k) {
                const double r = (static_cast<double>(i) + 0.5) * step, s = (static_cast<double>(j) + 0.5) * step,
                             t = (static_cast<double>(k) + 0.5) * step;
                out[static_cast<std::size_t>(((i / per) * side + j / per) * side + k / per)] += expi(phase_at(d, x, r, s, t));
            }
    const double vol = step * step * step;
    for (auto& z : out)
        z *= vol;
}

} // namespace detail

// ---------------------------------------------------------------------------

Proposal::Proposal(const WeightBall& ball) : ball_(ball), truncation_(kTruncation * ball.radius)
{
    if (!(ball.C > 5))
        throw InvalidArgument("weight exponent must exceed 5");
    const double R = ball.radius;
    std::vector<std::pair<double, double>> scales{{R, ball.C}};
    if (std::sqrt(R) < R)
        scales.push_back({std::sqrt(R), 10.0});
    if (1.0 < std::sqrt(R))
        scales.push_back({1.0, 10.0});
    const double rest = scales.size() == 1 ? 0.0 : 0.4 / static_cast<double>(scales.size() - 1);
    for (std::size_t i = 0; i < scales.size(); ++i) {
        const auto [s, shape] = scales[i];
        const double U = truncation_ / s;
        Component c{};
        c.scale = s;
        c.shape = shape;
        c.weight = i == 0 ? 1.0 - rest * static_cast<double>(scales.size() - 1) : rest;
        c.norm = kSphere4 * std::pow(s, 5) * radial_mass(shape, U);
        c.cdf_max = boost::math::ibeta(5.0, shape - 5.0, U / (1.0 + U));
        parts_.push_back(c);
    }
}

double Proposal::density(double rho) const
{
    double q = 0;
    for (const auto& c : parts_)
        q += c.weight * std::pow(1.0 + rho / c.scale, -c.shape) / c.norm;
    return q;
}

double Proposal::sample(Stream& rng, Vec5& x) const
{
    const double pick = rng.uniform();
    std::size_t k = 0;
    double cum = parts_[0].weight;
    while (k + 1 < parts_.size() && pick >= cum)
        cum += parts_[++k].weight;
    const auto& c = parts_[k];
    const double v = rng.uniform();
    const double X = boost::math::ibeta_inv(5.0, c.shape - 5.0, v * c.cdf_max);
    const double rho = std::min(c.scale * X / (1.0 - X), truncation_);
    double dir[5], n2 = 0;
    for (double& u : dir) {
        u = rng.normal();
        n2 += u * u;
    }
    const double inv = 1.0 / std::sqrt(n2);
    for (int i = 0; i < 5; ++i)
        x[i] = ball_.center[i] + rho * dir[i] * inv;
    return std::pow(1.0 + rho / ball_.radius, -ball_.C) / density(rho);
}

} // namespace qlab
