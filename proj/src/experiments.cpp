#include "qlab/classify.hpp"
#include "qlab/errors.hpp"
#include "qlab/oscsum.hpp"
#include "qlab/parallel.hpp"

#include "oscsum_detail.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>

namespace qlab {

namespace {

std::vector<double> batch_means(const double* v, std::size_t m, std::size_t batches)
{
    const std::size_t B = std::min(batches, m);
    std::vector<double> out(B);
    for (std::size_t b = 0; b < B; ++b) {
        const std::size_t lo = b * m / B, hi = (b + 1) * m / B;
        out[b] = pairwise_sum(std::span<const double>(v + lo, hi - lo)) / static_cast<double>(hi - lo);
    }
    return out;
}

double mean_of(const std::vector<double>& v)
{
    return v.empty() ? 0.0 : pairwise_sum(std::span<const double>(v)) / static_cast<double>(v.size());
}

// Sample covariance of two equally long sequences.
double covariance(const std::vector<double>& a, const std::vector<double>& b)
{
    const std::size_t n = a.size();
    if (n < 2)
        return 0;
    const double ma = mean_of(a), mb = mean_of(b);
    double s = 0;
    for (std::size_t i = 0; i < n; ++i)
        s += (a[i] - ma) * (b[i] - mb);
    return s / static_cast<double>(n - 1);
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string quote(const std::string& f)
{
    if (f.find_first_of(",\"\r\n") == std::string::npos)
        return f;
    std::string out = "\"";
    for (char c : f) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

double batch_stderr(const std::vector<double>& v, std::size_t batches)
{
    const auto bm = batch_means(v.data(), v.size(), batches);
    if (bm.size() < 2)
        return 0;
    return std::sqrt(covariance(bm, bm) / static_cast<double>(bm.size()));
}

LpEstimate weighted_lp_norm(const std::function<cplx(const Vec5&)>& F, const WeightBall& ball, double p, std::size_t mc,
                            std::uint64_t seed)
{
    const Proposal prop(ball);
    std::vector<double> f(mc);
#pragma omp parallel for schedule(dynamic, 64)
    for (std::size_t i = 0; i < mc; ++i) {
        Stream rng(seed, 9, i);
        Vec5 x;
        const double wt = prop.sample(rng, x);
        f[i] = std::pow(std::norm(F(x)), p / 2) * wt;
    }
    LpEstimate e;
    e.samples = mc;
    e.integral = mean_of(f);
    e.integral_stderr = batch_stderr(f);
    e.value = std::pow(e.integral, 1.0 / p);
    e.stderr_ = e.integral > 0 ? e.value * e.integral_stderr / (p * e.integral) : 0.0;
    return e;
}

// ---------------------------------------------------------------------------

std::string csv_header()
{
    return "pair_hash,N,p,lhs,rhs,ratio,stderr,mc,h,C,seed";
}

std::string csv_row(const ExperimentRecord& r)
{
    return quote(r.pair_hash) + "," + std::to_string(r.N) + "," + fmt(r.p) + "," + fmt(r.lhs) + "," + fmt(r.rhs) + "," +
           fmt(r.ratio) + "," + fmt(r.stderr_) + "," + std::to_string(r.mc) + "," + fmt(r.h) + "," + fmt(r.C) + "," +
           std::to_string(r.seed);
}

void write_csv(std::ostream& out, const std::vector<ExperimentRecord>& records)
{
    out << csv_header() << "\r\n";
    for (const auto& r : records)
        out << csv_row(r) << "\r\n";
}

std::size_t CsvTable::column(const std::string& name) const
{
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
        throw SchemaError("no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(std::istream& in, const std::string& source)
{
    CsvTable t;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false, any = false;
    std::size_t line = 1, record_line = 1;
    auto end_record = [&] {
        record.push_back(field);
        field.clear();
        if (t.header.empty()) {
            t.header = record;
        } else if (!(record.size() == 1 && record[0].empty())) {
            if (record.size() != t.header.size())
                throw SchemaError(source + ":" + std::to_string(record_line) + ": expected " + std::to_string(t.header.size()) +
                                  " fields, found " + std::to_string(record.size()));
            t.rows.push_back(record);
        }
        record.clear();
        any = false;
    };
    char c;
    while (in.get(c)) {
        if (!any) {
            record_line = line;
            any = true;
        }
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field += '"';
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n')
                    ++line;
                field += c;
            }
            continue;
        }
        if (c == '"') {
            if (!field.empty())
                throw SchemaError(source + ":" + std::to_string(line) + ": stray quote");
            quoted = true;
        } else if (c == ',') {
            record.push_back(field);
            field.clear();
        } else if (c == '\r') {
            if (in.peek() == '\n')
                in.get(c);
            ++line;
            end_record();
        } else if (c == '\n') {
            ++line;
            end_record();
        } else {
            field += c;
        }
    }
    if (quoted)
        throw SchemaError(source + ":" + std::to_string(record_line) + ": unterminated quote");
    if (any)
        end_record();
    if (t.header.empty())
        throw SchemaError(source + ": empty file");
    return t;
}

// ---------------------------------------------------------------------------

std::vector<ExperimentRecord> decoupling_ratio(const QuadraticPair& pair, const CubeDensity& g, long N, const std::vector<double>& ps,
                                               const SamplingConfig& cfg)
{
    if (g.side * g.side != N)
        throw InvalidArgument("density partition does not match N");
    if (ps.empty())
        return {};
    std::vector<std::pair<std::size_t, cplx>> cells;
    for (std::size_t c = 0; c < g.values.size(); ++c)
        if (g.values[c] != cplx{})
            cells.emplace_back(c, g.values[c]);

    const WeightBall ball{{}, cfg.ball_scale * static_cast<double>(N), cfg.C};
    const Proposal prop(ball);
    const double h0 = cfg.h > 0 ? cfg.h : 1.0 / (8.0 * static_cast<double>(N));
    const std::size_t M = cfg.mc, P = ps.size();
    std::vector<double> L(P * M), R(P * M);

#pragma omp parallel
    {
        std::vector<cplx> vals, scratch;
        std::vector<double> rs(P);
#pragma omp for schedule(dynamic, 64)
        for (std::size_t i = 0; i < M; ++i) {
            Stream rng(cfg.seed, 5, i);
            Vec5 x;
            const double wt = prop.sample(rng, x);
            detail::cube_values(pair, g.side, x, std::min(h0, max_step(pair, x)), vals, scratch);
            cplx total{};
            std::fill(rs.begin(), rs.end(), 0.0);
            for (const auto& [c, gv] : cells) {
                const cplx z = gv * vals[c];
                total += z;
                const double n2 = std::norm(z);
                for (std::size_t k = 0; k < P; ++k)
                    rs[k] += std::pow(n2, ps[k] / 2);
            }
            const double n2 = std::norm(total);
            for (std::size_t k = 0; k < P; ++k) {
                L[k * M + i] = std::pow(n2, ps[k] / 2) * wt;
                R[k * M + i] = rs[k] * wt;
            }
        }
    }

    std::vector<ExperimentRecord> out;
    const std::string hash = pair_hash(pair);
    for (std::size_t k = 0; k < P; ++k) {
        const double p = ps[k];
        const double* Lk = L.data() + k * M;
        const double* Rk = R.data() + k * M;
        const double Lm = pairwise_sum(std::span<const double>(Lk, M)) / static_cast<double>(M);
        const double Rm = pairwise_sum(std::span<const double>(Rk, M)) / static_cast<double>(M);
        ExperimentRecord r;
        r.pair_hash = hash;
        r.N = N;
        r.p = p;
        r.lhs = std::pow(Lm, 1.0 / p);
        r.rhs = std::pow(Rm, 1.0 / p);
        r.ratio = r.rhs > 0 ? r.lhs / r.rhs : 0.0;
        if (Lm > 0 && Rm > 0) {
            const auto bl = batch_means(Lk, M, cfg.batches), br = batch_means(Rk, M, cfg.batches);
            const double B = static_cast<double>(bl.size());
            const double rel2 = covariance(bl, bl) / B / (Lm * Lm) + covariance(br, br) / B / (Rm * Rm) -
                                2.0 * covariance(bl, br) / B / (Lm * Rm);
            r.stderr_ = r.ratio * std::sqrt(std::max(0.0, rel2)) / p;
        }
        r.mc = M;
        r.h = h0;
        r.C = cfg.C;
        r.seed = cfg.seed;
        out.push_back(r);
    }
    return out;
}

std::vector<ExperimentRecord> decoupling_ratio(const QuadraticPair& pair, const DensitySpec& g, long N, const std::vector<double>& ps,
                                               const SamplingConfig& cfg)
{
    return decoupling_ratio(pair, realize(g, N), N, ps, cfg);
}

ExperimentRecord decoupling_ratio(const QuadraticPair& pair, const DensitySpec& g, long N, double p, const SamplingConfig& cfg)
{
    return decoupling_ratio(pair, g, N, std::vector<double>{p}, cfg).front();
}

// ---------------------------------------------------------------------------

std::vector<ExpSumEstimate> exp_sum_lp_average(const QuadraticPair& pair, long N, const std::vector<double>& ps, std::size_t mc,
                                               std::uint64_t seed, std::size_t batches)
{
    if (N < 1)
        throw InvalidArgument("N must be positive");
    const double n = static_cast<double>(N);
    std::vector<double> a(mc);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::size_t i = 0; i < mc; ++i) {
        Stream rng(seed, 6, i);
        Vec5 x;
        for (int k = 0; k < 5; ++k)
            x[k] = rng.uniform() * (k < 3 ? n : n * n);
        a[i] = std::abs(detail::lattice_exp_sum_inner(pair, N, x));
    }
    std::vector<ExpSumEstimate> out;
    std::vector<double> f(mc);
    for (double p : ps) {
        for (std::size_t i = 0; i < mc; ++i)
            f[i] = std::pow(a[i], p);
        const double m = mean_of(f);
        ExpSumEstimate e;
        e.N = N;
        e.p = p;
        e.value = std::pow(m, 1.0 / p);
        e.stderr_ = m > 0 ? e.value * batch_stderr(f, batches) / (p * m) : 0.0;
        e.mc = mc;
        e.seed = seed;
        out.push_back(e);
    }
    return out;
}

ExperimentRecord to_record(const QuadraticPair& pair, const ExpSumEstimate& e)
{
    ExperimentRecord r;
    r.pair_hash = pair_hash(pair);
    r.N = e.N;
    r.p = e.p;
    r.lhs = e.value;
    r.rhs = 1.0;
    r.ratio = e.value;
    r.stderr_ = e.stderr_;
    r.mc = e.mc;
    r.seed = e.seed;
    return r;
}

MainArc main_arc(const QuadraticPair& pair, long N)
{
    double bound = 3.0;
    for (int f = 0; f < 2; ++f)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                bound += std::abs(pair.form(f)(i, j).get_d());
    MainArc m;
    m.eps = 1.0 / (6.0 * bound);
    const double n = static_cast<double>(N);
    m.fraction = std::pow(m.eps / n, 3) * std::pow(m.eps / (n * n), 2);
    return m;
}

double MainArc::floor(long N, double p) const
{
    return std::pow(fraction, 1.0 / p) * std::pow(static_cast<double>(N + 1), 3) / 2.0;
}

// ---------------------------------------------------------------------------

ScalingFit fit_scaling(const std::vector<std::pair<double, double>>& xy)
{
    std::vector<std::pair<double, double>> pts;
    std::set<double> xs;
    for (const auto& [x, y] : xy)
        if (x > 0 && y > 0 && std::isfinite(x) && std::isfinite(y)) {
            pts.emplace_back(std::log(x), std::log(y));
            xs.insert(x);
        }
    if (xs.size() < 3)
        throw InsufficientData(std::to_string(xs.size()) + " distinct abscissae, need 3");
    const double n = static_cast<double>(pts.size());
    double mx = 0, my = 0;
    for (const auto& [x, y] : pts) {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (const auto& [x, y] : pts) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    ScalingFit f;
    f.points = pts.size();
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ssr = 0;
    for (const auto& [x, y] : pts) {
        const double e = y - f.intercept - f.slope * x;
        ssr += e * e;
    }
    f.residual = std::sqrt(ssr / n);
    const boost::math::students_t dist(n - 2);
    f.ci_half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * std::sqrt(ssr / (n - 2) / sxx);
    return f;
}

ScalingFit fit_scaling(const std::vector<ExperimentRecord>& records)
{
    std::vector<std::pair<double, double>> xy;
    for (const auto& r : records)
        xy.emplace_back(static_cast<double>(r.N), r.ratio);
    return fit_scaling(xy);
}

namespace {

void fit_if_possible(ExperimentSeries& s)
{
    try {
        s.fit = fit_scaling(s.records);
    } catch (const InsufficientData&) {
    }
}

} // namespace

ExperimentSeries degenerate_product_bound(const QuadraticPair& pair, const std::vector<long>& Ns, double p, const SamplingConfig& cfg,
                                          bool single_delta)
{
    if (!separable(pair))
        throw WrongTaxonomy("expects the diagonalized pair");
    LambdaQ lambda;
    for (int f = 0; f < 2; ++f)
        for (int j = 0; j < 3; ++j)
            lambda[f][j] = pair.form(f)(j, j);
    const auto tax = minor_taxonomy(lambda);
    if (tax.all_minors_nonzero)
        throw WrongTaxonomy("all 2x2 minors are nonzero");
    int axis = 2;
    switch (tax.matches.front().type) {
    case MinorType::Split1_23:
        axis = 0;
        break;
    case MinorType::Split2_13:
        axis = 1;
        break;
    default:
        break;
    }
    DensitySpec g;
    g.kind = single_delta ? DensityKind::SINGLE_DELTA : DensityKind::PRODUCT;
    g.split_axis = axis;
    g.factor_seed1 = 2 * cfg.seed + 1;
    g.factor_seed2 = 2 * cfg.seed + 2;
    ExperimentSeries s;
    for (long N : Ns)
        s.records.push_back(decoupling_ratio(pair, g, N, p, cfg));
    fit_if_possible(s);
    return s;
}

ExperimentRecord plane_cluster_ratio(const QuadraticPair& pair, const Plane& plane, long K, double p, const SamplingConfig& cfg)
{
    if (p < 4 - 1e-9 || p > 6 + 1e-9)
        throw InvalidArgument("plane cluster experiments need 4 <= p <= 6");
    if (plane_cubes(plane, K).empty())
        throw EmptyCluster("the plane misses [0,1]^3");
    DensitySpec g;
    g.kind = DensityKind::PLANE_CLUSTER;
    g.plane = plane;
    return decoupling_ratio(pair, g, K, p, cfg);
}

ExperimentSeries plane_cluster_series(const QuadraticPair& pair, const Plane& plane, const std::vector<long>& Ks, double p,
                                      const SamplingConfig& cfg)
{
    ExperimentSeries s;
    for (long K : Ks)
        s.records.push_back(plane_cluster_ratio(pair, plane, K, p, cfg));
    fit_if_possible(s);
    return s;
}

Crossover critical_exponent_crossover(const std::vector<double>& ps, int d, int n)
{
    Crossover c;
    c.p_c = make_rational(4L * n, d) - 2;
    for (double p : ps) {
        CrossoverRow r;
        r.p = p;
        r.low_branch = d / 2.0 * (0.5 - 1.0 / p);
        r.high_branch = d / 2.0 - n / p;
        r.exponent = std::max(r.low_branch, r.high_branch);
        c.table.push_back(r);
    }
    return c;
}

} // namespace qlab
