#include "qlab/transversality.hpp"

#include "qlab/errors.hpp"
#include "qlab/exact_linalg.hpp"
#include "qlab/parallel.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace qlab {

namespace {

Eigen::Matrix3d dense_d(const SymMatrix3& a)
{
    Eigen::Matrix3d m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            m(i, j) = a(i, j).get_d();
    return m;
}

} // namespace

TangentFrame tangent_frame(const QuadraticPair& pair, double r, double s, double t)
{
    TangentFrame f;
    f.point = {r, s, t};
    const Eigen::Vector3d p(r, s, t);
    const Eigen::Vector3d g1 = 2.0 * dense_d(pair.A1) * p, g2 = 2.0 * dense_d(pair.A2) * p;
    for (int j = 0; j < 3; ++j) {
        f.n[j].setZero();
        f.n[j](j) = 1.0;
        f.n[j](3) = g1(j);
        f.n[j](4) = g2(j);
    }
    return f;
}

SubspaceSample make_subspace(const std::vector<Vec5d>& vectors)
{
    const int k = static_cast<int>(vectors.size());
    Eigen::Matrix<double, 5, Eigen::Dynamic> A(5, k);
    for (int c = 0; c < k; ++c)
        A.col(c) = vectors[c];
    Eigen::HouseholderQR<Eigen::Matrix<double, 5, Eigen::Dynamic>> qr(A);
    SubspaceSample V;
    V.dim = k;
    V.basis = qr.householderQ() * Eigen::Matrix<double, 5, Eigen::Dynamic>::Identity(5, k);
    return V;
}

SubspaceSample random_subspace(int dim, Stream& rng)
{
    std::vector<Vec5d> g(dim);
    for (auto& v : g)
        for (int i = 0; i < 5; ++i)
            v(i) = rng.normal();
    return make_subspace(g);
}

SubspaceSample to_sample(const ExactSubspace& v)
{
    std::vector<Vec5d> g;
    for (const auto& b : v.basis) {
        Vec5d x;
        for (int i = 0; i < 5; ++i)
            x(i) = b[i].get_d();
        g.push_back(x);
    }
    return make_subspace(g);
}

// ---------------------------------------------------------------------------

std::array<double, 3> CubeCollection::lower(std::size_t i) const
{
    const double K = static_cast<double>(scale);
    return {corners[i][0] / K, corners[i][1] / K, corners[i][2] / K};
}

std::array<double, 3> CubeCollection::center(std::size_t i) const
{
    const double K = static_cast<double>(scale);
    return {(corners[i][0] + 0.5) / K, (corners[i][1] + 0.5) / K, (corners[i][2] + 0.5) / K};
}

CubeCollection full_collection(long K)
{
    CubeCollection c;
    c.scale = K;
    for (long i = 0; i < K; ++i)
        for (long j = 0; j < K; ++j)
            for (long k = 0; k < K; ++k)
                c.corners.push_back({i, j, k});
    return c;
}

CubeCollection collection_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("scale") || !j.contains("corners"))
        throw SchemaError("cube collection needs \"scale\" and \"corners\"");
    if (!j["scale"].is_number_integer() || j["scale"].get<long>() < 1)
        throw SchemaError("\"scale\" must be a positive integer");
    CubeCollection c;
    c.scale = j["scale"].get<long>();
    if (!j["corners"].is_array())
        throw SchemaError("\"corners\" must be an array");
    for (const auto& e : j["corners"]) {
        if (!e.is_array() || e.size() != 3)
            throw SchemaError("each corner must be [i, j, k]");
        std::array<long, 3> v{};
        for (int k = 0; k < 3; ++k) {
            if (!e[k].is_number_integer())
                throw SchemaError("corner entries must be integers");
            v[k] = e[k].get<long>();
            if (v[k] < 0 || v[k] >= c.scale)
                throw SchemaError("corner " + e.dump() + " lies outside [0,1]^3");
        }
        c.corners.push_back(v);
    }
    if (j.contains("labels")) {
        for (const auto& l : j["labels"])
            c.labels.push_back(l.get<std::string>());
        if (c.labels.size() != c.corners.size())
            throw SchemaError("\"labels\" must match \"corners\" in length");
    }
    return c;
}

nlohmann::json collection_to_json(const CubeCollection& c)
{
    nlohmann::json j;
    j["scale"] = c.scale;
    j["corners"] = c.corners;
    if (!c.labels.empty())
        j["labels"] = c.labels;
    return j;
}

CubeCollection load_collection(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw SchemaError("cannot open cube file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1;
        for (std::size_t i = 0; i < e.byte && i < text.size(); ++i)
            if (text[i] == '\n')
                ++line;
        throw SchemaError(path + ":" + std::to_string(line) + ": " + e.what());
    }
    try {
        return collection_from_json(j);
    } catch (const SchemaError& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------

namespace {

double l1_maximal_minors(const Eigen::MatrixXd& M)
{
    const int k = static_cast<int>(M.rows());
    double s = 0;
    if (k == 1) {
        s = M.cwiseAbs().sum();
    } else if (k == 2) {
        for (int a = 0; a < 3; ++a)
            for (int b = a + 1; b < 3; ++b)
                s += std::abs(M(0, a) * M(1, b) - M(0, b) * M(1, a));
    } else if (k == 3) {
        s = std::abs(M.determinant());
    } else if (k == 4) {
        for (int skip = 0; skip < 4; ++skip) {
            Eigen::Matrix3d sub;
            for (int r = 0, o = 0; r < 4; ++r)
                if (r != skip)
                    sub.row(o++) = M.row(r);
            s += std::abs(sub.determinant());
        }
    } else {
        throw Error("minor_det: subspace dimension must be 1, 2 or 4");
    }
    return s;
}

} // namespace

ProjectionField::ProjectionField(const SubspaceSample& V, const QuadraticPair& pair) : k_(V.dim)
{
    if (k_ != 1 && k_ != 2 && k_ != 4)
        throw Error("subspace dimension must be 1, 2 or 4");
    const Eigen::Matrix3d G1 = 2.0 * dense_d(pair.A1), G2 = 2.0 * dense_d(pair.A2);
    for (auto& c : c_)
        c = Eigen::MatrixXd::Zero(k_, 3);
    for (int a = 0; a < k_; ++a)
        for (int j = 0; j < 3; ++j) {
            c_[0](a, j) = V.basis(j, a);
            for (int m = 0; m < 3; ++m)
                c_[1 + m](a, j) = V.basis(3, a) * G1(j, m) + V.basis(4, a) * G2(j, m);
        }
}

Eigen::MatrixXd ProjectionField::matrix(const std::array<double, 3>& p) const
{
    return c_[0] + p[0] * c_[1] + p[1] * c_[2] + p[2] * c_[3];
}

double ProjectionField::minor_det(const std::array<double, 3>& p) const
{
    return l1_maximal_minors(matrix(p));
}

double minor_det(const SubspaceSample& V, const std::array<double, 3>& point, const QuadraticPair& pair)
{
    return ProjectionField(V, pair).minor_det(point);
}

double set_infimum(const ProjectionField& field, const CubeCollection& cubes, std::size_t i, const InfimumOptions& opt)
{
    const auto lo = cubes.lower(i);
    const double side = 1.0 / static_cast<double>(cubes.scale);
    const int g = std::max(2, opt.grid);
    double best = std::numeric_limits<double>::infinity();
    std::array<double, 3> arg = lo;
    for (int a = 0; a < g; ++a)
        for (int b = 0; b < g; ++b)
            for (int c = 0; c < g; ++c) {
                const std::array<double, 3> p{lo[0] + side * a / (g - 1), lo[1] + side * b / (g - 1),
                                              lo[2] + side * c / (g - 1)};
                const double v = field.minor_det(p);
                if (v < best) {
                    best = v;
                    arg = p;
                }
            }
    const double h = side / 16;
    for (int round = 0; round < opt.descent_rounds; ++round) {
        bool moved = false;
        for (int k = 0; k < 3; ++k)
            for (double dir : {-1.0, 1.0}) {
                auto p = arg;
                p[k] = std::clamp(p[k] + dir * h, lo[k], lo[k] + side);
                const double v = field.minor_det(p);
                if (v < best) {
                    best = v;
                    arg = p;
                    moved = true;
                }
            }
        if (!moved)
            break;
    }
    return best;
}

double set_infimum(const SubspaceSample& V, const CubeCollection& cubes, std::size_t i, const QuadraticPair& pair,
                   const InfimumOptions& opt)
{
    return set_infimum(ProjectionField(V, pair), cubes, i, opt);
}

std::size_t order_statistic_index(std::size_t m)
{
    return std::max<std::size_t>(1, m / 100);
}

double nu_of_subspace(std::vector<double> infima, std::size_t q)
{
    if (infima.empty())
        throw EmptyCollection("no sets");
    q = std::clamp<std::size_t>(q, 1, infima.size());
    std::nth_element(infima.begin(), infima.begin() + static_cast<long>(q - 1), infima.end());
    return infima[q - 1];
}

namespace {

struct Scored {
    double value;
    std::vector<double> infima;
};

Scored score(const SubspaceSample& V, const CubeCollection& cubes, const QuadraticPair& pair, const InfimumOptions& opt,
             std::size_t q)
{
    const ProjectionField field(V, pair);
    Scored s;
    s.infima.resize(cubes.size());
    for (std::size_t i = 0; i < cubes.size(); ++i)
        s.infima[i] = set_infimum(field, cubes, i, opt);
    s.value = nu_of_subspace(s.infima, q);
    return s;
}

} // namespace

NuEstimate nu_estimate(const CubeCollection& cubes, const QuadraticPair& pair, const NuOptions& opt)
{
    if (cubes.size() == 0)
        throw EmptyCollection("cube collection is empty");
    if (opt.dims.empty() || opt.samples == 0)
        throw Error("nu_estimate needs at least one dimension and one sample");
    NuEstimate out;
    out.m = cubes.size();
    out.q = order_statistic_index(out.m);
    out.samples = opt.samples;
    if (out.m < 10000)
        out.warning = "m = " + std::to_string(out.m) + " < 10^4; q = max(1, floor(m/100)) used";

    const std::size_t n = opt.samples;
    auto subspace = [&](std::size_t s) {
        const int dim = opt.dims[s % opt.dims.size()];
        Stream rng(opt.seed, 1, s);
        return random_subspace(dim, rng);
    };

    InfimumOptions coarse{opt.coarse_grid, 0};
    std::vector<double> coarse_value(n);
#pragma omp parallel for schedule(dynamic)
    for (long s = 0; s < static_cast<long>(n); ++s)
        coarse_value[s] = score(subspace(s), cubes, pair, coarse, out.q).value;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return coarse_value[a] < coarse_value[b]; });
    const std::size_t nref = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(opt.refine_fraction * static_cast<double>(n))), 1, n);
    out.refined = nref;

    std::vector<double> final_value = coarse_value;
    std::vector<SubspaceSample> final_space(nref);
#pragma omp parallel for schedule(dynamic)
    for (long r = 0; r < static_cast<long>(nref); ++r) {
        const std::size_t s = order[r];
        SubspaceSample V = subspace(s);
        double best = score(V, cubes, pair, opt.fine, out.q).value;
        Stream rng(opt.seed, 2, s);
        double radius = 0.1;
        for (int k = 0; k < opt.perturbations; ++k) {
            std::vector<Vec5d> cols(V.dim);
            for (int c = 0; c < V.dim; ++c) {
                cols[c] = V.basis.col(c);
                for (int i = 0; i < 5; ++i)
                    cols[c](i) += radius * rng.normal();
            }
            SubspaceSample W = make_subspace(cols);
            const double v = score(W, cubes, pair, opt.fine, out.q).value;
            if (v < best) {
                best = v;
                V = W;
            } else {
                radius /= 2;
            }
        }
        final_value[s] = std::min(best, coarse_value[s]);
        final_space[r] = V;
    }

    std::size_t best_s = 0;
    for (std::size_t s = 1; s < n; ++s)
        if (final_value[s] < final_value[best_s])
            best_s = s;
    out.value = final_value[best_s];
    for (int d : opt.dims) {
        double v = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < n; ++s)
            if (opt.dims[s % opt.dims.size()] == d)
                v = std::min(v, final_value[s]);
        out.per_dim.emplace_back(d, v);
    }
    out.witness = subspace(best_s);
    for (std::size_t r = 0; r < nref; ++r)
        if (order[r] == best_s)
            out.witness = final_space[r];

    const Scored ws = score(out.witness, cubes, pair, opt.fine, out.q);
    std::vector<std::size_t> idx(out.m);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return ws.infima[a] < ws.infima[b]; });
    out.witness_indices.assign(idx.begin(), idx.begin() + static_cast<long>(out.q));
    return out;
}

nlohmann::json to_json(const NuEstimate& e)
{
    nlohmann::json j;
    j["value"] = e.value;
    nlohmann::json pd = nlohmann::json::object();
    for (const auto& [d, v] : e.per_dim)
        pd[std::to_string(d)] = v;
    j["per_dim"] = pd;
    nlohmann::json basis = nlohmann::json::array();
    for (int c = 0; c < e.witness.dim; ++c) {
        nlohmann::json col = nlohmann::json::array();
        for (int i = 0; i < 5; ++i)
            col.push_back(e.witness.basis(i, c));
        basis.push_back(col);
    }
    j["witness"] = {{"dim", e.witness.dim}, {"basis", basis}, {"indices", e.witness_indices}};
    j["samples"] = e.samples;
    j["refined"] = e.refined;
    j["m"] = e.m;
    j["q"] = e.q;
    j["kind"] = "sampled upper bound";
    if (e.warning)
        j["warning"] = *e.warning;
    return j;
}

// ---------------------------------------------------------------------------
// Bad sets

namespace {

// Entry <x, n_j> as an affine polynomial in (r, s, t).
Quadric3 entry(const Vec5Q& x, const QuadraticPair& pair, int j)
{
    Vec3Q lin;
    for (int m = 0; m < 3; ++m)
        lin[m] = 2 * (x[3] * pair.A1(j, m) + x[4] * pair.A2(j, m));
    return Quadric3::affine(x[j], lin);
}

Quadric3 det2(const Quadric3& a, const Quadric3& b, const Quadric3& c, const Quadric3& d)
{
    return a * d - b * c;
}

} // namespace

std::vector<Quadric3> bad_set_polynomials(const ExactSubspace& V, const QuadraticPair& pair)
{
    const int k = V.dim();
    if (k != 1 && k != 2 && k != 4)
        throw Error("bad_set_polynomials: dimension must be 1, 2 or 4");
    QMatrix B(k, 5);
    for (int a = 0; a < k; ++a)
        for (int i = 0; i < 5; ++i)
            B(a, i) = V.basis[a][i];
    if (rank(B) != static_cast<std::size_t>(k))
        throw Error("bad_set_polynomials: basis vectors are dependent");

    std::vector<Vec5Q> rows = V.basis;
    if (k == 4) {
        // Rows 0, 1 of the new basis vanish on the last two coordinates, so
        // every 3 x 3 minor has a constant row and degree <= 2.
        QMatrix S(5, 4);
        for (int a = 0; a < 4; ++a)
            for (int i = 0; i < 5; ++i)
                S(i, a) = V.basis[a][i];
        QMatrix last(2, 4);
        for (int a = 0; a < 4; ++a) {
            last(0, a) = S(3, a);
            last(1, a) = S(4, a);
        }
        auto comb = nullspace(last); // coefficient vectors c with sum c_a x_a in {x4 = x5 = 0}
        std::vector<Vec5Q> fresh;
        for (const auto& c : comb) {
            Vec5Q v{};
            for (int i = 0; i < 5; ++i)
                for (int a = 0; a < 4; ++a)
                    v[i] += c[a] * V.basis[a][i];
            fresh.push_back(v);
        }
        // Complete to a basis of V with original vectors.
        for (const auto& b : V.basis) {
            if (fresh.size() == 4)
                break;
            QMatrix T(fresh.size() + 1, 5);
            for (std::size_t a = 0; a < fresh.size(); ++a)
                for (int i = 0; i < 5; ++i)
                    T(a, i) = fresh[a][i];
            for (int i = 0; i < 5; ++i)
                T(fresh.size(), i) = b[i];
            if (rank(T) == fresh.size() + 1)
                fresh.push_back(b);
        }
        rows = fresh;
    }

    std::vector<std::array<Quadric3, 3>> M(k);
    for (int a = 0; a < k; ++a)
        for (int j = 0; j < 3; ++j)
            M[a][j] = entry(rows[a], pair, j);

    std::vector<Quadric3> cand;
    if (k == 1) {
        for (int j = 0; j < 3; ++j)
            cand.push_back(M[0][j]);
    } else if (k == 2) {
        for (int a = 0; a < 3; ++a)
            for (int b = a + 1; b < 3; ++b)
                cand.push_back(det2(M[0][a], M[0][b], M[1][a], M[1][b]));
    } else {
        for (int skip = 3; skip >= 0; --skip) {
            std::array<int, 3> r{};
            for (int x = 0, o = 0; x < 4; ++x)
                if (x != skip)
                    r[o++] = x;
            // Expand along the first chosen row; r[0] is 0 or 1, a constant row.
            Quadric3 d;
            for (int j = 0; j < 3; ++j) {
                const int a = (j + 1) % 3, b = (j + 2) % 3;
                const Quadric3 cof = det2(M[r[1]][a], M[r[1]][b], M[r[2]][a], M[r[2]][b]);
                d = d + M[r[0]][j].coeff[0] * cof;
            }
            cand.push_back(d);
        }
    }

    std::vector<Quadric3> out;
    for (const auto& p : cand) {
        if (p.is_zero())
            continue;
        if (p.is_constant())
            return {Quadric3::constant(1)};
        out.push_back(p);
    }
    if (out.empty())
        throw DegeneratePair("every rank-deficiency polynomial of M_V vanishes identically");
    return out;
}

std::optional<ExactSubspace> degenerate_direction_subspace(const QuadraticPair& pair, const Vec3Q& witness)
{
    // dim 1: x4 A1 + x5 A2 = 0.
    QMatrix lin(6, 2);
    for (int i = 0, row = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j, ++row) {
            lin(row, 0) = pair.A1(i, j);
            lin(row, 1) = pair.A2(i, j);
        }
    if (auto ns = nullspace(lin); !ns.empty())
        return ExactSubspace{{Vec5Q{0, 0, 0, ns[0][0], ns[0][1]}}};

    // dim 2: (I - n n^T / |n|^2)(x4 A1 + x5 A2) = 0.
    const Rational nn = witness[0] * witness[0] + witness[1] * witness[1] + witness[2] * witness[2];
    if (sgn(nn) == 0)
        return std::nullopt;
    QMatrix P(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            P(i, j) = (i == j ? Rational(1) : Rational(0)) - witness[i] * witness[j] / nn;
    const QMatrix PA1 = P * to_qmatrix(pair.A1.dense()), PA2 = P * to_qmatrix(pair.A2.dense());
    QMatrix sys(9, 2);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            sys(3 * i + j, 0) = PA1(i, j);
            sys(3 * i + j, 1) = PA2(i, j);
        }
    const auto ns = nullspace(sys);
    if (ns.empty())
        return std::nullopt;
    return ExactSubspace{{Vec5Q{witness[0], witness[1], witness[2], 0, 0}, Vec5Q{0, 0, 0, ns[0][0], ns[0][1]}}};
}

// ---------------------------------------------------------------------------
// Quadric clusters

namespace {

std::array<double, 10> monomials(const std::array<double, 3>& p)
{
    const double r = p[0], s = p[1], t = p[2];
    return {1.0, r, s, t, r * r, s * s, t * t, r * s, r * t, s * t};
}

double eval_quadric(const std::array<double, 10>& P, const std::array<double, 3>& p)
{
    const auto m = monomials(p);
    double v = 0;
    for (int k = 0; k < 10; ++k)
        v += P[k] * m[k];
    return v;
}

std::array<double, 10> normalized(std::array<double, 10> P)
{
    double n = 0;
    for (double x : P)
        n += x * x;
    n = std::sqrt(n);
    if (n > 0)
        for (double& x : P)
            x /= n;
    // Sign convention: first nonzero coefficient positive.
    for (double x : P)
        if (x != 0) {
            if (x < 0)
                for (double& y : P)
                    y = -y;
            break;
        }
    return P;
}

std::size_t band_count(const std::array<double, 10>& P, const CubeCollection& cubes, double margin)
{
    const double width = margin * lipschitz_bound(P);
    std::size_t n = 0;
    for (std::size_t i = 0; i < cubes.size(); ++i)
        if (std::abs(eval_quadric(P, cubes.center(i))) <= width)
            ++n;
    return n;
}

// Exact kernel of the moment matrix of the given centers, if any.
std::optional<std::array<double, 10>> exact_quadric(const CubeCollection& cubes, const std::vector<std::size_t>& idx)
{
    const long K2 = 2 * cubes.scale;
    QMatrix A(idx.size(), 10);
    for (std::size_t row = 0; row < idx.size(); ++row) {
        const auto& c = cubes.corners[idx[row]];
        const Rational r(2 * c[0] + 1, K2), s(2 * c[1] + 1, K2), t(2 * c[2] + 1, K2);
        const std::array<Rational, 10> m{Rational(1), r, s, t, r * r, s * s, t * t, r * s, r * t, s * t};
        for (int k = 0; k < 10; ++k) {
            A(row, k) = m[k];
            A(row, k).canonicalize();
        }
    }
    const auto ns = nullspace(A);
    if (ns.empty())
        return std::nullopt;
    std::array<double, 10> P{};
    for (int k = 0; k < 10; ++k)
        P[k] = ns[0][k].get_d();
    return normalized(P);
}

} // namespace

double lipschitz_bound(const std::array<double, 10>& P)
{
    // |dP/dr| <= |P_r| + 2|P_rr| + |P_rs| + |P_rt| on [0,1]^3, and so on.
    const double gr = std::abs(P[1]) + 2 * std::abs(P[4]) + std::abs(P[7]) + std::abs(P[8]);
    const double gs = std::abs(P[2]) + 2 * std::abs(P[5]) + std::abs(P[7]) + std::abs(P[9]);
    const double gt = std::abs(P[3]) + 2 * std::abs(P[6]) + std::abs(P[8]) + std::abs(P[9]);
    return std::sqrt(gr * gr + gs * gs + gt * gt);
}

ClusterReport quadric_cluster_detect(const CubeCollection& cubes, const ClusterOptions& opt)
{
    ClusterReport rep;
    rep.m = cubes.size();
    rep.margin = opt.margin > 0 ? opt.margin : 10.0 / static_cast<double>(cubes.scale);
    rep.threshold = opt.threshold_fraction * static_cast<double>(rep.m);
    if (rep.m == 0)
        return rep;

    auto consider = [&](const std::array<double, 10>& P, const std::string& method) {
        const std::size_t n = band_count(P, cubes, rep.margin);
        if (n > rep.count || rep.method.empty()) {
            rep.count = n;
            rep.P = P;
            rep.method = method;
        }
    };

    // (i) exact containment: the whole set, then each coordinate layer.
    std::vector<std::size_t> all(rep.m);
    std::iota(all.begin(), all.end(), 0);
    if (auto P = exact_quadric(cubes, all))
        consider(*P, "exact-moment-rank");
    for (int axis = 0; axis < 3 && static_cast<double>(rep.count) <= rep.threshold; ++axis) {
        std::vector<std::vector<std::size_t>> layers(cubes.scale);
        for (std::size_t i = 0; i < rep.m; ++i)
            layers[cubes.corners[i][axis]].push_back(i);
        for (const auto& layer : layers) {
            if (static_cast<double>(layer.size()) <= rep.threshold || layer.size() <= rep.count)
                continue;
            if (auto P = exact_quadric(cubes, layer))
                consider(*P, "exact-moment-rank-layer");
        }
    }

    // (ii) RANSAC over 9-point samples.
    if (static_cast<double>(rep.count) <= rep.threshold && rep.m > 9) {
        const std::size_t iters = opt.ransac_iterations;
        std::vector<std::size_t> counts(iters);
        std::vector<std::array<double, 10>> fits(iters);
#pragma omp parallel for schedule(static)
        for (long it = 0; it < static_cast<long>(iters); ++it) {
            Stream rng(opt.seed, 3, static_cast<std::uint64_t>(it));
            std::array<std::size_t, 9> pick{};
            for (int k = 0; k < 9; ++k) {
                bool fresh = false;
                while (!fresh) {
                    pick[k] = rng.below(rep.m);
                    fresh = std::find(pick.begin(), pick.begin() + k, pick[k]) == pick.begin() + k;
                }
            }
            Eigen::Matrix<double, 9, 10> A;
            for (int k = 0; k < 9; ++k) {
                const auto m = monomials(cubes.center(pick[k]));
                for (int c = 0; c < 10; ++c)
                    A(k, c) = m[c];
            }
            Eigen::JacobiSVD<Eigen::Matrix<double, 9, 10>> svd(A, Eigen::ComputeFullV);
            std::array<double, 10> P{};
            for (int c = 0; c < 10; ++c)
                P[c] = svd.matrixV()(c, 9);
            fits[it] = normalized(P);
            counts[it] = band_count(fits[it], cubes, rep.margin);
        }
        std::size_t best = 0;
        for (std::size_t it = 1; it < iters; ++it)
            if (counts[it] > counts[best])
                best = it;
        if (iters > 0 && counts[best] > rep.count) {
            rep.count = counts[best];
            rep.P = fits[best];
            rep.method = "ransac";
        }
    }
    if (rep.m <= 9 && rep.method.empty())
        rep.method = "exact-moment-rank";
    rep.found = static_cast<double>(rep.count) > rep.threshold;
    return rep;
}

nlohmann::json to_json(const ClusterReport& r)
{
    return {{"status", r.found ? "FOUND" : "NOT_FOUND"},
            {"P", r.P},
            {"monomials", {"1", "r", "s", "t", "r^2", "s^2", "t^2", "rs", "rt", "st"}},
            {"count", r.count},
            {"m", r.m},
            {"threshold", r.threshold},
            {"margin", r.margin},
            {"method", r.method},
            {"certificate", r.found ? "exhibited polynomial" : "heuristic only"}};
}

} // namespace qlab
