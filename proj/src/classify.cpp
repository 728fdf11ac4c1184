#include "qlab/classify.hpp"

#include "qlab/errors.hpp"
#include "qlab/exact_linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace qlab {

std::string to_string(Verdict v)
{
    return v == Verdict::Nondegenerate ? "NONDEGENERATE" : "DEGENERATE";
}

std::string to_string(MinorType t)
{
    switch (t) {
    case MinorType::ZeroRow: return "ZERO_ROW";
    case MinorType::Split1_23: return "SPLIT_1_23";
    case MinorType::Split2_13: return "SPLIT_2_13";
    case MinorType::Split3_12: return "SPLIT_3_12";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Nondegeneracy

std::array<HomQuad3, 3> gradient_minors(const QuadraticPair& pair)
{
    const Mat3Q g1 = gradient_forms(pair.A1);
    const Mat3Q g2 = gradient_forms(pair.A2);
    auto minor = [&](int a, int b) {
        return HomQuad3::product(g1[a], g2[b]) - HomQuad3::product(g1[b], g2[a]);
    };
    return {minor(1, 2), minor(0, 2), minor(0, 1)};
}

HomQuad3 witness_combination(const std::array<HomQuad3, 3>& minors, const Vec3Q& uvw)
{
    return uvw[0] * minors[0] - uvw[1] * minors[1] + uvw[2] * minors[2];
}

NondegeneracyVerdict nondegeneracy_check(const QuadraticPair& pair)
{
    NondegeneracyVerdict out;
    out.minor_polys = gradient_minors(pair);
    QMatrix coeff(3, 6);
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 6; ++k)
            coeff(i, k) = out.minor_polys[i].coeff[k];
    out.coefficient_rank = rank(coeff);
    if (out.coefficient_rank == 3)
        return out;

    out.verdict = Verdict::Degenerate;
    auto kernel = left_nullspace(coeff);
    const auto& c = kernel.front();
    Vec3Q w{c[0], -c[1], c[2]};
    Rational lead = 0;
    for (const auto& x : w)
        if (sgn(x) != 0) {
            lead = x;
            break;
        }
    for (auto& x : w)
        x /= lead;
    out.witness = w;
    return out;
}

bool invariance_check(const QuadraticPair& pair, const Mat3Q& B)
{
    Mat2Q id{{{Rational(1), Rational(0)}, {Rational(0), Rational(1)}}};
    const QuadraticPair moved = change_of_variables(pair, B, id);
    return nondegeneracy_check(pair).verdict == nondegeneracy_check(moved).verdict;
}

// ---------------------------------------------------------------------------
// Simultaneous diagonalization

namespace {

using Poly = std::vector<Rational>; // ascending powers

void trim(Poly& p)
{
    while (!p.empty() && sgn(p.back()) == 0)
        p.pop_back();
}

int degree(const Poly& p)
{
    return static_cast<int>(p.size()) - 1;
}

Rational eval(const Poly& p, const Rational& x)
{
    Rational acc = 0;
    for (auto it = p.rbegin(); it != p.rend(); ++it)
        acc = acc * x + *it;
    return acc;
}

std::pair<Poly, Poly> divmod(Poly a, const Poly& b)
{
    const int db = degree(b);
    if (degree(a) < db)
        return {Poly{}, a};
    Poly q(a.size() - b.size() + 1);
    for (int k = degree(a) - db; k >= 0; --k) {
        const Rational f = a[k + db] / b.back();
        q[k] = f;
        for (int i = 0; i <= db; ++i)
            a[k + i] -= f * b[i];
    }
    trim(a);
    trim(q);
    return {q, a};
}

Poly monic(Poly p)
{
    const Rational lead = p.back();
    for (auto& c : p)
        c /= lead;
    return p;
}

Poly gcd(Poly a, Poly b)
{
    trim(a);
    trim(b);
    while (!b.empty()) {
        Poly r = divmod(a, b).second;
        a = std::move(b);
        b = std::move(r);
    }
    return monic(a);
}

Poly derivative(const Poly& p)
{
    Poly d;
    for (std::size_t i = 1; i < p.size(); ++i)
        d.push_back(p[i] * static_cast<long>(i));
    trim(d);
    return d;
}

// p / (x - r), assuming r is a root.
Poly deflate(const Poly& p, const Rational& r)
{
    return divmod(p, Poly{-r, Rational(1)}).first;
}

bool exact_sqrt(const Rational& x, Rational& root)
{
    if (sgn(x) < 0)
        return false;
    mpz_class n = x.get_num(), d = x.get_den();
    if (!mpz_perfect_square_p(n.get_mpz_t()) || !mpz_perfect_square_p(d.get_mpz_t()))
        return false;
    mpz_class rn, rd;
    mpz_sqrt(rn.get_mpz_t(), n.get_mpz_t());
    mpz_sqrt(rd.get_mpz_t(), d.get_mpz_t());
    root = Rational(rn, rd);
    root.canonicalize();
    return true;
}

// Continued-fraction reconstruction of a rational close to x.
std::optional<Rational> reconstruct(double x)
{
    if (!std::isfinite(x))
        return std::nullopt;
    const double tol = 1e-9 * std::max(1.0, std::abs(x));
    mpz_class h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    double y = x;
    for (int it = 0; it < 40; ++it) {
        const double a = std::floor(y);
        if (std::abs(a) > 1e15)
            break;
        const mpz_class ai(static_cast<long>(a));
        const mpz_class h2 = ai * h1 + h0, k2 = ai * k1 + k0;
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        if (k1 > 1000000)
            break;
        Rational cand(h1, k1);
        cand.canonicalize();
        if (std::abs(cand.get_d() - x) <= tol)
            return cand;
        const double frac = y - a;
        if (frac < 1e-15)
            break;
        y = 1.0 / frac;
    }
    return std::nullopt;
}

Eigen::MatrixXd to_eigen(const QMatrix& m)
{
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            e(i, j) = m(i, j).get_d();
    return e;
}

Eigen::Matrix3d to_eigen(const Mat3Q& m)
{
    return to_eigen(to_qmatrix(m));
}

// T with T^T G T diagonal, by symmetric Gaussian elimination.
QMatrix congruence_diagonalize(const QMatrix& G0)
{
    const std::size_t k = G0.rows();
    QMatrix T = QMatrix::identity(k);
    auto current = [&] { return T.transpose() * G0 * T; };
    for (std::size_t i = 0; i < k; ++i) {
        QMatrix G = current();
        if (sgn(G(i, i)) == 0) {
            bool fixed = false;
            for (std::size_t j = i + 1; j < k && !fixed; ++j)
                if (sgn(G(j, j)) != 0) {
                    for (std::size_t r = 0; r < k; ++r)
                        std::swap(T(r, i), T(r, j));
                    fixed = true;
                }
            for (std::size_t j = i + 1; j < k && !fixed; ++j)
                if (sgn(G(i, j)) != 0) {
                    for (std::size_t r = 0; r < k; ++r)
                        T(r, i) += T(r, j);
                    fixed = true;
                }
            if (!fixed)
                continue;
            G = current();
        }
        for (std::size_t j = i + 1; j < k; ++j) {
            const Rational f = G(i, j) / G(i, i);
            for (std::size_t r = 0; r < k; ++r)
                T(r, j) -= f * T(r, i);
        }
    }
    return T;
}

// Characteristic polynomial det(x I - A), Faddeev-LeVerrier.
Poly charpoly(const QMatrix& A)
{
    const std::size_t n = A.rows();
    Poly c(n + 1);
    c[n] = 1;
    QMatrix Mk(n, n);
    for (std::size_t k = 1; k <= n; ++k) {
        Mk = A * Mk;
        for (std::size_t i = 0; i < n; ++i)
            Mk(i, i) += c[n - k + 1];
        const QMatrix AM = A * Mk;
        Rational tr = 0;
        for (std::size_t i = 0; i < n; ++i)
            tr += AM(i, i);
        c[n - k] = -tr / static_cast<long>(k);
    }
    return c;
}

struct PencilPick {
    QMatrix P, S;
    std::string route;
};

std::optional<PencilPick> choose_pencil(const QMatrix& a1, const QMatrix& a2)
{
    if (sgn(determinant(a1)) != 0)
        return PencilPick{a1, a2, "A1"};
    if (sgn(determinant(a2)) != 0)
        return PencilPick{a2, a1, "A2"};
    for (int tau = 1; tau <= kPencilTrials; ++tau) {
        const QMatrix m = a1 + Rational(tau) * a2;
        if (sgn(determinant(m)) != 0)
            return PencilPick{m, a2, "A1+" + std::to_string(tau) + "*A2"};
    }
    return std::nullopt;
}

struct PencilDiag {
    std::string reason; // empty on success
    std::string route;
    bool exact = false;
    QMatrix M;
    Eigen::MatrixXd Md;
};

PencilDiag exact_vectors(const PencilPick& pen, const std::vector<Rational>& roots)
{
    const std::size_t n = pen.P.rows();
    PencilDiag out;
    out.route = pen.route;
    std::vector<std::vector<Rational>> cols;
    for (const auto& lam : roots) {
        const auto ns = nullspace(pen.S - lam * pen.P);
        QMatrix V(n, ns.size());
        for (std::size_t c = 0; c < ns.size(); ++c)
            for (std::size_t r = 0; r < n; ++r)
                V(r, c) = ns[c][r];
        if (ns.size() > 1)
            V = V * congruence_diagonalize(V.transpose() * pen.P * V);
        for (std::size_t c = 0; c < V.cols(); ++c) {
            std::vector<Rational> col(n);
            for (std::size_t r = 0; r < n; ++r)
                col[r] = V(r, c);
            cols.push_back(col);
        }
    }
    if (cols.size() != n) {
        out.reason = "defective-eigenspace";
        return out;
    }
    out.M = QMatrix(n, n);
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t r = 0; r < n; ++r)
            out.M(r, c) = cols[c][r];
    if (sgn(determinant(out.M)) == 0) {
        out.reason = "defective-eigenspace";
        return out;
    }
    out.exact = true;
    out.Md = to_eigen(out.M);
    return out;
}

PencilDiag float_vectors(const PencilPick& pen)
{
    const Eigen::MatrixXd P = to_eigen(pen.P), S = to_eigen(pen.S);
    const Eigen::Index n = P.rows();
    const Eigen::MatrixXd C = P.inverse() * S;
    Eigen::EigenSolver<Eigen::MatrixXd> es(C, false);
    PencilDiag out;
    out.route = pen.route;
    out.Md.resize(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        const double lam = es.eigenvalues()(c).real();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(S - lam * P, Eigen::ComputeFullV);
        Eigen::VectorXd v = svd.matrixV().col(n - 1);
        // One inverse-iteration step against the pencil sharpens v.
        const Eigen::MatrixXd shifted = S - (lam + 1e-9 * (1.0 + std::abs(lam))) * P;
        Eigen::VectorXd w = shifted.fullPivLu().solve(P * v);
        if (w.allFinite() && w.norm() > 0)
            v = w;
        out.Md.col(c) = v.normalized();
    }
    return out;
}

PencilDiag diagonalize_pencil(const QMatrix& A1, const QMatrix& A2)
{
    PencilDiag out;
    const auto pen = choose_pencil(A1, A2);
    if (!pen) {
        out.reason = "pencil-degenerate";
        return out;
    }
    const QMatrix C = inverse(pen->P) * pen->S;
    const Poly p = charpoly(C);
    const Poly sqf = monic(divmod(p, gcd(p, derivative(p))).first);

    std::vector<Rational> roots;
    Poly rest = sqf;
    if (degree(sqf) == 3) {
        const Rational b = sqf[2], c = sqf[1], d = sqf[0];
        const Rational disc = 18 * b * c * d - 4 * b * b * b * d + b * b * c * c - 4 * c * c * c - 27 * d * d;
        if (sgn(disc) < 0) {
            out.reason = "complex-spectrum";
            return out;
        }
        Eigen::EigenSolver<Eigen::MatrixXd> es(to_eigen(C), false);
        for (Eigen::Index i = 0; i < es.eigenvalues().size() && degree(rest) == 3; ++i)
            if (auto q = reconstruct(es.eigenvalues()(i).real()); q && sgn(eval(sqf, *q)) == 0) {
                roots.push_back(*q);
                rest = deflate(sqf, *q);
            }
        if (degree(rest) == 3)
            return float_vectors(*pen);
    }
    if (degree(rest) == 2) {
        const Poly m = monic(rest);
        const Rational disc = m[1] * m[1] - 4 * m[0];
        if (sgn(disc) < 0) {
            out.reason = "complex-spectrum";
            return out;
        }
        Rational sq;
        if (!exact_sqrt(disc, sq))
            return float_vectors(*pen);
        roots.push_back((-m[1] + sq) / 2);
        roots.push_back((-m[1] - sq) / 2);
    } else if (degree(rest) == 1) {
        roots.push_back(-rest[0] / rest[1]);
    }
    return exact_vectors(*pen, roots);
}

// Sorts columns: row 1 descending, ties by row 2 descending.
template <class Key>
std::array<int, 3> column_order(const Key& key)
{
    std::array<int, 3> idx{0, 1, 2};
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        const auto ka = key(a), kb = key(b);
        if (ka.first != kb.first)
            return ka.first > kb.first;
        return ka.second > kb.second;
    });
    return idx;
}

} // namespace

SimDiagResult simultaneous_diagonalize(const QuadraticPair& pair)
{
    const QMatrix A1 = to_qmatrix(pair.A1.dense()), A2 = to_qmatrix(pair.A2.dense());

    // Split off the common kernel: the pencil is then diagonalized on a
    // complement and the kernel vectors are appended as zero columns.
    QMatrix stacked(6, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            stacked(i, j) = A1(i, j);
            stacked(i + 3, j) = A2(i, j);
        }
    const auto kernel = nullspace(stacked);
    QMatrix K(3, kernel.size());
    for (std::size_t c = 0; c < kernel.size(); ++c)
        for (std::size_t r = 0; r < 3; ++r)
            K(r, c) = kernel[c][r];
    QMatrix W = QMatrix::identity(3);
    if (!kernel.empty()) {
        const auto comp = nullspace(K.transpose());
        W = QMatrix(3, comp.size());
        for (std::size_t c = 0; c < comp.size(); ++c)
            for (std::size_t r = 0; r < 3; ++r)
                W(r, c) = comp[c][r];
    }
    const std::size_t m = W.cols();
    PencilDiag pd = diagonalize_pencil(W.transpose() * A1 * W, W.transpose() * A2 * W);
    if (!pd.reason.empty())
        return {std::nullopt, pd.reason};

    SimDiag out;
    out.route = (kernel.empty() ? "" : "kernel(" + std::to_string(kernel.size()) + ")+") + pd.route;
    const std::array<const QMatrix*, 2> forms{&A1, &A2};

    if (pd.exact) {
        QMatrix M(3, 3);
        const QMatrix WM = W * pd.M;
        for (std::size_t r = 0; r < 3; ++r) {
            for (std::size_t c = 0; c < m; ++c)
                M(r, c) = WM(r, c);
            for (std::size_t c = 0; c < kernel.size(); ++c)
                M(r, m + c) = K(r, c);
        }
        LambdaQ lam;
        for (int f = 0; f < 2; ++f) {
            const QMatrix D = M.transpose() * *forms[f] * M;
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 3; ++j)
                    if (i != j && sgn(D(i, j)) != 0)
                        throw Error("internal: exact congruence left an off-diagonal entry");
            for (int j = 0; j < 3; ++j)
                lam[f][j] = D(j, j);
        }
        const auto order = column_order([&](int c) { return std::make_pair(lam[0][c], lam[1][c]); });
        Mat3Q Ms;
        LambdaQ Ls;
        for (int c = 0; c < 3; ++c) {
            for (int r = 0; r < 3; ++r)
                Ms[r][c] = M(r, order[c]);
            for (int f = 0; f < 2; ++f)
                Ls[f][c] = lam[f][order[c]];
        }
        out.exact = true;
        out.M_exact = Ms;
        out.lambda_exact = Ls;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                out.M(i, j) = Ms[i][j].get_d();
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 3; ++j)
                out.lambda(i, j) = Ls[i][j].get_d();
        return {out, ""};
    }

    Eigen::Matrix3d M;
    const Eigen::MatrixXd WM = to_eigen(W) * pd.Md;
    for (int c = 0; c < static_cast<int>(m); ++c)
        M.col(c) = WM.col(c);
    for (std::size_t c = 0; c < kernel.size(); ++c)
        M.col(static_cast<int>(m + c)) = to_eigen(K).col(static_cast<int>(c)).normalized();
    const Eigen::Matrix3d D1 = M.transpose() * to_eigen(A1) * M, D2 = M.transpose() * to_eigen(A2) * M;
    const double scale = std::max(D1.cwiseAbs().maxCoeff(), D2.cwiseAbs().maxCoeff());
    double off = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j)
                off = std::max({off, std::abs(D1(i, j)), std::abs(D2(i, j))});
    const double residual = scale > 0 ? off / scale : 0.0;
    if (!(residual <= 1e-10))
        return {std::nullopt, "residual-gate"};
    LambdaD lam;
    for (int j = 0; j < 3; ++j) {
        lam(0, j) = D1(j, j);
        lam(1, j) = D2(j, j);
    }
    const auto order = column_order([&](int c) { return std::make_pair(lam(0, c), lam(1, c)); });
    out.residual = residual;
    for (int c = 0; c < 3; ++c) {
        out.M.col(c) = M.col(order[c]);
        out.lambda.col(c) = lam.col(order[c]);
    }
    return {out, ""};
}

// ---------------------------------------------------------------------------
// Minor taxonomy

namespace {

template <class T>
struct ZeroTest;

template <>
struct ZeroTest<Rational> {
    bool operator()(const Rational& x, double = 1.0) const { return sgn(x) == 0; }
    int sign(const Rational& x) const { return sgn(x); }
};

template <>
struct ZeroTest<double> {
    double tol;
    bool operator()(double x, double scale = 1.0) const { return std::abs(x) <= tol * std::max(1.0, scale); }
    int sign(double x) const { return (*this)(x) ? 0 : (x > 0 ? 1 : -1); }
};

template <class T>
using Rows = std::array<std::array<T, 3>, 2>;

double to_d(double x) { return x; }
double to_d(const Rational& x) { return x.get_d(); }

template <class T>
Taxonomy<T> taxonomy_impl(const Rows<T>& L, const ZeroTest<T>& zero)
{
    auto norm = [&](int c) { return std::hypot(to_d(L[0][c]), to_d(L[1][c])); };
    auto minor = [&](int i, int j) { return T(L[0][i] * L[1][j] - L[0][j] * L[1][i]); };
    Taxonomy<T> out;
    const std::array<std::pair<int, int>, 3> pairs{{{0, 1}, {0, 2}, {1, 2}}};
    std::array<bool, 3> vanish{};
    for (int k = 0; k < 3; ++k) {
        out.minors[k] = minor(pairs[k].first, pairs[k].second);
        vanish[k] = zero(out.minors[k], norm(pairs[k].first) * norm(pairs[k].second));
    }
    out.all_minors_nonzero = !vanish[0] && !vanish[1] && !vanish[2];
    if (out.all_minors_nonzero)
        return out;

    double scale = 0;
    for (int c = 0; c < 3; ++c)
        scale = std::max(scale, norm(c));
    auto col_zero = [&](int c) { return zero(L[0][c], scale) && zero(L[1][c], scale); };
    auto perp = [](const std::array<T, 2>& y) { return std::array<T, 2>{T(-y[1]), y[0]}; };
    auto nonzero_vec = [&](const std::array<T, 2>& y) { return !zero(y[0], scale) || !zero(y[1], scale); };

    auto finish = [&](MinorType type, std::array<T, 2> y1, std::array<T, 2> y2) {
        const T dt = y1[0] * y2[1] - y1[1] * y2[0];
        if (zero(dt, 1.0))
            return;
        TypeMatch<T> m;
        m.type = type;
        m.beta = {y1, y2};
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 3; ++c) {
                m.reduced[r][c] = m.beta[r][0] * L[0][c] + m.beta[r][1] * L[1][c];
                m.pattern[r][c] = zero.sign(m.reduced[r][c]);
            }
        if constexpr (std::is_same_v<T, double>) {
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 3; ++c)
                    if (m.pattern[r][c] == 0)
                        m.reduced[r][c] = 0.0;
        }
        out.matches.push_back(m);
    };

    // Zero row: rank <= 1.
    if (vanish[0] && vanish[1] && vanish[2]) {
        std::array<T, 2> y{T(1), T(0)};
        for (int c = 0; c < 3; ++c)
            if (!col_zero(c)) {
                y = {L[1][c], T(-L[0][c])};
                break;
            }
        finish(MinorType::ZeroRow, y, perp(y));
    }

    // Split isolating column k: row 1 of beta*Lambda kills the other two
    // columns, row 2 kills column k.
    const std::array<std::pair<MinorType, int>, 3> splits{
        {{MinorType::Split1_23, 0}, {MinorType::Split2_13, 1}, {MinorType::Split3_12, 2}}};
    for (const auto& [type, k] : splits) {
        const int i = k == 0 ? 1 : 0;
        const int j = k == 2 ? 1 : 2;
        const int mi = (i == 0 && j == 1) ? 0 : (i == 0 && j == 2 ? 1 : 2);
        if (!vanish[mi])
            continue;
        std::array<T, 2> y2{L[1][k], T(-L[0][k])};
        std::array<T, 2> y1;
        if (!col_zero(i))
            y1 = {L[1][i], T(-L[0][i])};
        else if (!col_zero(j))
            y1 = {L[1][j], T(-L[0][j])};
        else
            y1 = nonzero_vec(y2) ? perp(y2) : std::array<T, 2>{T(1), T(0)};
        if (!nonzero_vec(y2))
            y2 = perp(y1);
        finish(type, y1, y2);
    }
    return out;
}

} // namespace

Taxonomy<Rational> minor_taxonomy(const LambdaQ& lambda)
{
    return taxonomy_impl<Rational>(lambda, ZeroTest<Rational>{});
}

Taxonomy<double> minor_taxonomy(const LambdaD& lambda, double tol)
{
    Rows<double> L;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c)
            L[r][c] = lambda(r, c);
    return taxonomy_impl<double>(L, ZeroTest<double>{tol});
}

// ---------------------------------------------------------------------------
// Normal form

QuadraticPair normal_form_pair(const Rational& A, const Rational& B)
{
    const Rational h(1, 2);
    return QuadraticPair(SymMatrix3::diagonal(h, A / 2, 0), SymMatrix3::diagonal(0, B / 2, h));
}

namespace {

constexpr std::array<std::array<int, 3>, 6> kRoles{
    {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};

// Role permutation (jr, js, jt) maximizing sum |M(:, role)_jj|.
template <class Get>
std::array<int, 3> best_roles(const Get& entry)
{
    double best = -1;
    std::array<int, 3> pick = kRoles[0];
    for (const auto& roles : kRoles) {
        double s = 0;
        for (int j = 0; j < 3; ++j)
            s += std::abs(entry(j, roles[j]));
        if (s > best + 1e-12) {
            best = s;
            pick = roles;
        }
    }
    return pick;
}

} // namespace

NormalForm normal_form(const QuadraticPair& pair)
{
    const auto sd = simultaneous_diagonalize(pair);
    if (!sd.value)
        throw NotReducible("no simultaneous diagonalization (" + sd.reason + ")");
    const SimDiag& d = *sd.value;
    NormalForm out;

    if (d.exact) {
        const auto tax = minor_taxonomy(*d.lambda_exact);
        if (!tax.all_minors_nonzero)
            throw NotReducible("Lambda has a vanishing 2x2 minor");
        const Mat3Q& M = *d.M_exact;
        const LambdaQ& L = *d.lambda_exact;
        const auto roles = best_roles([&](int r, int c) { return M[r][c].get_d(); });
        const int jr = roles[0], js = roles[1], jt = roles[2];
        std::array<Rational, 2> y1{L[1][jt], -L[0][jt]};
        std::array<Rational, 2> y2{L[1][jr], -L[0][jr]};
        const Rational s1 = Rational(1, 2) / (y1[0] * L[0][jr] + y1[1] * L[1][jr]);
        const Rational s2 = Rational(1, 2) / (y2[0] * L[0][jt] + y2[1] * L[1][jt]);
        Mat2Q beta{{{y1[0] * s1, y1[1] * s1}, {y2[0] * s2, y2[1] * s2}}};
        const Rational A = 2 * (beta[0][0] * L[0][js] + beta[0][1] * L[1][js]);
        const Rational B = 2 * (beta[1][0] * L[0][js] + beta[1][1] * L[1][js]);
        Mat3Q Mp;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                Mp[r][c] = M[r][roles[c]];
        if (!(change_of_variables(pair, Mp, beta) == normal_form_pair(A, B)))
            throw Error("internal: normal form round-trip mismatch");
        out.exact = true;
        out.A_exact = A;
        out.B_exact = B;
        out.M_exact = Mp;
        out.beta_exact = beta;
        out.A = A.get_d();
        out.B = B.get_d();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                out.M(r, c) = Mp[r][c].get_d();
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c)
                out.beta(r, c) = beta[r][c].get_d();
        return out;
    }

    const auto tax = minor_taxonomy(d.lambda);
    if (!tax.all_minors_nonzero)
        throw NotReducible("Lambda has a vanishing 2x2 minor");
    const auto& L = d.lambda;
    const auto roles = best_roles([&](int r, int c) { return d.M(r, c); });
    const int jr = roles[0], js = roles[1], jt = roles[2];
    Eigen::Vector2d y1(L(1, jt), -L(0, jt)), y2(L(1, jr), -L(0, jr));
    y1 *= 0.5 / y1.dot(L.col(jr));
    y2 *= 0.5 / y2.dot(L.col(jt));
    out.beta.row(0) = y1.transpose();
    out.beta.row(1) = y2.transpose();
    out.A = 2 * y1.dot(L.col(js));
    out.B = 2 * y2.dot(L.col(js));
    for (int c = 0; c < 3; ++c)
        out.M.col(c) = d.M.col(roles[c]);

    const Eigen::Matrix3d A1 = to_eigen(pair.A1.dense()), A2 = to_eigen(pair.A2.dense());
    Eigen::Matrix3d T1 = Eigen::Matrix3d::Zero(), T2 = Eigen::Matrix3d::Zero();
    T1(0, 0) = 0.5;
    T1(1, 1) = out.A / 2;
    T2(1, 1) = out.B / 2;
    T2(2, 2) = 0.5;
    const Eigen::Matrix3d B1 = out.M.transpose() * (out.beta(0, 0) * A1 + out.beta(0, 1) * A2) * out.M;
    const Eigen::Matrix3d B2 = out.M.transpose() * (out.beta(1, 0) * A1 + out.beta(1, 1) * A2) * out.M;
    out.reconstruction_error = std::max((B1 - T1).cwiseAbs().maxCoeff(), (B2 - T2).cwiseAbs().maxCoeff());
    return out;
}

// ---------------------------------------------------------------------------
// eta

double eta_objective(const QuadraticPair& pair, double beta, double gamma)
{
    double best = 0;
    for (int i = 0; i < 2; ++i) {
        const FormCoefficients f = pair.form(i).form();
        const double A = f.A.get_d(), B = f.B.get_d(), C = f.C.get_d();
        const double D = f.D.get_d(), E = f.E.get_d(), F = f.F.get_d();
        const double a = A + C * beta * beta + E * beta;
        const double b = B + C * gamma * gamma + F * gamma;
        const double c = 2 * beta * gamma * C + D + E * gamma + F * beta;
        best = std::max({best, std::abs(a), std::abs(b), std::abs(c)});
    }
    return best;
}

namespace {

// Nelder-Mead in two dimensions, clamped to a box.
std::pair<std::array<double, 2>, double> nelder_mead(const std::function<double(double, double)>& f,
                                                     std::array<double, 2> x0, double step,
                                                     std::array<double, 2> lo, std::array<double, 2> hi)
{
    using P = std::array<double, 2>;
    auto clamp = [&](P p) {
        for (int k = 0; k < 2; ++k)
            p[k] = std::clamp(p[k], lo[k], hi[k]);
        return p;
    };
    auto val = [&](const P& p) { return f(p[0], p[1]); };
    std::array<P, 3> s{x0, clamp({x0[0] + step, x0[1]}), clamp({x0[0], x0[1] + step})};
    std::array<double, 3> v{val(s[0]), val(s[1]), val(s[2])};
    for (int it = 0; it < 200; ++it) {
        std::array<int, 3> o{0, 1, 2};
        std::sort(o.begin(), o.end(), [&](int a, int b) { return v[a] < v[b]; });
        const P best = s[o[0]], mid = s[o[1]], worst = s[o[2]];
        if (std::abs(v[o[2]] - v[o[0]]) < 1e-15 && std::hypot(worst[0] - best[0], worst[1] - best[1]) < 1e-12)
            break;
        const P cen{(best[0] + mid[0]) / 2, (best[1] + mid[1]) / 2};
        auto along = [&](double t) { return clamp({cen[0] + t * (worst[0] - cen[0]), cen[1] + t * (worst[1] - cen[1])}); };
        const P xr = along(-1.0);
        const double fr = val(xr);
        if (fr < v[o[0]]) {
            const P xe = along(-2.0);
            const double fe = val(xe);
            if (fe < fr) {
                s[o[2]] = xe;
                v[o[2]] = fe;
            } else {
                s[o[2]] = xr;
                v[o[2]] = fr;
            }
        } else if (fr < v[o[1]]) {
            s[o[2]] = xr;
            v[o[2]] = fr;
        } else {
            const P xc = along(0.5);
            const double fc = val(xc);
            if (fc < v[o[2]]) {
                s[o[2]] = xc;
                v[o[2]] = fc;
            } else {
                for (int k : {o[1], o[2]}) {
                    s[k] = clamp({(s[k][0] + best[0]) / 2, (s[k][1] + best[1]) / 2});
                    v[k] = val(s[k]);
                }
            }
        }
    }
    int b = 0;
    for (int k = 1; k < 3; ++k)
        if (v[k] < v[b])
            b = k;
    return {s[b], v[b]};
}

} // namespace

EtaEstimate eta_estimate(const QuadraticPair& pair, double box, double step, bool refine)
{
    EtaEstimate out;
    out.search_box = box;
    out.grid_step = step;
    // Grid = integer multiples of step inside [-box, box], so grids nest
    // when box grows or step halves.
    const long kmax = static_cast<long>(std::floor(box / step + 1e-9));
    const long n = 2 * kmax + 1;
    out.grid_points = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);

    std::vector<double> row_min(n, std::numeric_limits<double>::infinity());
    std::vector<long> row_arg(n, 0);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) {
        const double beta = static_cast<double>(i - kmax) * step;
        for (long j = 0; j < n; ++j) {
            const double gamma = static_cast<double>(j - kmax) * step;
            const double v = eta_objective(pair, beta, gamma);
            if (v < row_min[i]) {
                row_min[i] = v;
                row_arg[i] = j;
            }
        }
    }
    long bi = 0;
    for (long i = 1; i < n; ++i)
        if (row_min[i] < row_min[bi])
            bi = i;
    const double gb = static_cast<double>(bi - kmax) * step;
    const double gg = static_cast<double>(row_arg[bi] - kmax) * step;
    out.grid_value = row_min[bi];
    out.value = out.grid_value;
    out.argmin = {0.0, gb, gg};

    if (refine) {
        const std::array<double, 2> lo{std::max(-box, gb - step), std::max(-box, gg - step)};
        const std::array<double, 2> hi{std::min(box, gb + step), std::min(box, gg + step)};
        auto f = [&](double b, double g) { return eta_objective(pair, b, g); };
        const auto [x, v] = nelder_mead(f, {gb, gg}, step / 2, lo, hi);
        out.refined = true;
        if (v < out.value) {
            out.value = v;
            out.argmin = {0.0, x[0], x[1]};
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

ClassificationReport classify(const QuadraticPair& pair, std::optional<std::pair<double, double>> eta_params)
{
    ClassificationReport rep;
    rep.nondegeneracy = nondegeneracy_check(pair);
    rep.simdiag = simultaneous_diagonalize(pair);
    if (rep.simdiag.value) {
        const SimDiag& d = *rep.simdiag.value;
        rep.taxonomy = minor_taxonomy(d.lambda);
        if (d.exact)
            rep.taxonomy_exact = minor_taxonomy(*d.lambda_exact);
        const bool all = d.exact ? rep.taxonomy_exact->all_minors_nonzero : rep.taxonomy->all_minors_nonzero;
        if (all)
            rep.normal_form = normal_form(pair);
    }
    const auto [box, step] = eta_params.value_or(std::make_pair(10.0, 1.0 / 32));
    rep.eta = eta_estimate(pair, box, step, true);
    return rep;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json hom_to_json(const HomQuad3& h)
{
    nlohmann::json a = nlohmann::json::array();
    for (const auto& c : h.coeff)
        a.push_back(rational_to_json(c));
    return a;
}

nlohmann::json mat_to_json(const Mat3Q& m)
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : m) {
        nlohmann::json row = nlohmann::json::array();
        for (const auto& x : r)
            row.push_back(rational_to_json(x));
        rows.push_back(row);
    }
    return rows;
}

template <class Derived>
nlohmann::json dmat_to_json(const Eigen::MatrixBase<Derived>& m)
{
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < m.cols(); ++c)
            row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

nlohmann::json value_json(const Rational& q) { return rational_to_json(q); }
nlohmann::json value_json(double x) { return x; }

template <class T>
nlohmann::json taxonomy_json(const Taxonomy<T>& t)
{
    nlohmann::json j;
    j["verdict"] = t.all_minors_nonzero ? "ALL_MINORS_NONZERO" : "SINGULAR_MINOR";
    j["minors"] = {{"12", value_json(t.minors[0])}, {"13", value_json(t.minors[1])}, {"23", value_json(t.minors[2])}};
    nlohmann::json ms = nlohmann::json::array();
    for (const auto& m : t.matches) {
        nlohmann::json e;
        e["type"] = to_string(m.type);
        nlohmann::json beta = nlohmann::json::array(), red = nlohmann::json::array();
        for (int r = 0; r < 2; ++r) {
            beta.push_back({value_json(m.beta[r][0]), value_json(m.beta[r][1])});
            red.push_back({value_json(m.reduced[r][0]), value_json(m.reduced[r][1]), value_json(m.reduced[r][2])});
        }
        e["beta"] = beta;
        e["reduced"] = red;
        e["pattern"] = m.pattern;
        ms.push_back(e);
    }
    j["matches"] = ms;
    return j;
}

} // namespace

nlohmann::json to_json(const NondegeneracyVerdict& v)
{
    nlohmann::json j;
    j["verdict"] = to_string(v.verdict);
    j["coefficient_rank"] = v.coefficient_rank;
    j["minor_polys"] = {{"monomials", {"r^2", "s^2", "t^2", "rs", "rt", "st"}},
                        {"D1", hom_to_json(v.minor_polys[0])},
                        {"D2", hom_to_json(v.minor_polys[1])},
                        {"D3", hom_to_json(v.minor_polys[2])}};
    if (v.witness) {
        j["witness"] = {rational_to_json((*v.witness)[0]), rational_to_json((*v.witness)[1]),
                        rational_to_json((*v.witness)[2])};
        j["witness_combination"] = hom_to_json(witness_combination(v.minor_polys, *v.witness));
    } else {
        j["witness"] = nullptr;
    }
    return j;
}

nlohmann::json to_json(const ClassificationReport& r)
{
    nlohmann::json j;
    j["nondegeneracy"] = to_json(r.nondegeneracy);
    if (r.simdiag.value) {
        const SimDiag& d = *r.simdiag.value;
        nlohmann::json s;
        s["mode"] = d.exact ? "exact" : "binary64";
        s["route"] = d.route;
        s["residual"] = d.residual;
        if (d.exact) {
            s["M"] = mat_to_json(*d.M_exact);
            nlohmann::json lam = nlohmann::json::array();
            for (const auto& row : *d.lambda_exact)
                lam.push_back({rational_to_json(row[0]), rational_to_json(row[1]), rational_to_json(row[2])});
            s["Lambda"] = lam;
        } else {
            s["M"] = dmat_to_json(d.M);
            s["Lambda"] = dmat_to_json(d.lambda);
        }
        j["simdiag"] = s;
    } else {
        j["simdiag"] = {{"present", false}, {"reason", r.simdiag.reason}};
    }
    if (r.taxonomy_exact)
        j["minor_taxonomy"] = taxonomy_json(*r.taxonomy_exact);
    else if (r.taxonomy)
        j["minor_taxonomy"] = taxonomy_json(*r.taxonomy);
    else
        j["minor_taxonomy"] = nullptr;
    if (r.normal_form) {
        const NormalForm& n = *r.normal_form;
        nlohmann::json nf;
        nf["mode"] = n.exact ? "exact" : "binary64";
        if (n.exact) {
            nf["A"] = rational_to_json(*n.A_exact);
            nf["B"] = rational_to_json(*n.B_exact);
            nf["M"] = mat_to_json(*n.M_exact);
            nf["beta"] = {{rational_to_json((*n.beta_exact)[0][0]), rational_to_json((*n.beta_exact)[0][1])},
                          {rational_to_json((*n.beta_exact)[1][0]), rational_to_json((*n.beta_exact)[1][1])}};
        } else {
            nf["A"] = n.A;
            nf["B"] = n.B;
            nf["M"] = dmat_to_json(n.M);
            nf["beta"] = dmat_to_json(n.beta);
        }
        nf["reconstruction_error"] = n.reconstruction_error;
        j["normal_form"] = nf;
    } else {
        j["normal_form"] = nullptr;
    }
    if (r.eta) {
        const EtaEstimate& e = *r.eta;
        j["eta"] = {{"value", e.value},
                    {"argmin", e.argmin},
                    {"search_box", e.search_box},
                    {"grid_step", e.grid_step},
                    {"grid_points", e.grid_points},
                    {"grid_value", e.grid_value},
                    {"refined", e.refined}};
    }
    return j;
}

} // namespace qlab
