#include "qlab/qform.hpp"

#include "qlab/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace qlab {

Mat3Q identity3()
{
    Mat3Q m{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            m[i][j] = i == j ? 1 : 0;
    return m;
}

Mat3Q transpose(const Mat3Q& m)
{
    Mat3Q t{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            t[i][j] = m[j][i];
    return t;
}

Mat3Q operator*(const Mat3Q& a, const Mat3Q& b)
{
    Mat3Q c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            Rational s = 0;
            for (int k = 0; k < 3; ++k)
                s += a[i][k] * b[k][j];
            c[i][j] = s;
        }
    return c;
}

Vec3Q operator*(const Mat3Q& a, const Vec3Q& v)
{
    Vec3Q out{};
    for (int i = 0; i < 3; ++i)
        out[i] = a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2];
    return out;
}

Rational det(const Mat3Q& m)
{
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

Rational det(const Mat2Q& m)
{
    return m[0][0] * m[1][1] - m[0][1] * m[1][0];
}

QMatrix to_qmatrix(const Mat3Q& m)
{
    QMatrix q(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            q(i, j) = m[i][j];
    return q;
}

Mat3Q to_mat3(const QMatrix& m)
{
    if (m.rows() != 3 || m.cols() != 3)
        throw Error("to_mat3: shape mismatch");
    Mat3Q out{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            out[i][j] = m(i, j);
    return out;
}

Mat3Q inverse(const Mat3Q& m)
{
    return to_mat3(inverse(to_qmatrix(m)));
}

Mat2Q inverse(const Mat2Q& m)
{
    Rational d = det(m);
    if (sgn(d) == 0)
        throw SingularTransform("2x2 matrix is singular");
    Mat2Q inv{};
    inv[0][0] = m[1][1] / d;
    inv[0][1] = -m[0][1] / d;
    inv[1][0] = -m[1][0] / d;
    inv[1][1] = m[0][0] / d;
    return inv;
}

// ---------------------------------------------------------------------------

SymMatrix3::SymMatrix3()
{
    upper_.fill(Rational(0));
}

SymMatrix3::SymMatrix3(std::array<Rational, 6> upper) : upper_(std::move(upper))
{
    for (auto& v : upper_)
        v.canonicalize();
}

int SymMatrix3::slot(int i, int j)
{
    if (i > j)
        std::swap(i, j);
    static constexpr int table[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
    return table[i][j];
}

SymMatrix3 SymMatrix3::diagonal(const Rational& d0, const Rational& d1, const Rational& d2)
{
    return SymMatrix3({d0, 0, 0, d1, 0, d2});
}

SymMatrix3 SymMatrix3::from_dense(const Mat3Q& m)
{
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (m[i][j] != m[j][i])
                throw SchemaError("matrix is not symmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")");
    return SymMatrix3({m[0][0], m[0][1], m[0][2], m[1][1], m[1][2], m[2][2]});
}

SymMatrix3 SymMatrix3::from_form(const FormCoefficients& f)
{
    return SymMatrix3({f.A, f.D / 2, f.E / 2, f.B, f.F / 2, f.C});
}

const Rational& SymMatrix3::operator()(int i, int j) const
{
    return upper_[slot(i, j)];
}

Mat3Q SymMatrix3::dense() const
{
    Mat3Q m{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            m[i][j] = (*this)(i, j);
    return m;
}

FormCoefficients SymMatrix3::form() const
{
    return {(*this)(0, 0), (*this)(1, 1), (*this)(2, 2), 2 * (*this)(0, 1), 2 * (*this)(0, 2), 2 * (*this)(1, 2)};
}

bool SymMatrix3::is_zero() const
{
    for (const auto& v : upper_)
        if (sgn(v) != 0)
            return false;
    return true;
}

bool SymMatrix3::is_diagonal() const
{
    return sgn(upper_[1]) == 0 && sgn(upper_[2]) == 0 && sgn(upper_[4]) == 0;
}

SymMatrix3 operator+(const SymMatrix3& a, const SymMatrix3& b)
{
    std::array<Rational, 6> u;
    for (int k = 0; k < 6; ++k)
        u[k] = a.upper_[k] + b.upper_[k];
    return SymMatrix3(u);
}

SymMatrix3 operator*(const Rational& s, const SymMatrix3& a)
{
    std::array<Rational, 6> u;
    for (int k = 0; k < 6; ++k)
        u[k] = s * a.upper_[k];
    return SymMatrix3(u);
}

QuadraticPair::QuadraticPair(SymMatrix3 a1, SymMatrix3 a2) : A1(std::move(a1)), A2(std::move(a2))
{
    if (A1.is_zero() && A2.is_zero())
        throw SchemaError("both quadratic forms are zero");
}

// ---------------------------------------------------------------------------

bool QuadPoly2::is_zero() const
{
    return sgn(a) == 0 && sgn(b) == 0 && sgn(c) == 0 && sgn(lr) == 0 && sgn(ls) == 0 && sgn(k) == 0;
}

Rational QuadPoly2::max_abs_quadratic() const
{
    Rational m = abs(a);
    if (abs(b) > m)
        m = abs(b);
    if (abs(c) > m)
        m = abs(c);
    return m;
}

bool HomQuad3::is_zero() const
{
    for (const auto& c : coeff)
        if (sgn(c) != 0)
            return false;
    return true;
}

Rational HomQuad3::evaluate(const Vec3Q& v) const
{
    const auto& [r, s, t] = v;
    return coeff[0] * r * r + coeff[1] * s * s + coeff[2] * t * t + coeff[3] * r * s + coeff[4] * r * t
        + coeff[5] * s * t;
}

HomQuad3 HomQuad3::product(const Vec3Q& l1, const Vec3Q& l2)
{
    HomQuad3 h;
    h.coeff[0] = l1[0] * l2[0];
    h.coeff[1] = l1[1] * l2[1];
    h.coeff[2] = l1[2] * l2[2];
    h.coeff[3] = l1[0] * l2[1] + l1[1] * l2[0];
    h.coeff[4] = l1[0] * l2[2] + l1[2] * l2[0];
    h.coeff[5] = l1[1] * l2[2] + l1[2] * l2[1];
    return h;
}

HomQuad3 operator-(const HomQuad3& a, const HomQuad3& b)
{
    HomQuad3 h;
    for (int k = 0; k < 6; ++k)
        h.coeff[k] = a.coeff[k] - b.coeff[k];
    return h;
}

HomQuad3 operator+(const HomQuad3& a, const HomQuad3& b)
{
    HomQuad3 h;
    for (int k = 0; k < 6; ++k)
        h.coeff[k] = a.coeff[k] + b.coeff[k];
    return h;
}

HomQuad3 operator*(const Rational& s, const HomQuad3& a)
{
    HomQuad3 h;
    for (int k = 0; k < 6; ++k)
        h.coeff[k] = s * a.coeff[k];
    return h;
}

// ---------------------------------------------------------------------------

Quadric3 Quadric3::constant(const Rational& c)
{
    Quadric3 q;
    q.coeff[0] = c;
    return q;
}

Quadric3 Quadric3::affine(const Rational& c0, const Vec3Q& l)
{
    Quadric3 q;
    q.coeff[0] = c0;
    q.coeff[1] = l[0];
    q.coeff[2] = l[1];
    q.coeff[3] = l[2];
    return q;
}

bool Quadric3::is_zero() const
{
    for (const auto& c : coeff)
        if (sgn(c) != 0)
            return false;
    return true;
}

bool Quadric3::is_constant() const
{
    for (int k = 1; k < 10; ++k)
        if (sgn(coeff[k]) != 0)
            return false;
    return true;
}

int Quadric3::degree() const
{
    for (int k = 4; k < 10; ++k)
        if (sgn(coeff[k]) != 0)
            return 2;
    for (int k = 1; k < 4; ++k)
        if (sgn(coeff[k]) != 0)
            return 1;
    return sgn(coeff[0]) != 0 ? 0 : -1;
}

Rational Quadric3::evaluate(const Vec3Q& v) const
{
    const auto& [r, s, t] = v;
    return coeff[0] + coeff[1] * r + coeff[2] * s + coeff[3] * t + coeff[4] * r * r + coeff[5] * s * s
        + coeff[6] * t * t + coeff[7] * r * s + coeff[8] * r * t + coeff[9] * s * t;
}

double Quadric3::evaluate(double r, double s, double t) const
{
    const double m[10] = {1, r, s, t, r * r, s * s, t * t, r * s, r * t, s * t};
    double acc = 0;
    for (int k = 0; k < 10; ++k)
        acc += coeff[k].get_d() * m[k];
    return acc;
}

Quadric3 operator+(const Quadric3& a, const Quadric3& b)
{
    Quadric3 q;
    for (int k = 0; k < 10; ++k)
        q.coeff[k] = a.coeff[k] + b.coeff[k];
    return q;
}

Quadric3 operator-(const Quadric3& a, const Quadric3& b)
{
    Quadric3 q;
    for (int k = 0; k < 10; ++k)
        q.coeff[k] = a.coeff[k] - b.coeff[k];
    return q;
}

Quadric3 operator*(const Rational& s, const Quadric3& a)
{
    Quadric3 q;
    for (int k = 0; k < 10; ++k)
        q.coeff[k] = s * a.coeff[k];
    return q;
}

Quadric3 operator*(const Quadric3& a, const Quadric3& b)
{
    if (a.degree() + b.degree() > 2)
        throw Error("Quadric3 product exceeds degree 2");
    Quadric3 q;
    const Rational& a0 = a.coeff[0];
    const Rational& b0 = b.coeff[0];
    q.coeff[0] = a0 * b0;
    for (int k = 1; k < 4; ++k)
        q.coeff[k] = a0 * b.coeff[k] + b0 * a.coeff[k];
    for (int k = 4; k < 10; ++k)
        q.coeff[k] = a0 * b.coeff[k] + b0 * a.coeff[k];
    // linear x linear
    const Rational ar = a.coeff[1], as = a.coeff[2], at = a.coeff[3];
    const Rational br = b.coeff[1], bs = b.coeff[2], bt = b.coeff[3];
    q.coeff[4] += ar * br;
    q.coeff[5] += as * bs;
    q.coeff[6] += at * bt;
    q.coeff[7] += ar * bs + as * br;
    q.coeff[8] += ar * bt + at * br;
    q.coeff[9] += as * bt + at * bs;
    return q;
}

std::string Quadric3::to_string() const
{
    static const char* names[10] = {"", "r", "s", "t", "r^2", "s^2", "t^2", "r*s", "r*t", "s*t"};
    std::ostringstream os;
    bool first = true;
    for (int k = 0; k < 10; ++k) {
        if (sgn(coeff[k]) == 0)
            continue;
        Rational c = coeff[k];
        if (!first)
            os << (sgn(c) < 0 ? " - " : " + ");
        else if (sgn(c) < 0)
            os << "-";
        c = abs(c);
        if (k == 0)
            os << c.get_str();
        else if (c == 1)
            os << names[k];
        else
            os << c.get_str() << "*" << names[k];
        first = false;
    }
    return first ? "0" : os.str();
}

// ---------------------------------------------------------------------------

Rational evaluate(const SymMatrix3& q, const Vec3Q& p)
{
    Rational s = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            s += p[i] * q(i, j) * p[j];
    return s;
}

std::pair<Rational, Rational> evaluate(const QuadraticPair& pair, const Vec3Q& point)
{
    return {evaluate(pair.A1, point), evaluate(pair.A2, point)};
}

Mat3Q gradient_forms(const SymMatrix3& q)
{
    Mat3Q g{};
    for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 3; ++j)
            g[k][j] = 2 * q(k, j);
    return g;
}

std::pair<Vec3Q, Vec3Q> gradient(const QuadraticPair& pair, const Vec3Q& point)
{
    return {gradient_forms(pair.A1) * point, gradient_forms(pair.A2) * point};
}

QuadraticPair change_of_variables(const QuadraticPair& pair, const Mat3Q& M, const Mat2Q& beta)
{
    if (sgn(det(M)) == 0)
        throw SingularTransform("det(M) = 0");
    if (sgn(det(beta)) == 0)
        throw SingularTransform("det(beta) = 0");
    const Mat3Q a1 = pair.A1.dense();
    const Mat3Q a2 = pair.A2.dense();
    const Mat3Q mt = transpose(M);
    SymMatrix3 out[2];
    for (int i = 0; i < 2; ++i) {
        Mat3Q mix{};
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                mix[r][c] = beta[i][0] * a1[r][c] + beta[i][1] * a2[r][c];
        out[i] = SymMatrix3::from_dense(mt * mix * M);
    }
    return QuadraticPair(out[0], out[1]);
}

std::pair<Mat3Q, Mat2Q> inverse_transform(const Mat3Q& M, const Mat2Q& beta)
{
    return {inverse(M), inverse(beta)};
}

QuadPoly2 restrict_to_plane(const SymMatrix3& q, const Rational& alpha, const Rational& beta, const Rational& gamma)
{
    const FormCoefficients f = q.form();
    QuadPoly2 p;
    p.a = f.A + f.C * beta * beta + f.E * beta;
    p.b = f.B + f.C * gamma * gamma + f.F * gamma;
    p.c = 2 * beta * gamma * f.C + f.D + f.E * gamma + f.F * beta;
    p.lr = 2 * f.C * alpha * beta + f.E * alpha;
    p.ls = 2 * f.C * alpha * gamma + f.F * alpha;
    p.k = f.C * alpha * alpha;
    return p;
}

// ---------------------------------------------------------------------------

nlohmann::json rational_to_json(const Rational& q)
{
    if (q.get_den() == 1 && q.get_num().fits_slong_p())
        return q.get_num().get_si();
    return q.get_str();
}

Rational rational_from_json(const nlohmann::json& j)
{
    if (j.is_string())
        return parse_rational(j.get<std::string>());
    if (j.is_number_integer())
        return make_rational(j.get<long>());
    if (j.is_number_float()) {
        // Shortest round-trip decimal text of the double, parsed exactly.
        return parse_rational(j.dump());
    }
    throw SchemaError("matrix entry must be a number or a \"p/q\" string, got " + j.dump());
}

namespace {

Mat3Q matrix_from_json(const nlohmann::json& j, const char* name)
{
    if (!j.is_array() || j.size() != 3)
        throw SchemaError(std::string(name) + " must be a 3x3 array");
    Mat3Q m{};
    for (int i = 0; i < 3; ++i) {
        if (!j[i].is_array() || j[i].size() != 3)
            throw SchemaError(std::string(name) + " must be a 3x3 array");
        for (int k = 0; k < 3; ++k)
            m[i][k] = rational_from_json(j[i][k]);
    }
    return m;
}

nlohmann::json matrix_to_json(const SymMatrix3& s)
{
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < 3; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int k = 0; k < 3; ++k)
            row.push_back(rational_to_json(s(i, k)));
        rows.push_back(row);
    }
    return rows;
}

} // namespace

QuadraticPair pair_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("A1") || !j.contains("A2"))
        throw SchemaError("pair must be an object with keys \"A1\" and \"A2\"");
    SymMatrix3 a1, a2;
    try {
        a1 = SymMatrix3::from_dense(matrix_from_json(j["A1"], "A1"));
    } catch (const SchemaError& e) {
        throw SchemaError(std::string("A1: ") + e.what());
    }
    try {
        a2 = SymMatrix3::from_dense(matrix_from_json(j["A2"], "A2"));
    } catch (const SchemaError& e) {
        throw SchemaError(std::string("A2: ") + e.what());
    }
    return QuadraticPair(a1, a2);
}

nlohmann::json pair_to_json(const QuadraticPair& pair)
{
    return {{"A1", matrix_to_json(pair.A1)}, {"A2", matrix_to_json(pair.A2)}};
}

QuadraticPair load_pair(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw SchemaError("cannot open pair file " + path);
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
        return pair_from_json(j);
    } catch (const SchemaError& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

void save_pair(const QuadraticPair& pair, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write " + path);
    out << pair_to_json(pair).dump(2) << "\n";
}

std::string pair_hash(const QuadraticPair& pair)
{
    std::string canon;
    for (int f = 0; f < 2; ++f)
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j)
                canon += pair.form(f)(i, j).get_str() + ";";
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

} // namespace qlab
