#pragma once

#include "qlab/exact_linalg.hpp"
#include "qlab/rational.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <utility>

#include "json.hpp"

namespace qlab {

/// General (not necessarily symmetric) 3x3 rational matrix.
using Mat3Q = std::array<std::array<Rational, 3>, 3>;
using Mat2Q = std::array<std::array<Rational, 2>, 2>;

Mat3Q identity3();
Mat3Q transpose(const Mat3Q& m);
Mat3Q operator*(const Mat3Q& a, const Mat3Q& b);
Vec3Q operator*(const Mat3Q& a, const Vec3Q& v);
Rational det(const Mat3Q& m);
Rational det(const Mat2Q& m);
Mat3Q inverse(const Mat3Q& m);
Mat2Q inverse(const Mat2Q& m);
QMatrix to_qmatrix(const Mat3Q& m);
Mat3Q to_mat3(const QMatrix& m);

/// Q = A r^2 + B s^2 + C t^2 + D rs + E rt + F st.
struct FormCoefficients {
    Rational A, B, C, D, E, F;
};

/// Symmetric 3x3 matrix; the upper triangle is the only storage.
class SymMatrix3 {
public:
    SymMatrix3();
    /// Entries in the order (00, 01, 02, 11, 12, 22).
    explicit SymMatrix3(std::array<Rational, 6> upper);

    static SymMatrix3 diagonal(const Rational& d0, const Rational& d1, const Rational& d2);
    /// Throws SchemaError if m is not exactly symmetric.
    static SymMatrix3 from_dense(const Mat3Q& m);
    static SymMatrix3 from_form(const FormCoefficients& f);

    const Rational& operator()(int i, int j) const;
    Mat3Q dense() const;
    FormCoefficients form() const;
    bool is_zero() const;
    bool is_diagonal() const;

    friend bool operator==(const SymMatrix3& a, const SymMatrix3& b) { return a.upper_ == b.upper_; }
    friend SymMatrix3 operator+(const SymMatrix3& a, const SymMatrix3& b);
    friend SymMatrix3 operator*(const Rational& s, const SymMatrix3& a);

private:
    static int slot(int i, int j);
    std::array<Rational, 6> upper_;
};

/// The pair (A1, A2) defining Q_i(v) = v A_i v^T and the graph surface
/// (r, s, t, Q1, Q2) over [0,1]^3.
struct QuadraticPair {
    SymMatrix3 A1;
    SymMatrix3 A2;

    QuadraticPair() = default;
    /// Throws SchemaError when both matrices vanish.
    QuadraticPair(SymMatrix3 a1, SymMatrix3 a2);

    const SymMatrix3& form(int i) const { return i == 0 ? A1 : A2; }

    friend bool operator==(const QuadraticPair& a, const QuadraticPair& b) { return a.A1 == b.A1 && a.A2 == b.A2; }
};

/// Bivariate quadratic a r^2 + b s^2 + c rs + lr r + ls s + k.
struct QuadPoly2 {
    Rational a, b, c;
    Rational lr, ls, k;

    bool is_zero() const;
    Rational max_abs_quadratic() const;
};

/// Homogeneous quadratic in (r, s, t); coefficient order (r^2, s^2, t^2, rs, rt, st).
struct HomQuad3 {
    std::array<Rational, 6> coeff{};

    bool is_zero() const;
    Rational evaluate(const Vec3Q& v) const;
    /// Product of two linear forms given by their (r, s, t) coefficients.
    static HomQuad3 product(const Vec3Q& l1, const Vec3Q& l2);

    friend HomQuad3 operator-(const HomQuad3& a, const HomQuad3& b);
    friend HomQuad3 operator+(const HomQuad3& a, const HomQuad3& b);
    friend HomQuad3 operator*(const Rational& s, const HomQuad3& a);
    friend bool operator==(const HomQuad3& a, const HomQuad3& b) { return a.coeff == b.coeff; }
};

/// Polynomial of degree <= 2 in (r, s, t); coefficient order
/// (1, r, s, t, r^2, s^2, t^2, rs, rt, st).
struct Quadric3 {
    std::array<Rational, 10> coeff{};

    static Quadric3 constant(const Rational& c);
    /// c0 + l . (r, s, t)
    static Quadric3 affine(const Rational& c0, const Vec3Q& l);

    bool is_zero() const;
    bool is_constant() const;
    int degree() const;
    Rational evaluate(const Vec3Q& v) const;
    double evaluate(double r, double s, double t) const;

    friend Quadric3 operator+(const Quadric3& a, const Quadric3& b);
    friend Quadric3 operator-(const Quadric3& a, const Quadric3& b);
    friend Quadric3 operator*(const Rational& s, const Quadric3& a);
    /// Product of two affine polynomials; throws if the degree would exceed 2.
    friend Quadric3 operator*(const Quadric3& a, const Quadric3& b);
    friend bool operator==(const Quadric3& a, const Quadric3& b) { return a.coeff == b.coeff; }

    std::string to_string() const;
};

/// Q_i(point) for both forms.
std::pair<Rational, Rational> evaluate(const QuadraticPair& pair, const Vec3Q& point);

Rational evaluate(const SymMatrix3& q, const Vec3Q& point);

/// grad Q_i(point) = 2 A_i point.
std::pair<Vec3Q, Vec3Q> gradient(const QuadraticPair& pair, const Vec3Q& point);

/// The partial derivatives of Q as linear forms: row k holds the (r, s, t)
/// coefficients of dQ/dx_k, i.e. 2 A.
Mat3Q gradient_forms(const SymMatrix3& q);

/// B_i = M^T (beta_{i1} A1 + beta_{i2} A2) M. Throws SingularTransform when M
/// or beta is singular.
QuadraticPair change_of_variables(const QuadraticPair& pair, const Mat3Q& M, const Mat2Q& beta);

/// Inverse transform of change_of_variables: applying it to the output of
/// change_of_variables(pair, M, beta) returns pair.
std::pair<Mat3Q, Mat2Q> inverse_transform(const Mat3Q& M, const Mat2Q& beta);

/// Q(r, s, alpha + beta r + gamma s).
QuadPoly2 restrict_to_plane(const SymMatrix3& q, const Rational& alpha, const Rational& beta, const Rational& gamma);

// Pair file I/O. Format: {"A1": [[..],[..],[..]], "A2": [[..],[..],[..]]},
// entries numbers or "p/q" strings.
QuadraticPair pair_from_json(const nlohmann::json& j);
nlohmann::json pair_to_json(const QuadraticPair& pair);
/// Throws SchemaError naming the file (and line, for parse errors).
QuadraticPair load_pair(const std::string& path);
void save_pair(const QuadraticPair& pair, const std::string& path);

/// Stable 64-bit FNV-1a hash of the canonical text of the pair, as 16 hex digits.
std::string pair_hash(const QuadraticPair& pair);

nlohmann::json rational_to_json(const Rational& q);
Rational rational_from_json(const nlohmann::json& j);

} // namespace qlab
