#pragma once

#include "qlab/rational.hpp"

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace qlab {

/// Dense row-major matrix over Q. Small sizes only (the largest user is the
/// m x 10 moment matrix of the cluster detector).
class QMatrix {
public:
    QMatrix() = default;
    QMatrix(std::size_t rows, std::size_t cols);
    QMatrix(std::initializer_list<std::initializer_list<Rational>> rows);

    static QMatrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    Rational& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const Rational& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    QMatrix transpose() const;
    bool is_zero() const;

    friend QMatrix operator*(const QMatrix& a, const QMatrix& b);
    friend QMatrix operator+(const QMatrix& a, const QMatrix& b);
    friend QMatrix operator-(const QMatrix& a, const QMatrix& b);
    friend QMatrix operator*(const Rational& s, const QMatrix& a);
    friend bool operator==(const QMatrix& a, const QMatrix& b);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Rational> data_;
};

/// Reduced row echelon form together with the pivot column of each nonzero row.
struct RowEchelon {
    QMatrix reduced;
    std::vector<std::size_t> pivots;
};

RowEchelon rref(QMatrix m);

std::size_t rank(const QMatrix& m);

/// Basis of {x : m x = 0}, one vector per free column, each with a 1 in its
/// free coordinate.
std::vector<std::vector<Rational>> nullspace(const QMatrix& m);

/// Basis of {y : y^T m = 0}.
std::vector<std::vector<Rational>> left_nullspace(const QMatrix& m);

Rational determinant(QMatrix m);

/// Throws SingularTransform if m is singular.
QMatrix inverse(const QMatrix& m);

} // namespace qlab
