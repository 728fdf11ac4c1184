#include "qlab/exact_linalg.hpp"

#include "qlab/errors.hpp"

#include <utility>

namespace qlab {

QMatrix::QMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, Rational(0))
{
}

QMatrix::QMatrix(std::initializer_list<std::initializer_list<Rational>> rows)
{
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_)
            throw Error("ragged matrix literal");
        for (const auto& v : r)
            data_.push_back(v);
    }
}

QMatrix QMatrix::identity(std::size_t n)
{
    QMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        m(i, i) = 1;
    return m;
}

QMatrix QMatrix::transpose() const
{
    QMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j)
            t(j, i) = (*this)(i, j);
    return t;
}

bool QMatrix::is_zero() const
{
    for (const auto& v : data_)
        if (sgn(v) != 0)
            return false;
    return true;
}

QMatrix operator*(const QMatrix& a, const QMatrix& b)
{
    if (a.cols_ != b.rows_)
        throw Error("matrix product shape mismatch");
    QMatrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
        for (std::size_t k = 0; k < a.cols_; ++k) {
            const Rational& aik = a(i, k);
            if (sgn(aik) == 0)
                continue;
            for (std::size_t j = 0; j < b.cols_; ++j)
                c(i, j) += aik * b(k, j);
        }
    return c;
}

QMatrix operator+(const QMatrix& a, const QMatrix& b)
{
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
        throw Error("matrix sum shape mismatch");
    QMatrix c(a.rows_, a.cols_);
    for (std::size_t i = 0; i < a.data_.size(); ++i)
        c.data_[i] = a.data_[i] + b.data_[i];
    return c;
}

QMatrix operator-(const QMatrix& a, const QMatrix& b)
{
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
        throw Error("matrix difference shape mismatch");
    QMatrix c(a.rows_, a.cols_);
    for (std::size_t i = 0; i < a.data_.size(); ++i)
        c.data_[i] = a.data_[i] - b.data_[i];
    return c;
}

QMatrix operator*(const Rational& s, const QMatrix& a)
{
    QMatrix c = a;
    for (auto& v : c.data_)
        v *= s;
    return c;
}

bool operator==(const QMatrix& a, const QMatrix& b)
{
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
}

RowEchelon rref(QMatrix m)
{
    RowEchelon out;
    std::size_t row = 0;
    for (std::size_t col = 0; col < m.cols() && row < m.rows(); ++col) {
        std::size_t piv = row;
        while (piv < m.rows() && sgn(m(piv, col)) == 0)
            ++piv;
        if (piv == m.rows())
            continue;
        if (piv != row)
            for (std::size_t j = 0; j < m.cols(); ++j)
                std::swap(m(piv, j), m(row, j));
        Rational inv = 1 / m(row, col);
        for (std::size_t j = col; j < m.cols(); ++j)
            m(row, j) *= inv;
        for (std::size_t i = 0; i < m.rows(); ++i) {
            if (i == row || sgn(m(i, col)) == 0)
                continue;
            Rational f = m(i, col);
            for (std::size_t j = col; j < m.cols(); ++j)
                m(i, j) -= f * m(row, j);
        }
        out.pivots.push_back(col);
        ++row;
    }
    out.reduced = std::move(m);
    return out;
}

std::size_t rank(const QMatrix& m)
{
    return rref(m).pivots.size();
}

std::vector<std::vector<Rational>> nullspace(const QMatrix& m)
{
    RowEchelon e = rref(m);
    std::vector<bool> is_pivot(m.cols(), false);
    for (auto p : e.pivots)
        is_pivot[p] = true;
    std::vector<std::vector<Rational>> basis;
    for (std::size_t free = 0; free < m.cols(); ++free) {
        if (is_pivot[free])
            continue;
        std::vector<Rational> v(m.cols(), Rational(0));
        v[free] = 1;
        for (std::size_t r = 0; r < e.pivots.size(); ++r)
            v[e.pivots[r]] = -e.reduced(r, free);
        basis.push_back(std::move(v));
    }
    return basis;
}

std::vector<std::vector<Rational>> left_nullspace(const QMatrix& m)
{
    return nullspace(m.transpose());
}

Rational determinant(QMatrix m)
{
    if (m.rows() != m.cols())
        throw Error("determinant of a non-square matrix");
    const std::size_t n = m.rows();
    Rational det = 1;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        while (piv < n && sgn(m(piv, col)) == 0)
            ++piv;
        if (piv == n)
            return Rational(0);
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j)
                std::swap(m(piv, j), m(col, j));
            det = -det;
        }
        det *= m(col, col);
        Rational inv = 1 / m(col, col);
        for (std::size_t i = col + 1; i < n; ++i) {
            if (sgn(m(i, col)) == 0)
                continue;
            Rational f = m(i, col) * inv;
            for (std::size_t j = col; j < n; ++j)
                m(i, j) -= f * m(col, j);
        }
    }
    return det;
}

QMatrix inverse(const QMatrix& m)
{
    if (m.rows() != m.cols())
        throw Error("inverse of a non-square matrix");
    const std::size_t n = m.rows();
    QMatrix aug(n, 2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            aug(i, j) = m(i, j);
        aug(i, n + i) = 1;
    }
    RowEchelon e = rref(std::move(aug));
    if (e.pivots.size() < n || e.pivots[n - 1] != n - 1)
        throw SingularTransform("matrix is not invertible");
    QMatrix inv(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            inv(i, j) = e.reduced(i, n + j);
    return inv;
}

} // namespace qlab
