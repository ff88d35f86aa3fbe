#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sensekit {

using Vector = std::vector<double>;

/// Dense column-major float64 matrix. Column-major because snapshot data is
/// column-stacked and every hot loop walks columns.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::int64_t rows, std::int64_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols), fill) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative dimensions");
    }

    std::int64_t rows() const { return rows_; }
    std::int64_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::int64_t i, std::int64_t j) {
        return data_[static_cast<std::size_t>(j * rows_ + i)];
    }
    double operator()(std::int64_t i, std::int64_t j) const {
        return data_[static_cast<std::size_t>(j * rows_ + i)];
    }

    double* col(std::int64_t j) { return data_.data() + j * rows_; }
    const double* col(std::int64_t j) const { return data_.data() + j * rows_; }

    Vector col_copy(std::int64_t j) const {
        return Vector(col(j), col(j) + rows_);
    }

    void set_col(std::int64_t j, const Vector& v) {
        if (static_cast<std::int64_t>(v.size()) != rows_) {
            throw std::invalid_argument("Matrix::set_col: length mismatch");
        }
        std::copy(v.begin(), v.end(), col(j));
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool all_finite() const {
        for (double v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

private:
    std::int64_t rows_ = 0;
    std::int64_t cols_ = 0;
    std::vector<double> data_;
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
    Matrix c(a.rows(), b.cols());
    for (std::int64_t j = 0; j < b.cols(); ++j) {
        const double* bj = b.col(j);
        double* cj = c.col(j);
        for (std::int64_t k = 0; k < a.cols(); ++k) {
            const double bkj = bj[k];
            if (bkj == 0.0) continue;
            const double* ak = a.col(k);
            for (std::int64_t i = 0; i < a.rows(); ++i) cj[i] += ak[i] * bkj;
        }
    }
    return c;
}

/// AᵀA without forming the transpose.
inline Matrix gram(const Matrix& a) {
    Matrix g(a.cols(), a.cols());
    for (std::int64_t i = 0; i < a.cols(); ++i) {
        const double* ci = a.col(i);
        for (std::int64_t j = i; j < a.cols(); ++j) {
            const double* cj = a.col(j);
            double s = 0.0;
            for (std::int64_t k = 0; k < a.rows(); ++k) s += ci[k] * cj[k];
            g(i, j) = s;
            g(j, i) = s;
        }
    }
    return g;
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::int64_t j = 0; j < a.cols(); ++j) {
        for (std::int64_t i = 0; i < a.rows(); ++i) t(j, i) = a(i, j);
    }
    return t;
}

inline Vector matvec(const Matrix& a, const Vector& x) {
    if (static_cast<std::int64_t>(x.size()) != a.cols()) {
        throw std::invalid_argument("matvec: dimension mismatch");
    }
    Vector y(static_cast<std::size_t>(a.rows()), 0.0);
    for (std::int64_t k = 0; k < a.cols(); ++k) {
        const double xk = x[static_cast<std::size_t>(k)];
        if (xk == 0.0) continue;
        const double* ak = a.col(k);
        for (std::int64_t i = 0; i < a.rows(); ++i) y[static_cast<std::size_t>(i)] += ak[i] * xk;
    }
    return y;
}

inline double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

inline double norm2(const Vector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double v : a.data()) m = std::max(m, std::abs(v));
    return m;
}

} // namespace sensekit
