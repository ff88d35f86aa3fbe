#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "sensekit/matrix.hpp"

namespace sensekit {

struct EigResult {
    Vector values;   // descending
    Matrix vectors;  // orthonormal columns, vectors.col(i) pairs with values[i]
};

/// Cyclic Jacobi eigensolver for symmetric matrices. Eigenvalues are returned
/// in descending order with ties broken by original index, so results are
/// deterministic across runs.
inline EigResult jacobi_symmetric_eig(const Matrix& a_in) {
    if (a_in.rows() != a_in.cols()) {
        throw std::invalid_argument("jacobi_symmetric_eig: matrix must be square");
    }
    const std::int64_t n = a_in.rows();
    Matrix a = a_in;
    Matrix v(n, n);
    for (std::int64_t i = 0; i < n; ++i) v(i, i) = 1.0;

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::int64_t j = 0; j < n; ++j) {
            for (std::int64_t i = 0; i < n; ++i) {
                if (i != j) s += a(i, j) * a(i, j);
            }
        }
        return std::sqrt(s);
    };

    const double scale = frobenius_norm(a);
    const double tol = scale * 1e-15 * static_cast<double>(n);
    const int max_sweeps = 64;

    int sweep = 0;
    while (off_norm() > tol && tol > 0.0) {
        if (++sweep > max_sweeps) {
            throw std::runtime_error("jacobi_symmetric_eig: no convergence after 64 sweeps");
        }
        for (std::int64_t p = 0; p < n - 1; ++p) {
            for (std::int64_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= tol / static_cast<double>(n * n)) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::int64_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::int64_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::int64_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::int64_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::int64_t i, std::int64_t j) {
        return a(i, i) > a(j, j);
    });

    EigResult res;
    res.values.resize(static_cast<std::size_t>(n));
    res.vectors = Matrix(n, n);
    for (std::int64_t i = 0; i < n; ++i) {
        res.values[static_cast<std::size_t>(i)] = a(order[static_cast<std::size_t>(i)],
                                                    order[static_cast<std::size_t>(i)]);
        const double* src = v.col(order[static_cast<std::size_t>(i)]);
        std::copy(src, src + n, res.vectors.col(i));
    }
    return res;
}

/// Singular values of A (descending) via the Gram matrix of the shorter side.
inline Vector singular_values(const Matrix& a) {
    const Matrix g = (a.rows() >= a.cols()) ? gram(a) : gram(transpose(a));
    EigResult eig = jacobi_symmetric_eig(g);
    Vector sv(eig.values.size());
    for (std::size_t i = 0; i < sv.size(); ++i) {
        sv[i] = std::sqrt(std::max(eig.values[i], 0.0));
    }
    return sv;
}

/// 2-norm condition number estimate, sigma_max / sigma_min. Returns +inf for
/// an exactly singular matrix.
inline double condition_number(const Matrix& a) {
    const Vector sv = singular_values(a);
    const double smax = sv.front();
    const double smin = sv.back();
    if (smin <= 0.0) return std::numeric_limits<double>::infinity();
    return smax / smin;
}

/// Minimum-residual solution of A x = b for A with full column rank,
/// rows >= cols, via Householder QR. Throws if A is numerically rank
/// deficient.
inline Vector householder_lstsq(Matrix a, Vector b) {
    const std::int64_t m = a.rows();
    const std::int64_t n = a.cols();
    if (m < n) throw std::invalid_argument("householder_lstsq: system is underdetermined");
    if (static_cast<std::int64_t>(b.size()) != m) {
        throw std::invalid_argument("householder_lstsq: rhs length mismatch");
    }

    for (std::int64_t k = 0; k < n; ++k) {
        double norm = 0.0;
        for (std::int64_t i = k; i < m; ++i) norm += a(i, k) * a(i, k);
        norm = std::sqrt(norm);
        if (norm == 0.0) throw std::runtime_error("householder_lstsq: rank deficient matrix");

        const double alpha = (a(k, k) >= 0.0) ? -norm : norm;
        // Householder vector overwrites the strict lower part of column k.
        const double vk = a(k, k) - alpha;
        a(k, k) = alpha;
        double vnorm2 = vk * vk;
        for (std::int64_t i = k + 1; i < m; ++i) vnorm2 += a(i, k) * a(i, k);
        if (vnorm2 == 0.0) continue;

        for (std::int64_t j = k + 1; j < n; ++j) {
            double dot = vk * a(k, j);
            for (std::int64_t i = k + 1; i < m; ++i) dot += a(i, k) * a(i, j);
            const double beta = 2.0 * dot / vnorm2;
            a(k, j) -= beta * vk;
            for (std::int64_t i = k + 1; i < m; ++i) a(i, j) -= beta * a(i, k);
        }
        {
            double dot = vk * b[static_cast<std::size_t>(k)];
            for (std::int64_t i = k + 1; i < m; ++i) dot += a(i, k) * b[static_cast<std::size_t>(i)];
            const double beta = 2.0 * dot / vnorm2;
            b[static_cast<std::size_t>(k)] -= beta * vk;
            for (std::int64_t i = k + 1; i < m; ++i) b[static_cast<std::size_t>(i)] -= beta * a(i, k);
        }
    }

    Vector x(static_cast<std::size_t>(n));
    for (std::int64_t i = n - 1; i >= 0; --i) {
        double s = b[static_cast<std::size_t>(i)];
        for (std::int64_t j = i + 1; j < n; ++j) s -= a(i, j) * x[static_cast<std::size_t>(j)];
        const double rii = a(i, i);
        if (rii == 0.0) throw std::runtime_error("householder_lstsq: zero pivot");
        x[static_cast<std::size_t>(i)] = s / rii;
    }
    return x;
}

/// Orthonormalizes the columns of `a` in place with modified Gram-Schmidt
/// (two passes against preceding columns). Throws if a column is linearly
/// dependent on its predecessors.
inline void orthonormalize_columns(Matrix& a, const char* context = "orthonormalize_columns") {
    const std::int64_t m = a.rows();
    for (std::int64_t j = 0; j < a.cols(); ++j) {
        double* cj = a.col(j);
        double before = 0.0;
        for (std::int64_t i = 0; i < m; ++i) before += cj[i] * cj[i];
        for (int pass = 0; pass < 2; ++pass) {
            for (std::int64_t k = 0; k < j; ++k) {
                const double* ck = a.col(k);
                double dot = 0.0;
                for (std::int64_t i = 0; i < m; ++i) dot += ck[i] * cj[i];
                for (std::int64_t i = 0; i < m; ++i) cj[i] -= dot * ck[i];
            }
        }
        double after = 0.0;
        for (std::int64_t i = 0; i < m; ++i) after += cj[i] * cj[i];
        if (after <= before * 1e-24 || after == 0.0) {
            throw std::runtime_error(std::string(context) + ": linearly dependent column " +
                                     std::to_string(j));
        }
        const double inv = 1.0 / std::sqrt(after);
        for (std::int64_t i = 0; i < m; ++i) cj[i] *= inv;
    }
}

} // namespace sensekit
