// Test-only oracles, kept independent of the library's numerical routes:
// the SVD here is one-sided Jacobi (the library uses the Gram route), sums
// are compensated two-pass, determinants come from plain LU.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "sensekit/matrix.hpp"
#include "sensekit/rng.hpp"

namespace oracles {

using sensekit::Matrix;
using sensekit::Vector;

/// Singular values (descending) by one-sided Jacobi on the columns.
inline Vector jacobi_singular_values(Matrix a) {
    if (a.rows() < a.cols()) a = sensekit::transpose(a);
    const std::int64_t m = a.rows();
    const std::int64_t k = a.cols();

    bool rotated = true;
    int sweeps = 0;
    while (rotated && sweeps < 60) {
        rotated = false;
        ++sweeps;
        for (std::int64_t p = 0; p < k - 1; ++p) {
            for (std::int64_t q = p + 1; q < k; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                const double* cp = a.col(p);
                const double* cq = a.col(q);
                for (std::int64_t i = 0; i < m; ++i) {
                    app += cp[i] * cp[i];
                    aqq += cq[i] * cq[i];
                    apq += cp[i] * cq[i];
                }
                if (std::abs(apq) <= 1e-15 * std::sqrt(app * aqq) || apq == 0.0) continue;
                rotated = true;
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                double* wp = a.col(p);
                double* wq = a.col(q);
                for (std::int64_t i = 0; i < m; ++i) {
                    const double vp = wp[i];
                    const double vq = wq[i];
                    wp[i] = c * vp - s * vq;
                    wq[i] = s * vp + c * vq;
                }
            }
        }
    }

    Vector sv(static_cast<std::size_t>(k));
    for (std::int64_t j = 0; j < k; ++j) {
        double s = 0.0;
        const double* cj = a.col(j);
        for (std::int64_t i = 0; i < m; ++i) s += cj[i] * cj[i];
        sv[static_cast<std::size_t>(j)] = std::sqrt(s);
    }
    std::sort(sv.begin(), sv.end(), std::greater<double>());
    return sv;
}

inline std::int64_t numerical_rank(const Matrix& a, double rel_tol = 1e-10) {
    const Vector sv = jacobi_singular_values(a);
    std::int64_t r = 0;
    for (double s : sv) {
        if (s > sv.front() * rel_tol) ++r;
    }
    return r;
}

/// det by LU with partial pivoting; fine for the tiny brute-force instances.
inline double det(Matrix a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("det: square matrix required");
    const std::int64_t n = a.rows();
    double d = 1.0;
    for (std::int64_t k = 0; k < n; ++k) {
        std::int64_t piv = k;
        for (std::int64_t i = k + 1; i < n; ++i) {
            if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
        }
        if (piv != k) {
            for (std::int64_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            d = -d;
        }
        if (a(k, k) == 0.0) return 0.0;
        d *= a(k, k);
        for (std::int64_t i = k + 1; i < n; ++i) {
            const double f = a(i, k) / a(k, k);
            for (std::int64_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
        }
    }
    return d;
}

/// Kahan-compensated sum.
inline double stable_sum(const Vector& v) {
    double sum = 0.0, comp = 0.0;
    for (double x : v) {
        const double y = x - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0; // sample std (n-1)
};

inline MeanStd two_pass_stats(const Vector& v) {
    MeanStd r;
    if (v.empty()) return r;
    r.mean = stable_sum(v) / static_cast<double>(v.size());
    if (v.size() < 2) return r;
    Vector sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - r.mean) * (v[i] - r.mean);
    r.stddev = std::sqrt(stable_sum(sq) / static_cast<double>(v.size() - 1));
    return r;
}

/// Mean relative l2 error written as two explicit loops, independent of
/// the library implementation.
inline double two_loop_relative_error(const Matrix& x_hat, const Matrix& x, const Vector& mean) {
    Vector per(static_cast<std::size_t>(x.cols()));
    for (std::int64_t k = 0; k < x.cols(); ++k) {
        double num = 0.0;
        for (std::int64_t i = 0; i < x.rows(); ++i) {
            const double a = x_hat(i, k) - mean[static_cast<std::size_t>(i)];
            const double b = x(i, k) - mean[static_cast<std::size_t>(i)];
            num += (a - b) * (a - b);
        }
        double den = 0.0;
        for (std::int64_t i = 0; i < x.rows(); ++i) {
            const double b = x(i, k) - mean[static_cast<std::size_t>(i)];
            den += b * b;
        }
        per[static_cast<std::size_t>(k)] = std::sqrt(num / den);
    }
    return stable_sum(per) / static_cast<double>(per.size());
}

/// Orthonormal m x r test basis from seeded Gaussian draws + classical
/// Gram-Schmidt (written out here so basis construction does not reuse the
/// library's orthonormalizer).
inline Matrix random_orthonormal(std::int64_t m, std::int64_t r, std::uint64_t seed) {
    sensekit::Rng rng(seed);
    Matrix a(m, r);
    for (double& v : a.data()) v = rng.gaussian();
    for (std::int64_t j = 0; j < r; ++j) {
        double* cj = a.col(j);
        for (std::int64_t rep = 0; rep < 2; ++rep) {
            for (std::int64_t k = 0; k < j; ++k) {
                const double* ck = a.col(k);
                double dot = 0.0;
                for (std::int64_t i = 0; i < m; ++i) dot += ck[i] * cj[i];
                for (std::int64_t i = 0; i < m; ++i) cj[i] -= dot * ck[i];
            }
        }
        double norm = 0.0;
        for (std::int64_t i = 0; i < m; ++i) norm += cj[i] * cj[i];
        norm = std::sqrt(norm);
        for (std::int64_t i = 0; i < m; ++i) cj[i] /= norm;
    }
    return a;
}

} // namespace oracles
