#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sensekit/io.hpp"
#include "sensekit/linalg.hpp"
#include "sensekit/matrix.hpp"
#include "sensekit/sensor_set.hpp"
#include "sensekit/snapshots.hpp"

namespace sensekit {

/// Truncated POD basis: the leading left singular vectors of a mean-centered
/// snapshot matrix, plus the mean used for centering. Right singular vectors
/// are transient and never stored.
struct PodBasis {
    Matrix modes;           // m x r, orthonormal columns
    Vector singular_values; // length r, non-increasing
    Vector train_mean;      // length m

    std::int64_t m() const { return modes.rows(); }
    std::int64_t rank() const { return modes.cols(); }
};

inline std::string basis_fingerprint(const PodBasis& basis) {
    std::uint64_t h = fnv1a64(basis.modes.data().data(), basis.modes.data().size() * sizeof(double));
    h = fnv1a64(basis.singular_values.data(), basis.singular_values.size() * sizeof(double), h);
    return hex64(h);
}

namespace detail {

/// Deterministic sign: the entry of largest magnitude in each mode is made
/// positive, resolving the SVD sign ambiguity identically on every run.
inline void fix_mode_signs(Matrix& modes) {
    for (std::int64_t j = 0; j < modes.cols(); ++j) {
        double* cj = modes.col(j);
        std::int64_t arg = 0;
        double best = std::abs(cj[0]);
        for (std::int64_t i = 1; i < modes.rows(); ++i) {
            const double a = std::abs(cj[i]);
            if (a > best) {
                best = a;
                arg = i;
            }
        }
        if (cj[arg] < 0.0) {
            for (std::int64_t i = 0; i < modes.rows(); ++i) cj[i] = -cj[i];
        }
    }
}

} // namespace detail

/// Computes the rank-r POD basis of an already mean-centered snapshot matrix
/// via the Gram-matrix route: the eigendecomposition runs on the smaller of
/// X'X and XX'. The caller supplies the mean it subtracted (recorded in the
/// basis so downstream stages can un-center).
inline PodBasis pod_basis(const SnapshotMatrix& centered, std::int64_t r,
                          Vector train_mean = {}) {
    const std::int64_t m = centered.m();
    const std::int64_t n = centered.n();
    if (r < 1 || r > std::min(m, n)) {
        throw std::invalid_argument("pod_basis: rank " + std::to_string(r) +
                                    " out of range for " + std::to_string(m) + "x" +
                                    std::to_string(n) + " data");
    }
    if (train_mean.empty()) train_mean.assign(static_cast<std::size_t>(m), 0.0);
    if (static_cast<std::int64_t>(train_mean.size()) != m) {
        throw std::invalid_argument("pod_basis: train_mean length mismatch");
    }

    const Matrix& x = centered.values;
    PodBasis basis;
    basis.train_mean = std::move(train_mean);
    basis.singular_values.resize(static_cast<std::size_t>(r));

    // The Gram route squares the spectrum, so its trustworthy dynamic range
    // is about sqrt(machine eps); eigenvalues below 1e-12 of the lead are
    // numerically indistinguishable from rank deficiency.
    constexpr double kRankGuard = 1e-12;

    if (n <= m) {
        const EigResult eig = jacobi_symmetric_eig(gram(x)); // X'X, n x n
        const double lead = std::max(eig.values.front(), 0.0);
        basis.modes = Matrix(m, r);
        for (std::int64_t i = 0; i < r; ++i) {
            const double lambda = std::max(eig.values[static_cast<std::size_t>(i)], 0.0);
            const double sv = std::sqrt(lambda);
            if (lambda <= lead * kRankGuard) {
                throw std::runtime_error("pod_basis: requested rank " + std::to_string(r) +
                                         " exceeds numerical rank " + std::to_string(i));
            }
            basis.singular_values[static_cast<std::size_t>(i)] = sv;
            const double* vi = eig.vectors.col(i);
            double* mi = basis.modes.col(i);
            for (std::int64_t j = 0; j < n; ++j) {
                const double coef = vi[j] / sv;
                if (coef == 0.0) continue;
                const double* xj = x.col(j);
                for (std::int64_t k = 0; k < m; ++k) mi[k] += coef * xj[k];
            }
        }
        // The Gram route loses a little orthogonality for small sigma; one
        // MGS pass restores the 1e-8 contract without disturbing the span.
        orthonormalize_columns(basis.modes, "pod_basis");
    } else {
        const EigResult eig = jacobi_symmetric_eig(gram(transpose(x))); // XX', m x m
        const double lead = std::max(eig.values.front(), 0.0);
        basis.modes = Matrix(m, r);
        for (std::int64_t i = 0; i < r; ++i) {
            const double lambda = std::max(eig.values[static_cast<std::size_t>(i)], 0.0);
            const double sv = std::sqrt(lambda);
            if (lambda <= lead * kRankGuard) {
                throw std::runtime_error("pod_basis: requested rank " + std::to_string(r) +
                                         " exceeds numerical rank " + std::to_string(i));
            }
            basis.singular_values[static_cast<std::size_t>(i)] = sv;
            const double* vi = eig.vectors.col(i);
            std::copy(vi, vi + m, basis.modes.col(i));
        }
    }

    detail::fix_mode_signs(basis.modes);
    return basis;
}

/// Gappy-POD coefficient fit. Condition estimate of the sensed-mode matrix
/// is carried along; a value above 1e12 flags the fit as ill-conditioned
/// (the usual silent failure mode of near-collinear sensor rows).
struct Coefficients {
    Vector a;
    double condition = 0.0;
    bool ill_conditioned = false;
};

inline constexpr double kIllConditionedThreshold = 1e12;

/// Solves Phi*Psi_r a = s: the exact inverse when n = r, least squares when
/// n > r.
inline Coefficients fit_coefficients(const PodBasis& basis, const SensorSet& sensors,
                                     const Vector& s) {
    const std::int64_t r = basis.rank();
    const std::int64_t n = sensors.n();
    if (sensors.m != basis.m()) {
        throw std::invalid_argument("fit_coefficients: sensor domain " +
                                    std::to_string(sensors.m) + " does not match basis rows " +
                                    std::to_string(basis.m()));
    }
    if (n < r) {
        throw std::invalid_argument("fit_coefficients: " + std::to_string(n) +
                                    " measurements cannot determine " + std::to_string(r) +
                                    " coefficients");
    }
    if (static_cast<std::int64_t>(s.size()) != n) {
        throw std::invalid_argument("fit_coefficients: measurement length mismatch");
    }

    Matrix sensed(n, r);
    for (std::int64_t j = 0; j < r; ++j) {
        const double* mj = basis.modes.col(j);
        double* cj = sensed.col(j);
        for (std::int64_t i = 0; i < n; ++i) {
            cj[i] = mj[sensors.indices[static_cast<std::size_t>(i)]];
        }
    }

    const Vector sv = singular_values(sensed);
    if (sv.front() <= 0.0 || sv.back() <= sv.front() * 1e-14) {
        throw std::runtime_error("fit_coefficients: sensed mode matrix is singular");
    }

    Coefficients fit;
    fit.condition = sv.front() / sv.back();
    fit.ill_conditioned = fit.condition > kIllConditionedThreshold;
    fit.a = householder_lstsq(std::move(sensed), s);
    return fit;
}

/// x_hat = Psi_r a, plus the training mean on request.
inline Vector reconstruct(const PodBasis& basis, const Vector& a, bool add_mean) {
    if (static_cast<std::int64_t>(a.size()) != basis.rank()) {
        throw std::invalid_argument("reconstruct: coefficient length " + std::to_string(a.size()) +
                                    " does not match basis rank " + std::to_string(basis.rank()));
    }
    Vector x = matvec(basis.modes, a);
    if (add_mean) {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += basis.train_mean[i];
    }
    return x;
}

/// Basis persistence: raw float64 blob [modes | singular_values | train_mean]
/// plus a JSON sidecar, so placement and decoder stages can run as separate
/// CLI invocations.
inline void save_basis(const PodBasis& basis, const std::string& path) {
    std::vector<double> blob;
    blob.reserve(basis.modes.data().size() + basis.singular_values.size() +
                 basis.train_mean.size());
    blob.insert(blob.end(), basis.modes.data().begin(), basis.modes.data().end());
    blob.insert(blob.end(), basis.singular_values.begin(), basis.singular_values.end());
    blob.insert(blob.end(), basis.train_mean.begin(), basis.train_mean.end());
    write_f64(path, blob);

    json side;
    side["m"] = basis.m();
    side["r"] = basis.rank();
    side["singular_values"] = basis.singular_values;
    side["fingerprint"] = basis_fingerprint(basis);
    write_json(path + ".json", side);
}

inline PodBasis load_basis(const std::string& path) {
    const json side = read_json(path + ".json");
    require_keys(side, {"m", "r", "singular_values", "fingerprint"}, path + ".json");
    const std::int64_t m = side.at("m").get<std::int64_t>();
    const std::int64_t r = side.at("r").get<std::int64_t>();
    const std::vector<double> blob = read_f64(path);
    if (static_cast<std::int64_t>(blob.size()) != m * r + r + m) {
        throw std::runtime_error(path + ": basis blob size does not match sidecar dimensions");
    }

    PodBasis basis;
    basis.modes = Matrix(m, r);
    std::copy(blob.begin(), blob.begin() + m * r, basis.modes.data().begin());
    basis.singular_values.assign(blob.begin() + m * r, blob.begin() + m * r + r);
    basis.train_mean.assign(blob.begin() + m * r + r, blob.end());
    return basis;
}

} // namespace sensekit
