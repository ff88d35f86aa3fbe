#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "sensekit/lowrank.hpp"
#include "sensekit/rng.hpp"
#include "sensekit/sensor_set.hpp"

namespace sensekit {

struct PivotResult {
    std::vector<std::int64_t> indices;
    Vector pivot_norms; // |r_ii| sequence, non-increasing
};

/// Column-pivoted QR of Psi_r' restricted to pivot selection: at each step
/// the residual column of maximal l2 norm is picked, then all remaining
/// columns are orthogonalized against it. Column norms are down-dated and
/// recomputed from scratch whenever the down-dated value drops below
/// sqrt(eps) of the value at the last recomputation, which avoids
/// cancellation. Ties (within 1e-12 relative) resolve to the lowest column
/// index, so the pivot order is platform independent.
inline PivotResult qr_pivot_details(const PodBasis& basis, std::int64_t n_sensors,
                                    bool allow_subrank = false) {
    const std::int64_t r = basis.rank();
    const std::int64_t m = basis.m();
    if (n_sensors != r && !(allow_subrank && n_sensors >= 1 && n_sensors < r)) {
        throw std::invalid_argument(
            "qr_pivots: sensor count " + std::to_string(n_sensors) +
            " must equal basis rank " + std::to_string(r) +
            " (pass allow_subrank for fewer sensors; the selection is ill-posed beyond rank)");
    }
    if (m < n_sensors) {
        throw std::invalid_argument("qr_pivots: more sensors requested than state entries");
    }

    // Work on A = Psi_r' whose columns are the candidate locations; column j
    // is row j of the mode matrix.
    Matrix work(r, m);
    for (std::int64_t i = 0; i < r; ++i) {
        const double* mode = basis.modes.col(i);
        for (std::int64_t j = 0; j < m; ++j) work(i, j) = mode[j];
    }

    Vector norms2(static_cast<std::size_t>(m));
    Vector ref_norms2(static_cast<std::size_t>(m)); // value at last exact recomputation
    for (std::int64_t j = 0; j < m; ++j) {
        const double* cj = work.col(j);
        double s = 0.0;
        for (std::int64_t i = 0; i < r; ++i) s += cj[i] * cj[i];
        norms2[static_cast<std::size_t>(j)] = s;
        ref_norms2[static_cast<std::size_t>(j)] = s;
    }

    std::vector<bool> used(static_cast<std::size_t>(m), false);
    PivotResult res;
    res.indices.reserve(static_cast<std::size_t>(n_sensors));
    res.pivot_norms.reserve(static_cast<std::size_t>(n_sensors));
    constexpr double tie_rel = 1e-12;

    for (std::int64_t step = 0; step < n_sensors; ++step) {
        double best = -1.0;
        for (std::int64_t j = 0; j < m; ++j) {
            if (!used[static_cast<std::size_t>(j)] && norms2[static_cast<std::size_t>(j)] > best) {
                best = norms2[static_cast<std::size_t>(j)];
            }
        }
        // norm >= best_norm*(1 - tie) in squared terms
        const double threshold = best * (1.0 - 2.0 * tie_rel);
        std::int64_t pivot = -1;
        for (std::int64_t j = 0; j < m; ++j) {
            if (!used[static_cast<std::size_t>(j)] &&
                norms2[static_cast<std::size_t>(j)] >= threshold) {
                pivot = j;
                break;
            }
        }
        if (pivot < 0 || !(best > 0.0)) {
            throw std::runtime_error("qr_pivots: residual columns vanished at step " +
                                     std::to_string(step) + " (basis rows are rank deficient)");
        }

        used[static_cast<std::size_t>(pivot)] = true;
        res.indices.push_back(pivot);

        double* pc = work.col(pivot);
        double pivot_norm = 0.0;
        for (std::int64_t i = 0; i < r; ++i) pivot_norm += pc[i] * pc[i];
        pivot_norm = std::sqrt(pivot_norm);
        res.pivot_norms.push_back(pivot_norm);
        for (std::int64_t i = 0; i < r; ++i) pc[i] /= pivot_norm;

        for (std::int64_t j = 0; j < m; ++j) {
            if (used[static_cast<std::size_t>(j)]) continue;
            double* cj = work.col(j);
            double dot = 0.0;
            for (std::int64_t i = 0; i < r; ++i) dot += pc[i] * cj[i];
            for (std::int64_t i = 0; i < r; ++i) cj[i] -= dot * pc[i];

            double& nj = norms2[static_cast<std::size_t>(j)];
            nj -= dot * dot;
            if (nj < ref_norms2[static_cast<std::size_t>(j)] *
                         std::numeric_limits<double>::epsilon()) {
                double s = 0.0;
                for (std::int64_t i = 0; i < r; ++i) s += cj[i] * cj[i];
                nj = s;
                ref_norms2[static_cast<std::size_t>(j)] = s;
            } else if (nj < 0.0) {
                nj = 0.0;
            }
        }
    }
    return res;
}

/// Greedy QR sensor placement over the basis rows (the Q-DEIM extension).
/// The greedy argument assumes n = r; n < r needs an explicit opt-in.
inline SensorSet qr_pivots(const PodBasis& basis, std::int64_t n_sensors,
                           bool allow_subrank = false) {
    PivotResult piv = qr_pivot_details(basis, n_sensors, allow_subrank);
    SensorSet s;
    s.indices = std::move(piv.indices);
    s.m = basis.m();
    s.method = PlacementMethod::qr_pivot;
    s.fingerprint = basis_fingerprint(basis);
    return s;
}

/// n distinct uniform draws without replacement, skipping forbidden indices.
inline SensorSet random_sensors(std::int64_t m, std::int64_t n, std::uint64_t seed,
                                const std::vector<std::int64_t>& forbidden = {}) {
    if (m < 1) throw std::invalid_argument("random_sensors: state dimension must be positive");
    std::vector<std::uint8_t> blocked(static_cast<std::size_t>(m), 0);
    for (std::int64_t f : forbidden) {
        if (f < 0 || f >= m) throw std::invalid_argument("random_sensors: forbidden index out of range");
        blocked[static_cast<std::size_t>(f)] = 1;
    }
    std::vector<std::int64_t> allowed;
    allowed.reserve(static_cast<std::size_t>(m));
    for (std::int64_t i = 0; i < m; ++i) {
        if (!blocked[static_cast<std::size_t>(i)]) allowed.push_back(i);
    }
    if (n < 1 || n > static_cast<std::int64_t>(allowed.size())) {
        throw std::invalid_argument("random_sensors: cannot draw " + std::to_string(n) +
                                    " sensors from " + std::to_string(allowed.size()) +
                                    " allowed locations");
    }

    Rng rng(seed);
    SensorSet s;
    s.indices = rng.sample_without_replacement(std::move(allowed), static_cast<std::size_t>(n));
    s.m = m;
    s.method = PlacementMethod::random;
    s.seed = seed;
    return s;
}

} // namespace sensekit
