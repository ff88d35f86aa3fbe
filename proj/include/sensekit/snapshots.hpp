#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sensekit/io.hpp"
#include "sensekit/linalg.hpp"
#include "sensekit/matrix.hpp"
#include "sensekit/rng.hpp"

namespace sensekit {

/// Column-stacked state snapshots. When a validity mask has been applied the
/// matrix holds only the valid (compacted) rows and `row_map` records where
/// each compacted row lives in the original grid.
struct SnapshotMatrix {
    Matrix values;                        // m x N
    std::vector<std::uint8_t> valid_mask; // length m_raw; empty = no mask
    std::vector<std::int64_t> row_map;    // length m, strictly increasing; empty = identity
    std::int64_t grid_rows = 0;           // original field shape, 0 = unknown
    std::int64_t grid_cols = 0;

    std::int64_t m() const { return values.rows(); }
    std::int64_t n() const { return values.cols(); }
};

struct NoiseSpec {
    double psnr_db = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;
};

enum class SplitStrategy { random, leading };

struct SplitSpec {
    std::int64_t train_count = 0;
    std::uint64_t seed = 0;
    SplitStrategy strategy = SplitStrategy::random;
};

enum class SnapshotFormat { csv, raw_f64 };

namespace detail {

inline double parse_cell(const std::string& cell, std::size_t row, std::size_t col,
                         const std::string& path) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t' || *(end - 1) == '\r')) --end;
    double value = 0.0;
    auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc() || res.ptr != end || begin == end) {
        throw std::runtime_error(path + ": parse error at row " + std::to_string(row + 1) +
                                 ", column " + std::to_string(col + 1));
    }
    if (!std::isfinite(value)) {
        throw std::runtime_error(path + ": non-finite value at row " + std::to_string(row + 1) +
                                 ", column " + std::to_string(col + 1));
    }
    return value;
}

inline std::string sidecar_path(const std::string& path) { return path + ".json"; }

inline std::vector<std::uint8_t> read_mask_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw std::runtime_error("cannot open mask file: " + path);
    const std::streamsize bytes = in.tellg();
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(bytes));
    in.seekg(0);
    in.read(reinterpret_cast<char*>(mask.data()), bytes);
    if (!in) throw std::runtime_error("read failed: " + path);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i] > 1) {
            throw std::runtime_error(path + ": mask byte at offset " + std::to_string(i) +
                                     " is not 0 or 1");
        }
    }
    return mask;
}

inline std::vector<std::int64_t> row_map_from_mask(const std::vector<std::uint8_t>& mask) {
    std::vector<std::int64_t> map;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) map.push_back(static_cast<std::int64_t>(i));
    }
    return map;
}

} // namespace detail

/// Rows are state entries, columns are snapshots. CSV is parsed strictly:
/// ragged rows and non-finite entries are errors that name the offending
/// row/column.
inline SnapshotMatrix load_csv(const std::string& path) {
    const std::string text = read_text(path);
    std::vector<std::vector<double>> rows;
    std::size_t expected_cols = 0;

    std::size_t pos = 0;
    std::size_t row_idx = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string line = text.substr(pos, eol - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        pos = eol + 1;
        if (line.empty()) continue;

        std::vector<double> row;
        std::size_t cell_start = 0;
        std::size_t col_idx = 0;
        while (true) {
            std::size_t comma = line.find(',', cell_start);
            const std::string cell = line.substr(
                cell_start, comma == std::string::npos ? std::string::npos : comma - cell_start);
            row.push_back(detail::parse_cell(cell, row_idx, col_idx, path));
            ++col_idx;
            if (comma == std::string::npos) break;
            cell_start = comma + 1;
        }
        if (expected_cols == 0) {
            expected_cols = row.size();
        } else if (row.size() != expected_cols) {
            throw std::runtime_error(path + ": ragged row " + std::to_string(row_idx + 1) +
                                     " has " + std::to_string(row.size()) + " cells, expected " +
                                     std::to_string(expected_cols));
        }
        rows.push_back(std::move(row));
        ++row_idx;
    }
    if (rows.empty()) throw std::runtime_error(path + ": parse error, file holds no data");

    SnapshotMatrix x;
    x.values = Matrix(static_cast<std::int64_t>(rows.size()),
                      static_cast<std::int64_t>(expected_cols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < expected_cols; ++j) {
            x.values(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j)) = rows[i][j];
        }
    }
    return x;
}

/// Raw little-endian float64 in column-major order plus a JSON sidecar
/// ("<path>.json") carrying {"m", "n", "grid_shape"?, "mask_path"?}.
inline SnapshotMatrix load_raw_f64(const std::string& path) {
    const json side = read_json(detail::sidecar_path(path));
    require_keys(side, {"m", "n", "layout", "grid_shape", "mask_path"},
                 detail::sidecar_path(path));
    if (!side.contains("m") || !side.contains("n")) {
        throw std::runtime_error(detail::sidecar_path(path) + ": sidecar must declare m and n");
    }
    const std::int64_t m = side["m"].get<std::int64_t>();
    const std::int64_t n = side["n"].get<std::int64_t>();
    if (m < 1 || n < 1) throw std::runtime_error(path + ": m and n must be positive");

    std::vector<double> values = read_f64(path);
    if (static_cast<std::int64_t>(values.size()) != m * n) {
        throw std::runtime_error(path + ": holds " + std::to_string(values.size()) +
                                 " values, sidecar declares " + std::to_string(m * n));
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw std::runtime_error(path + ": non-finite value at row " +
                                     std::to_string(i % static_cast<std::size_t>(m) + 1) +
                                     ", column " +
                                     std::to_string(i / static_cast<std::size_t>(m) + 1));
        }
    }

    SnapshotMatrix x;
    x.values = Matrix(m, n);
    x.values.data() = std::move(values);
    if (side.contains("grid_shape")) {
        x.grid_rows = side["grid_shape"][0].get<std::int64_t>();
        x.grid_cols = side["grid_shape"][1].get<std::int64_t>();
    }
    if (side.contains("mask_path")) {
        const auto dir = std::filesystem::path(path).parent_path();
        const std::string mask_path = (dir / side["mask_path"].get<std::string>()).string();
        x.valid_mask = detail::read_mask_file(mask_path);
        x.row_map = detail::row_map_from_mask(x.valid_mask);
        if (static_cast<std::int64_t>(x.row_map.size()) != m) {
            throw std::runtime_error(path + ": mask keeps " + std::to_string(x.row_map.size()) +
                                     " rows but matrix has " + std::to_string(m));
        }
    }
    return x;
}

inline SnapshotMatrix load_matrix(const std::string& path, SnapshotFormat format) {
    return format == SnapshotFormat::csv ? load_csv(path) : load_raw_f64(path);
}

inline void save_matrix(const SnapshotMatrix& x, const std::string& path, SnapshotFormat format) {
    if (format == SnapshotFormat::csv) {
        std::string out;
        out.reserve(static_cast<std::size_t>(x.m() * x.n()) * 12);
        for (std::int64_t i = 0; i < x.m(); ++i) {
            for (std::int64_t j = 0; j < x.n(); ++j) {
                if (j) out += ',';
                out += format_double(x.values(i, j));
            }
            out += '\n';
        }
        write_text(path, out);
        return;
    }
    write_f64(path, x.values.data());
    json side;
    side["m"] = x.m();
    side["n"] = x.n();
    side["layout"] = "column-major";
    if (x.grid_rows > 0) side["grid_shape"] = {x.grid_rows, x.grid_cols};
    if (!x.valid_mask.empty()) {
        const std::string mask_name = std::filesystem::path(path).filename().string() + ".mask";
        const auto dir = std::filesystem::path(path).parent_path();
        std::ofstream mask_out((dir / mask_name).string(), std::ios::binary | std::ios::trunc);
        mask_out.write(reinterpret_cast<const char*>(x.valid_mask.data()),
                       static_cast<std::streamsize>(x.valid_mask.size()));
        if (!mask_out) throw std::runtime_error("write failed: " + (dir / mask_name).string());
        side["mask_path"] = mask_name;
    }
    write_json(detail::sidecar_path(path), side);
}

/// Drops rows where the mask is false. All downstream algorithms run on the
/// compacted state; `row_map` lets renderers scatter results back onto the
/// original grid.
inline SnapshotMatrix apply_valid_mask(const SnapshotMatrix& x,
                                       const std::vector<std::uint8_t>& mask) {
    if (!x.row_map.empty()) {
        throw std::invalid_argument("apply_valid_mask: matrix is already masked");
    }
    if (static_cast<std::int64_t>(mask.size()) != x.m()) {
        throw std::invalid_argument("apply_valid_mask: mask length " +
                                    std::to_string(mask.size()) + " does not match row count " +
                                    std::to_string(x.m()));
    }
    const std::vector<std::int64_t> map = detail::row_map_from_mask(mask);
    if (map.empty()) throw std::invalid_argument("apply_valid_mask: mask keeps no rows");

    SnapshotMatrix out;
    out.values = Matrix(static_cast<std::int64_t>(map.size()), x.n());
    for (std::int64_t j = 0; j < x.n(); ++j) {
        const double* src = x.values.col(j);
        double* dst = out.values.col(j);
        for (std::size_t i = 0; i < map.size(); ++i) dst[i] = src[map[i]];
    }
    out.valid_mask = mask;
    out.row_map = map;
    out.grid_rows = x.grid_rows;
    out.grid_cols = x.grid_cols;
    return out;
}

/// Scatters a compacted state vector back to the original row space,
/// filling invalid cells with `fill`.
inline Vector expand_by_row_map(const Vector& compacted, const std::vector<std::int64_t>& row_map,
                                std::int64_t m_raw, double fill = 0.0) {
    if (row_map.empty()) {
        if (static_cast<std::int64_t>(compacted.size()) != m_raw) {
            throw std::invalid_argument("expand_by_row_map: length mismatch");
        }
        return compacted;
    }
    if (row_map.size() != compacted.size()) {
        throw std::invalid_argument("expand_by_row_map: row_map length mismatch");
    }
    Vector full(static_cast<std::size_t>(m_raw), fill);
    for (std::size_t i = 0; i < row_map.size(); ++i) {
        full[static_cast<std::size_t>(row_map[i])] = compacted[i];
    }
    return full;
}

struct CenterResult {
    SnapshotMatrix centered;
    Vector mean;
};

inline CenterResult mean_center(const SnapshotMatrix& x) {
    CenterResult res;
    res.mean.assign(static_cast<std::size_t>(x.m()), 0.0);
    for (std::int64_t j = 0; j < x.n(); ++j) {
        const double* cj = x.values.col(j);
        for (std::int64_t i = 0; i < x.m(); ++i) res.mean[static_cast<std::size_t>(i)] += cj[i];
    }
    const double inv_n = 1.0 / static_cast<double>(x.n());
    for (double& v : res.mean) v *= inv_n;

    res.centered = x;
    for (std::int64_t j = 0; j < x.n(); ++j) {
        double* cj = res.centered.values.col(j);
        for (std::int64_t i = 0; i < x.m(); ++i) cj[i] -= res.mean[static_cast<std::size_t>(i)];
    }
    return res;
}

/// Adds i.i.d. Gaussian noise with sigma = max|x| * 10^(-psnr/20). Infinite
/// PSNR returns the input untouched.
inline SnapshotMatrix add_noise(const SnapshotMatrix& x, const NoiseSpec& spec) {
    if (!(spec.psnr_db > 0.0)) {
        throw std::invalid_argument("add_noise: psnr_db must be positive");
    }
    if (std::isinf(spec.psnr_db)) return x;

    const double sigma = max_abs(x.values) * std::pow(10.0, -spec.psnr_db / 20.0);
    SnapshotMatrix out = x;
    if (sigma == 0.0) return out;
    Rng rng(spec.seed);
    for (double& v : out.values.data()) v += sigma * rng.gaussian();
    return out;
}

struct SplitResult {
    SnapshotMatrix train;
    SnapshotMatrix test;
};

inline SplitResult split(const SnapshotMatrix& x, const SplitSpec& spec) {
    if (spec.train_count < 1 || spec.train_count >= x.n()) {
        throw std::invalid_argument("split: train_count " + std::to_string(spec.train_count) +
                                    " out of range for " + std::to_string(x.n()) + " columns");
    }
    std::vector<std::int64_t> train_idx;
    std::vector<std::int64_t> test_idx;
    if (spec.strategy == SplitStrategy::leading) {
        for (std::int64_t j = 0; j < x.n(); ++j) {
            (j < spec.train_count ? train_idx : test_idx).push_back(j);
        }
    } else {
        std::vector<std::int64_t> perm(static_cast<std::size_t>(x.n()));
        std::iota(perm.begin(), perm.end(), 0);
        Rng rng(spec.seed);
        rng.shuffle(perm);
        train_idx.assign(perm.begin(), perm.begin() + spec.train_count);
        test_idx.assign(perm.begin() + spec.train_count, perm.end());
        std::sort(train_idx.begin(), train_idx.end());
        std::sort(test_idx.begin(), test_idx.end());
    }

    auto gather = [&](const std::vector<std::int64_t>& idx) {
        SnapshotMatrix out;
        out.values = Matrix(x.m(), static_cast<std::int64_t>(idx.size()));
        for (std::size_t j = 0; j < idx.size(); ++j) {
            const double* src = x.values.col(idx[j]);
            std::copy(src, src + x.m(), out.values.col(static_cast<std::int64_t>(j)));
        }
        out.valid_mask = x.valid_mask;
        out.row_map = x.row_map;
        out.grid_rows = x.grid_rows;
        out.grid_cols = x.grid_cols;
        return out;
    };
    return {gather(train_idx), gather(test_idx)};
}

enum class SyntheticKind { traveling_wave, rank_r_random, vortex_like };

struct SyntheticSpec {
    SyntheticKind kind = SyntheticKind::traveling_wave;
    std::int64_t grid_rows = 0;
    std::int64_t grid_cols = 0;
    std::int64_t state_dim = 0; // rank_r_random without a grid
    std::int64_t snapshots = 0;
    std::int64_t waves = 1;            // traveling_wave
    std::vector<double> amplitudes;    // traveling_wave; default 2^-j
    std::vector<double> omega;         // traveling_wave frequencies; default distinct integers
    double time_horizon = 1.0;         // traveling_wave: snapshots span [0, horizon)
    bool random_times = false;         // draw sample times uniformly instead of a ramp
    std::int64_t rank = 1;             // rank_r_random
    std::vector<double> sigma;         // rank_r_random; default 2^-i
    std::int64_t blobs = 4;            // vortex_like
    double blob_width = 0.08;          // vortex_like
    std::uint64_t seed = 0;
};

namespace detail {

inline SnapshotMatrix gen_traveling_wave(const SyntheticSpec& spec) {
    const std::int64_t R = spec.grid_rows;
    const std::int64_t C = spec.grid_cols;
    const std::int64_t N = spec.snapshots;
    if (R < 1 || C < 1) throw std::invalid_argument("gen_synthetic: traveling_wave needs a grid");
    if (spec.waves < 1) throw std::invalid_argument("gen_synthetic: waves must be positive");

    if (spec.waves > 18) {
        throw std::invalid_argument("gen_synthetic: at most 18 distinct wavevectors available");
    }
    if (!spec.omega.empty() &&
        static_cast<std::int64_t>(spec.omega.size()) != spec.waves) {
        throw std::invalid_argument("gen_synthetic: omega list must match the wave count");
    }
    if (!(spec.time_horizon > 0.0)) {
        throw std::invalid_argument("gen_synthetic: time_horizon must be positive");
    }

    Rng rng(spec.seed);
    struct Wave {
        double amp, kr, kc, omega, phase;
    };
    std::vector<Wave> waves;
    for (std::int64_t j = 0; j < spec.waves; ++j) {
        Wave w;
        w.amp = j < static_cast<std::int64_t>(spec.amplitudes.size())
                    ? spec.amplitudes[static_cast<std::size_t>(j)]
                    : std::pow(2.0, -static_cast<double>(j));
        // The rank-2r claim needs both distinct wavevectors (spatial side)
        // and distinct frequencies (temporal side); a collision on either
        // collapses two waves into one sin/cos pair.
        while (true) {
            w.kr = static_cast<double>(1 + rng.uniform_below(3));
            w.kc = static_cast<double>(1 + rng.uniform_below(3)) *
                   (rng.uniform01() < 0.5 ? 1.0 : -1.0);
            bool fresh = true;
            for (const Wave& prev : waves) fresh = fresh && (prev.kr != w.kr || prev.kc != w.kc);
            if (fresh) break;
        }
        if (!spec.omega.empty()) {
            w.omega = spec.omega[static_cast<std::size_t>(j)];
        } else {
            const std::uint64_t omega_range =
                std::max<std::uint64_t>(3, static_cast<std::uint64_t>(spec.waves));
            while (true) {
                w.omega = static_cast<double>(1 + rng.uniform_below(omega_range));
                bool fresh = true;
                for (const Wave& prev : waves) fresh = fresh && prev.omega != w.omega;
                if (fresh) break;
            }
        }
        w.phase = 6.283185307179586 * rng.uniform01();
        waves.push_back(w);
    }

    // Sample times: a uniform ramp over the horizon, or unsynchronized
    // random observation instants (with incommensurate frequencies the
    // snapshots then cover the whole phase torus rather than one orbit).
    std::vector<double> times(static_cast<std::size_t>(N));
    if (spec.random_times) {
        for (double& t : times) t = spec.time_horizon * rng.uniform01();
        std::sort(times.begin(), times.end());
    } else {
        for (std::int64_t k = 0; k < N; ++k) {
            times[static_cast<std::size_t>(k)] =
                spec.time_horizon * static_cast<double>(k) / static_cast<double>(N);
        }
    }

    SnapshotMatrix x;
    x.values = Matrix(R * C, N);
    x.grid_rows = R;
    x.grid_cols = C;
    const double two_pi = 6.283185307179586476925286766559;
    for (std::int64_t k = 0; k < N; ++k) {
        const double t = times[static_cast<std::size_t>(k)];
        double* colk = x.values.col(k);
        for (const Wave& w : waves) {
            const double time_phase = w.phase - two_pi * w.omega * t;
            for (std::int64_t r = 0; r < R; ++r) {
                const double row_phase =
                    two_pi * w.kr * static_cast<double>(r) / static_cast<double>(R) + time_phase;
                double* line = colk + r * C;
                for (std::int64_t c = 0; c < C; ++c) {
                    line[c] += w.amp * std::sin(row_phase + two_pi * w.kc *
                                                                static_cast<double>(c) /
                                                                static_cast<double>(C));
                }
            }
        }
    }
    return x;
}

inline SnapshotMatrix gen_rank_r_random(const SyntheticSpec& spec) {
    const std::int64_t m =
        spec.grid_rows > 0 ? spec.grid_rows * spec.grid_cols : spec.state_dim;
    const std::int64_t N = spec.snapshots;
    const std::int64_t r = spec.rank;
    if (m < 1) throw std::invalid_argument("gen_synthetic: rank_r_random needs state_dim or grid");
    if (r < 1 || r > std::min(m, N)) {
        throw std::invalid_argument("gen_synthetic: rank out of range");
    }

    Rng rng(spec.seed);
    Matrix left(m, r);
    for (double& v : left.data()) v = rng.gaussian();
    orthonormalize_columns(left, "gen_synthetic");
    Matrix right(N, r);
    for (double& v : right.data()) v = rng.gaussian();
    orthonormalize_columns(right, "gen_synthetic");

    Vector sv(static_cast<std::size_t>(r));
    for (std::int64_t i = 0; i < r; ++i) {
        sv[static_cast<std::size_t>(i)] = i < static_cast<std::int64_t>(spec.sigma.size())
                                              ? spec.sigma[static_cast<std::size_t>(i)]
                                              : std::pow(2.0, -static_cast<double>(i));
    }

    SnapshotMatrix x;
    x.values = Matrix(m, N);
    x.grid_rows = spec.grid_rows;
    x.grid_cols = spec.grid_cols;
    for (std::int64_t j = 0; j < N; ++j) {
        double* cj = x.values.col(j);
        for (std::int64_t i = 0; i < r; ++i) {
            const double coef = sv[static_cast<std::size_t>(i)] * right(j, i);
            const double* li = left.col(i);
            for (std::int64_t k = 0; k < m; ++k) cj[k] += coef * li[k];
        }
    }
    return x;
}

inline SnapshotMatrix gen_vortex_like(const SyntheticSpec& spec) {
    const std::int64_t R = spec.grid_rows;
    const std::int64_t C = spec.grid_cols;
    const std::int64_t N = spec.snapshots;
    if (R < 1 || C < 1) throw std::invalid_argument("gen_synthetic: vortex_like needs a grid");
    if (spec.blobs < 1) throw std::invalid_argument("gen_synthetic: blobs must be positive");
    if (!(spec.blob_width > 0.0)) {
        throw std::invalid_argument("gen_synthetic: blob_width must be positive");
    }

    Rng rng(spec.seed);
    struct Blob {
        double sign, cy, x0;
    };
    std::vector<Blob> blobs;
    for (std::int64_t b = 0; b < spec.blobs; ++b) {
        Blob blob;
        blob.sign = (b % 2 == 0) ? 1.0 : -1.0;
        blob.cy = (b % 2 == 0 ? 0.38 : 0.62) + 0.04 * (rng.uniform01() - 0.5);
        blob.x0 = (static_cast<double>(b) + rng.uniform01() * 0.3) /
                  static_cast<double>(spec.blobs);
        blobs.push_back(blob);
    }

    SnapshotMatrix x;
    x.values = Matrix(R * C, N);
    x.grid_rows = R;
    x.grid_cols = C;
    const double inv_2w2 = 1.0 / (2.0 * spec.blob_width * spec.blob_width);
    for (std::int64_t k = 0; k < N; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(N);
        double* colk = x.values.col(k);
        for (const Blob& blob : blobs) {
            const double cx = blob.x0 + t - std::floor(blob.x0 + t);
            for (std::int64_t r = 0; r < R; ++r) {
                const double dy = static_cast<double>(r) / static_cast<double>(R) - blob.cy;
                const double dy2 = dy * dy;
                double* line = colk + r * C;
                for (std::int64_t c = 0; c < C; ++c) {
                    double dx = std::abs(static_cast<double>(c) / static_cast<double>(C) - cx);
                    dx = std::min(dx, 1.0 - dx); // periodic in the advection direction
                    line[c] += blob.sign * std::exp(-(dx * dx + dy2) * inv_2w2);
                }
            }
        }
    }
    return x;
}

} // namespace detail

inline SnapshotMatrix gen_synthetic(const SyntheticSpec& spec) {
    if (spec.snapshots < 1) throw std::invalid_argument("gen_synthetic: snapshots must be positive");
    switch (spec.kind) {
        case SyntheticKind::traveling_wave: return detail::gen_traveling_wave(spec);
        case SyntheticKind::rank_r_random: return detail::gen_rank_r_random(spec);
        case SyntheticKind::vortex_like: return detail::gen_vortex_like(spec);
    }
    throw std::invalid_argument("gen_synthetic: unknown kind");
}

/// Renders one state vector as a binary PGM (P5) heatmap with linear min/max
/// scaling; the scale is recorded in a JSON sidecar. Cells outside the
/// row_map (masked) render mid-gray; sensor locations, when given, render as
/// white 3x3 blocks.
inline void write_pgm(const std::string& path, const Vector& field, std::int64_t grid_rows,
                      std::int64_t grid_cols, const std::vector<std::int64_t>& row_map = {},
                      const std::vector<std::int64_t>& sensors = {}) {
    if (grid_rows < 1 || grid_cols < 1) {
        throw std::invalid_argument("write_pgm: grid shape required");
    }
    const std::int64_t m_raw = grid_rows * grid_cols;
    if (row_map.empty() && static_cast<std::int64_t>(field.size()) != m_raw) {
        throw std::invalid_argument("write_pgm: field length does not match grid");
    }

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : field) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi - lo;

    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(m_raw), 128);
    auto shade = [&](double v) {
        if (span <= 0.0) return static_cast<std::uint8_t>(128);
        return static_cast<std::uint8_t>(std::lround(255.0 * (v - lo) / span));
    };
    if (row_map.empty()) {
        for (std::size_t i = 0; i < field.size(); ++i) pixels[i] = shade(field[i]);
    } else {
        for (std::size_t i = 0; i < row_map.size(); ++i) {
            pixels[static_cast<std::size_t>(row_map[i])] = shade(field[i]);
        }
    }

    for (std::int64_t s : sensors) {
        const std::int64_t orig = row_map.empty() ? s : row_map[static_cast<std::size_t>(s)];
        const std::int64_t r = orig / grid_cols;
        const std::int64_t c = orig % grid_cols;
        for (std::int64_t dr = -1; dr <= 1; ++dr) {
            for (std::int64_t dc = -1; dc <= 1; ++dc) {
                const std::int64_t rr = r + dr;
                const std::int64_t cc = c + dc;
                if (rr >= 0 && rr < grid_rows && cc >= 0 && cc < grid_cols) {
                    pixels[static_cast<std::size_t>(rr * grid_cols + cc)] = 255;
                }
            }
        }
    }

    std::string header = "P5\n" + std::to_string(grid_cols) + " " + std::to_string(grid_rows) +
                         "\n255\n";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << header;
    out.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
    if (!out) throw std::runtime_error("write failed: " + path);

    json side;
    side["min"] = lo;
    side["max"] = hi;
    write_json(path + ".json", side);
}

} // namespace sensekit
