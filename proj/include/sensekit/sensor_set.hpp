#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sensekit/io.hpp"
#include "sensekit/matrix.hpp"

namespace sensekit {

enum class PlacementMethod { qr_pivot, random, pruned };

inline const char* to_string(PlacementMethod m) {
    switch (m) {
        case PlacementMethod::qr_pivot: return "qr_pivot";
        case PlacementMethod::random: return "random";
        case PlacementMethod::pruned: return "pruned";
    }
    return "?";
}

inline PlacementMethod placement_method_from_string(const std::string& s) {
    if (s == "qr_pivot") return PlacementMethod::qr_pivot;
    if (s == "random") return PlacementMethod::random;
    if (s == "pruned") return PlacementMethod::pruned;
    throw std::runtime_error("unknown placement method: " + s);
}

/// Ordered measurement locations. The order is meaningful: indices[i] is the
/// i-th greedy pick (qr_pivot) or i-th draw (random). The sensing matrix is
/// never materialized; sampling gathers these rows directly.
struct SensorSet {
    std::vector<std::int64_t> indices; // distinct, each in [0, m)
    std::int64_t m = 0;                // state dimension the indices refer to
    PlacementMethod method = PlacementMethod::random;
    std::uint64_t seed = 0;            // random draws
    std::string fingerprint;           // qr_pivot: basis fingerprint

    std::int64_t n() const { return static_cast<std::int64_t>(indices.size()); }

    void validate() const {
        std::vector<std::int64_t> sorted = indices;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            if (sorted[i] < 0 || sorted[i] >= m) {
                throw std::runtime_error("SensorSet: index out of range");
            }
            if (i > 0 && sorted[i] == sorted[i - 1]) {
                throw std::runtime_error("SensorSet: duplicate index");
            }
        }
    }
};

/// s_i = x[gamma_i], preserving sensor order.
inline Vector sample(const Vector& x, const SensorSet& sensors) {
    if (static_cast<std::int64_t>(x.size()) != sensors.m) {
        throw std::invalid_argument("sample: state length " + std::to_string(x.size()) +
                                    " does not match sensor domain " + std::to_string(sensors.m));
    }
    Vector s(sensors.indices.size());
    for (std::size_t i = 0; i < sensors.indices.size(); ++i) {
        s[i] = x[static_cast<std::size_t>(sensors.indices[i])];
    }
    return s;
}

/// Column-wise gather: rows of the result follow sensor order.
inline Matrix sample_columns(const Matrix& x, const SensorSet& sensors) {
    if (x.rows() != sensors.m) {
        throw std::invalid_argument("sample_columns: row count does not match sensor domain");
    }
    Matrix s(sensors.n(), x.cols());
    for (std::int64_t j = 0; j < x.cols(); ++j) {
        const double* src = x.col(j);
        double* dst = s.col(j);
        for (std::size_t i = 0; i < sensors.indices.size(); ++i) {
            dst[i] = src[sensors.indices[i]];
        }
    }
    return s;
}

inline json sensors_to_json(const SensorSet& s) {
    json j;
    j["indices"] = s.indices;
    j["m"] = s.m;
    j["method"] = to_string(s.method);
    j["seed"] = s.seed;
    if (!s.fingerprint.empty()) j["fingerprint"] = s.fingerprint;
    return j;
}

inline SensorSet sensors_from_json(const json& j, const std::string& context = "sensors") {
    require_keys(j, {"indices", "m", "method", "seed", "fingerprint"}, context);
    SensorSet s;
    s.indices = j.at("indices").get<std::vector<std::int64_t>>();
    s.m = j.at("m").get<std::int64_t>();
    s.method = placement_method_from_string(j.at("method").get<std::string>());
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("fingerprint")) s.fingerprint = j["fingerprint"].get<std::string>();
    s.validate();
    return s;
}

inline void save_sensors(const SensorSet& s, const std::string& path) {
    write_json(path, sensors_to_json(s));
}

inline SensorSet load_sensors(const std::string& path) {
    return sensors_from_json(read_json(path), path);
}

} // namespace sensekit
