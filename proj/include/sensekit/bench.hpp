#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "sensekit/lowrank.hpp"
#include "sensekit/placement.hpp"
#include "sensekit/sdn.hpp"
#include "sensekit/snapshots.hpp"

namespace sensekit {

enum class PipelineKind { q_sdn, r_sdn, p_sdn, q_pod };

inline const char* to_string(PipelineKind k) {
    switch (k) {
        case PipelineKind::q_sdn: return "q_sdn";
        case PipelineKind::r_sdn: return "r_sdn";
        case PipelineKind::p_sdn: return "p_sdn";
        case PipelineKind::q_pod: return "q_pod";
    }
    return "?";
}

inline PipelineKind pipeline_from_string(const std::string& s) {
    if (s == "q_sdn") return PipelineKind::q_sdn;
    if (s == "r_sdn") return PipelineKind::r_sdn;
    if (s == "p_sdn") return PipelineKind::p_sdn;
    if (s == "q_pod") return PipelineKind::q_pod;
    throw std::runtime_error("unknown pipeline: " + s);
}

enum class NoiseApply { both, train_only, test_only };

/// Sub-seed streams expanded from a trial's master seed. Pipelines sharing a
/// master seed therefore share the data split and noise draws, which makes
/// cross-pipeline comparisons paired.
namespace seed_stream {
inline constexpr std::uint64_t split = 1;
inline constexpr std::uint64_t noise_train = 2;
inline constexpr std::uint64_t noise_test = 3;
inline constexpr std::uint64_t placement = 4;
inline constexpr std::uint64_t init = 5;
inline constexpr std::uint64_t train = 6;
inline constexpr std::uint64_t pool = 7;
} // namespace seed_stream

struct PipelineSpec {
    PipelineKind kind = PipelineKind::q_pod;
    std::int64_t n_sensors = 0;
    std::int64_t rank_r = 0;              // q_pod only; must equal n_sensors
    std::vector<std::int64_t> arch;       // hidden layer sizes for the SDN kinds
    TrainConfig train;
    Act hidden_act = Act::relu;
    Act output_act = Act::linear;
    double noise_psnr = std::numeric_limits<double>::infinity();
    NoiseApply noise_apply = NoiseApply::both;
    PruneSchedule prune;                  // p_sdn; stop_at is overridden with n_sensors
    std::int64_t candidate_pool = 0;      // p_sdn; 0 = every state index
    std::uint64_t seed = 0;               // master seed of the trial

    void validate() const {
        if (n_sensors < 1) throw std::invalid_argument("PipelineSpec: n_sensors must be >= 1");
        if (kind == PipelineKind::q_pod) {
            if (rank_r != n_sensors) {
                throw std::invalid_argument(
                    "PipelineSpec: q_pod requires rank_r = n_sensors (got rank_r = " +
                    std::to_string(rank_r) + ", n_sensors = " + std::to_string(n_sensors) + ")");
            }
        } else if (arch.empty()) {
            throw std::invalid_argument("PipelineSpec: SDN pipelines need a hidden architecture");
        }
        if (!(noise_psnr > 0.0)) {
            throw std::invalid_argument("PipelineSpec: noise_psnr must be positive");
        }
        train.validate();
    }
};

inline json pipeline_spec_to_json(const PipelineSpec& s) {
    json j;
    j["kind"] = to_string(s.kind);
    j["n_sensors"] = s.n_sensors;
    j["rank_r"] = s.rank_r;
    j["arch"] = s.arch;
    j["learning_rate"] = s.train.learning_rate;
    j["max_epochs"] = s.train.max_epochs;
    j["patience"] = s.train.patience;
    j["batch_size"] = s.train.batch_size;
    j["val_fraction"] = s.train.val_fraction;
    j["init"] = to_string(s.train.init);
    j["hidden_act"] = to_string(s.hidden_act);
    j["output_act"] = to_string(s.output_act);
    j["noise_psnr"] = std::isinf(s.noise_psnr) ? json() : json(s.noise_psnr);
    j["candidate_pool"] = s.candidate_pool;
    j["seed"] = s.seed;
    return j;
}

inline std::string spec_fingerprint(const PipelineSpec& s) {
    const std::string dump = pipeline_spec_to_json(s).dump();
    return hex64(fnv1a64(dump.data(), dump.size()));
}

struct TrialReport {
    std::string fingerprint;
    PipelineKind kind = PipelineKind::q_pod;
    std::int64_t n_sensors = 0;
    std::uint64_t seed = 0;
    SensorSet sensors;
    double relative_error = std::numeric_limits<double>::quiet_NaN();
    Vector per_sample_errors;
    Vector example_truth; // first test column and its reconstruction, for rendering
    Vector example_recon;
    double wall_time_s = 0.0;
    bool ok = false;
    std::string error;
};

struct RelativeError {
    double mean = 0.0;
    Vector per_sample;
};

/// Mean relative l2 error over mean-subtracted test states:
/// RE = (1/N) sum_k ||xhat_k - x_k|| / ||x_k||, with both arguments centered
/// by the training mean.
inline RelativeError relative_error(const Matrix& x_hat, const Matrix& x_test,
                                    const Vector& train_mean) {
    if (x_hat.rows() != x_test.rows() || x_hat.cols() != x_test.cols()) {
        throw std::invalid_argument("relative_error: shape mismatch");
    }
    if (static_cast<std::int64_t>(train_mean.size()) != x_test.rows()) {
        throw std::invalid_argument("relative_error: mean length mismatch");
    }
    RelativeError re;
    re.per_sample.resize(static_cast<std::size_t>(x_test.cols()));
    for (std::int64_t k = 0; k < x_test.cols(); ++k) {
        const double* hk = x_hat.col(k);
        const double* xk = x_test.col(k);
        double num = 0.0;
        double den = 0.0;
        for (std::int64_t i = 0; i < x_test.rows(); ++i) {
            const double h = hk[i] - train_mean[static_cast<std::size_t>(i)];
            const double x = xk[i] - train_mean[static_cast<std::size_t>(i)];
            num += (h - x) * (h - x);
            den += x * x;
        }
        if (den == 0.0) {
            throw std::runtime_error("relative_error: test column " + std::to_string(k) +
                                     " equals the training mean (zero denominator)");
        }
        re.per_sample[static_cast<std::size_t>(k)] = std::sqrt(num) / std::sqrt(den);
        re.mean += re.per_sample[static_cast<std::size_t>(k)];
    }
    re.mean /= static_cast<double>(x_test.cols());
    return re;
}

namespace detail {

inline Matrix center_columns(const Matrix& x, const Vector& mean) {
    Matrix out = x;
    for (std::int64_t j = 0; j < out.cols(); ++j) {
        double* cj = out.col(j);
        for (std::int64_t i = 0; i < out.rows(); ++i) cj[i] -= mean[static_cast<std::size_t>(i)];
    }
    return out;
}

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string(name) + ": " + e.what());
    }
}

} // namespace detail

/// Runs one pipeline end to end on a pre-split dataset and reports the
/// mean relative error over the test columns. All randomness expands
/// from spec.seed via fixed sub-streams.
inline TrialReport run_trial(const PipelineSpec& spec, const SnapshotMatrix& train_data,
                             const SnapshotMatrix& test_data) {
    spec.validate();
    if (train_data.m() != test_data.m()) {
        throw std::invalid_argument("run_trial: train/test state dimensions differ");
    }
    const auto t0 = std::chrono::steady_clock::now();

    TrialReport report;
    report.fingerprint = spec_fingerprint(spec);
    report.kind = spec.kind;
    report.n_sensors = spec.n_sensors;
    report.seed = spec.seed;

    const std::int64_t m = train_data.m();
    const std::int64_t n = spec.n_sensors;

    SnapshotMatrix noisy_train = train_data;
    SnapshotMatrix noisy_test = test_data;
    if (!std::isinf(spec.noise_psnr)) {
        detail::stage("noise", [&] {
            if (spec.noise_apply != NoiseApply::test_only) {
                noisy_train = add_noise(train_data,
                                        {spec.noise_psnr, derive_seed(spec.seed, seed_stream::noise_train)});
            }
            if (spec.noise_apply != NoiseApply::train_only) {
                noisy_test = add_noise(test_data,
                                       {spec.noise_psnr, derive_seed(spec.seed, seed_stream::noise_test)});
            }
            return 0;
        });
    }

    const CenterResult centered = detail::stage("center", [&] { return mean_center(noisy_train); });
    const Vector& mean = centered.mean;

    Matrix x_hat(m, noisy_test.n());

    if (spec.kind == PipelineKind::q_pod) {
        const PodBasis basis = detail::stage(
            "pod_basis", [&] { return pod_basis(centered.centered, spec.rank_r, mean); });
        report.sensors = detail::stage("placement", [&] { return qr_pivots(basis, n); });
        detail::stage("reconstruct", [&] {
            for (std::int64_t j = 0; j < noisy_test.n(); ++j) {
                Vector s = sample(noisy_test.values.col_copy(j), report.sensors);
                for (std::size_t i = 0; i < s.size(); ++i) {
                    s[i] -= mean[static_cast<std::size_t>(report.sensors.indices[i])];
                }
                const Coefficients fit = fit_coefficients(basis, report.sensors, s);
                x_hat.set_col(j, reconstruct(basis, fit.a, true));
            }
            return 0;
        });
    } else if (spec.kind == PipelineKind::p_sdn) {
        std::vector<std::int64_t> candidates;
        detail::stage("candidate_pool", [&] {
            if (spec.candidate_pool > 0 && spec.candidate_pool < m) {
                candidates = random_sensors(m, spec.candidate_pool,
                                            derive_seed(spec.seed, seed_stream::pool))
                                 .indices;
                std::sort(candidates.begin(), candidates.end());
            } else {
                candidates.resize(static_cast<std::size_t>(m));
                std::iota(candidates.begin(), candidates.end(), 0);
            }
            return 0;
        });

        SensorSet pool_set;
        pool_set.indices = candidates;
        pool_set.m = m;
        const Matrix s_full = sample_columns(centered.centered.values, pool_set);

        PruneSchedule schedule = spec.prune;
        schedule.stop_at = n;
        TrainConfig cfg = spec.train;
        cfg.seed = derive_seed(spec.seed, seed_stream::train);

        PruneRun run = detail::stage("iterative_prune", [&] {
            return iterative_prune(s_full, centered.centered.values, candidates, schedule, cfg,
                                   spec.arch, spec.hidden_act, spec.output_act);
        });
        report.sensors = run.sensors;

        detail::stage("evaluate", [&] {
            const Matrix test_centered = detail::center_columns(noisy_test.values, mean);
            const Matrix s_test = sample_columns(test_centered, pool_set);
            x_hat = forward(run.model, s_test);
            for (std::int64_t j = 0; j < x_hat.cols(); ++j) {
                double* cj = x_hat.col(j);
                for (std::int64_t i = 0; i < m; ++i) cj[i] += mean[static_cast<std::size_t>(i)];
            }
            return 0;
        });
    } else {
        // q_sdn / r_sdn
        if (spec.kind == PipelineKind::q_sdn) {
            const PodBasis basis = detail::stage(
                "pod_basis", [&] { return pod_basis(centered.centered, n, mean); });
            report.sensors = detail::stage("placement", [&] { return qr_pivots(basis, n); });
        } else {
            report.sensors = detail::stage("placement", [&] {
                return random_sensors(m, n, derive_seed(spec.seed, seed_stream::placement));
            });
        }

        const Matrix s_train = sample_columns(centered.centered.values, report.sensors);
        std::vector<std::int64_t> sizes;
        sizes.push_back(n);
        sizes.insert(sizes.end(), spec.arch.begin(), spec.arch.end());
        sizes.push_back(m);

        TrainConfig cfg = spec.train;
        cfg.seed = derive_seed(spec.seed, seed_stream::train);
        const TrainResult trained = detail::stage("train", [&] {
            SdnModel model = init_model(sizes, spec.hidden_act, spec.output_act,
                                        derive_seed(spec.seed, seed_stream::init), cfg.init);
            return train(model, s_train, centered.centered.values, cfg);
        });

        detail::stage("evaluate", [&] {
            const Matrix test_centered = detail::center_columns(noisy_test.values, mean);
            const Matrix s_test = sample_columns(test_centered, report.sensors);
            x_hat = forward(trained.model, s_test);
            for (std::int64_t j = 0; j < x_hat.cols(); ++j) {
                double* cj = x_hat.col(j);
                for (std::int64_t i = 0; i < m; ++i) cj[i] += mean[static_cast<std::size_t>(i)];
            }
            return 0;
        });
    }

    const RelativeError re = detail::stage(
        "relative_error", [&] { return relative_error(x_hat, noisy_test.values, mean); });
    report.relative_error = re.mean;
    report.per_sample_errors = re.per_sample;
    report.example_truth = noisy_test.values.col_copy(0);
    report.example_recon = x_hat.col_copy(0);
    report.ok = true;
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

struct SummaryRow {
    PipelineKind kind = PipelineKind::q_pod;
    std::int64_t n_sensors = 0;
    std::int64_t trials = 0;
    std::int64_t failures = 0;
    double mean_re = 0.0;
    double std_re = 0.0;    // sample standard deviation over successful trials
    double stderr_re = 0.0; // std_re / sqrt(successes)
};

struct EnsembleResult {
    std::vector<TrialReport> reports; // in spec order
    std::vector<SummaryRow> summary;  // grouped by (pipeline, n_sensors)
};

inline std::vector<SummaryRow> summarize(const std::vector<TrialReport>& reports) {
    std::vector<SummaryRow> rows;
    auto find_row = [&](PipelineKind kind, std::int64_t n) -> SummaryRow& {
        for (SummaryRow& r : rows) {
            if (r.kind == kind && r.n_sensors == n) return r;
        }
        rows.push_back({});
        rows.back().kind = kind;
        rows.back().n_sensors = n;
        return rows.back();
    };
    for (const TrialReport& r : reports) {
        SummaryRow& row = find_row(r.kind, r.n_sensors);
        ++row.trials;
        if (!r.ok) ++row.failures;
    }
    for (SummaryRow& row : rows) {
        double sum = 0.0;
        std::int64_t k = 0;
        for (const TrialReport& r : reports) {
            if (r.ok && r.kind == row.kind && r.n_sensors == row.n_sensors) {
                sum += r.relative_error;
                ++k;
            }
        }
        if (k == 0) continue;
        row.mean_re = sum / static_cast<double>(k);
        double ss = 0.0;
        for (const TrialReport& r : reports) {
            if (r.ok && r.kind == row.kind && r.n_sensors == row.n_sensors) {
                const double d = r.relative_error - row.mean_re;
                ss += d * d;
            }
        }
        row.std_re = k > 1 ? std::sqrt(ss / static_cast<double>(k - 1)) : 0.0;
        row.stderr_re = row.std_re / std::sqrt(static_cast<double>(k));
    }
    std::sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
        if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
        return a.n_sensors < b.n_sensors;
    });
    return rows;
}

/// Runs every spec as an independent trial on a bounded worker pool. Each
/// trial splits the dataset with its own master seed, so reruns are
/// deterministic and trials sharing a master seed share the split.
inline EnsembleResult run_ensemble(const SnapshotMatrix& data, std::int64_t train_count,
                                   SplitStrategy strategy, const std::vector<PipelineSpec>& specs,
                                   std::int64_t workers = 0,
                                   const std::function<void(const TrialReport&)>& on_trial = {}) {
    if (specs.empty()) throw std::invalid_argument("run_ensemble: no trials requested");
    if (workers <= 0) {
        workers = static_cast<std::int64_t>(std::thread::hardware_concurrency());
        if (workers < 1) workers = 1;
    }
    workers = std::min<std::int64_t>(workers, static_cast<std::int64_t>(specs.size()));

    EnsembleResult result;
    result.reports.resize(specs.size());

    std::atomic<std::size_t> next{0};
    std::mutex report_mutex;
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= specs.size()) break;
            const PipelineSpec& spec = specs[i];
            try {
                SplitSpec split_spec;
                split_spec.train_count = train_count;
                split_spec.strategy = strategy;
                split_spec.seed = derive_seed(spec.seed, seed_stream::split);
                const SplitResult sr = split(data, split_spec);
                result.reports[i] = run_trial(spec, sr.train, sr.test);
            } catch (const std::exception& e) {
                TrialReport& r = result.reports[i];
                r.fingerprint = spec_fingerprint(spec);
                r.kind = spec.kind;
                r.n_sensors = spec.n_sensors;
                r.seed = spec.seed;
                r.ok = false;
                r.error = e.what();
            }
            if (on_trial) {
                std::lock_guard<std::mutex> lock(report_mutex);
                on_trial(result.reports[i]);
            }
        }
    };

    std::vector<std::thread> pool;
    for (std::int64_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();

    result.summary = summarize(result.reports);
    return result;
}

/// Convenience form: one template spec fanned out over a master-seed list.
inline EnsembleResult run_ensemble(const SnapshotMatrix& data, std::int64_t train_count,
                                   SplitStrategy strategy, const PipelineSpec& base,
                                   const std::vector<std::uint64_t>& seeds,
                                   std::int64_t workers = 0,
                                   const std::function<void(const TrialReport&)>& on_trial = {}) {
    std::vector<PipelineSpec> specs;
    specs.reserve(seeds.size());
    for (std::uint64_t seed : seeds) {
        specs.push_back(base);
        specs.back().seed = seed;
    }
    return run_ensemble(data, train_count, strategy, specs, workers, on_trial);
}

inline void write_trials_csv(const std::string& path, const std::vector<TrialReport>& reports) {
    std::string out = "pipeline,n_sensors,seed,relative_error,wall_time_s\n";
    for (const TrialReport& r : reports) {
        out += std::string(to_string(r.kind)) + "," + std::to_string(r.n_sensors) + "," +
               std::to_string(r.seed) + "," + (r.ok ? format_double(r.relative_error) : "nan") +
               "," + format_double(r.wall_time_s) + "\n";
    }
    write_text(path, out);
}

inline void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
    std::string out = "pipeline,n_sensors,trials,failures,mean_re,std_re,stderr_re\n";
    for (const SummaryRow& r : rows) {
        out += std::string(to_string(r.kind)) + "," + std::to_string(r.n_sensors) + "," +
               std::to_string(r.trials) + "," + std::to_string(r.failures) + "," +
               format_double(r.mean_re) + "," + format_double(r.std_re) + "," +
               format_double(r.stderr_re) + "\n";
    }
    write_text(path, out);
}

/// Full trial reports as JSON (per-sample errors and sensor sets included).
/// Wall timings stay in the CSV: the JSON artifact is byte-reproducible.
inline void write_trials_json(const std::string& path, const std::vector<TrialReport>& reports) {
    json arr = json::array();
    for (const TrialReport& r : reports) {
        json j;
        j["fingerprint"] = r.fingerprint;
        j["pipeline"] = to_string(r.kind);
        j["n_sensors"] = r.n_sensors;
        j["seed"] = r.seed;
        j["ok"] = r.ok;
        if (r.ok) {
            j["relative_error"] = r.relative_error;
            j["per_sample_errors"] = r.per_sample_errors;
            j["sensors"] = sensors_to_json(r.sensors);
        } else {
            j["error"] = r.error;
        }
        arr.push_back(std::move(j));
    }
    write_json(path, arr);
}

inline void write_failures_csv(const std::string& path, const std::vector<TrialReport>& reports) {
    std::string out = "pipeline,n_sensors,seed,error\n";
    for (const TrialReport& r : reports) {
        if (r.ok) continue;
        std::string msg = r.error;
        for (char& c : msg) {
            if (c == ',' || c == '\n') c = ';';
        }
        out += std::string(to_string(r.kind)) + "," + std::to_string(r.n_sensors) + "," +
               std::to_string(r.seed) + "," + msg + "\n";
    }
    write_text(path, out);
}

} // namespace sensekit
