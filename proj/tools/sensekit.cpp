// Command-line surface for the sensekit toolkit. Stages hand off through
// files (snapshots, basis, sensors, model) so each step of the
// basis -> pivots -> train -> reconstruct chain stays inspectable; `bench`
// orchestrates the same stages in-process for sweep speed.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sensekit/bench.hpp"
#include "sensekit/lowrank.hpp"
#include "sensekit/placement.hpp"
#include "sensekit/sdn.hpp"
#include "sensekit/snapshots.hpp"

namespace fs = std::filesystem;
using namespace sensekit;

namespace {

bool g_quiet = false;

void progress(const std::string& line) {
    if (!g_quiet) std::fprintf(stderr, "%s\n", line.c_str());
}

SnapshotFormat parse_format(const std::string& s) {
    if (s == "csv") return SnapshotFormat::csv;
    if (s == "raw-f64") return SnapshotFormat::raw_f64;
    throw std::runtime_error("unknown format \"" + s + "\" (expected csv or raw-f64)");
}

SyntheticKind parse_kind(const std::string& s) {
    if (s == "traveling_wave") return SyntheticKind::traveling_wave;
    if (s == "rank_r_random") return SyntheticKind::rank_r_random;
    if (s == "vortex_like") return SyntheticKind::vortex_like;
    throw std::runtime_error("unknown generator kind \"" + s + "\"");
}

std::string default_out_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("SENSEKIT_OUT")) return env;
    return ".";
}

// ---------------------------------------------------------------- generate

struct GenerateOpts {
    std::string kind = "traveling_wave";
    std::int64_t rows = 0, cols = 0, state_dim = 0, snapshots = 0;
    std::int64_t waves = 1, rank = 1, blobs = 4;
    double blob_width = 0.08;
    double horizon = 1.0;
    bool random_times = false;
    std::vector<double> amplitudes, sigma, omega;
    std::uint64_t seed = 0;
    std::string out, format = "raw-f64", pgm;
};

void cmd_generate(const GenerateOpts& o) {
    SyntheticSpec spec;
    spec.kind = parse_kind(o.kind);
    spec.grid_rows = o.rows;
    spec.grid_cols = o.cols;
    spec.state_dim = o.state_dim;
    spec.snapshots = o.snapshots;
    spec.waves = o.waves;
    spec.amplitudes = o.amplitudes;
    spec.omega = o.omega;
    spec.time_horizon = o.horizon;
    spec.random_times = o.random_times;
    spec.rank = o.rank;
    spec.sigma = o.sigma;
    spec.blobs = o.blobs;
    spec.blob_width = o.blob_width;
    spec.seed = o.seed;

    const SnapshotMatrix x = gen_synthetic(spec);
    save_matrix(x, o.out, parse_format(o.format));
    if (!o.pgm.empty()) {
        if (x.grid_rows < 1) throw std::runtime_error("--pgm needs a grid-shaped generator");
        write_pgm(o.pgm, x.values.col_copy(0), x.grid_rows, x.grid_cols, x.row_map);
    }
    progress("generated " + std::to_string(x.m()) + "x" + std::to_string(x.n()) + " -> " + o.out);
}

// ------------------------------------------------------------------- basis

struct BasisOpts {
    std::string data, format = "raw-f64", out;
    std::int64_t rank = 0;
};

void cmd_basis(const BasisOpts& o) {
    const SnapshotMatrix x = load_matrix(o.data, parse_format(o.format));
    const CenterResult centered = mean_center(x);
    const PodBasis basis = pod_basis(centered.centered, o.rank, centered.mean);
    save_basis(basis, o.out);

    std::string sv = "singular values:";
    for (std::size_t i = 0; i < basis.singular_values.size() && i < 8; ++i) {
        sv += " " + format_double(basis.singular_values[i]);
    }
    progress("basis rank " + std::to_string(basis.rank()) + " over " + std::to_string(basis.m()) +
             " states -> " + o.out);
    progress(sv);
}

// ------------------------------------------------------------------- place

struct PlaceOpts {
    std::string basis, method = "qr", out, data, data_format = "raw-f64", overlay;
    std::int64_t n = 0;
    std::int64_t m = 0;
    std::uint64_t seed = 0;
    std::vector<std::int64_t> forbidden;
    bool allow_subrank = false;
};

void cmd_place(const PlaceOpts& o) {
    SensorSet sensors;
    if (o.method == "qr") {
        if (o.basis.empty()) throw std::runtime_error("place --method qr needs --basis");
        const PodBasis basis = load_basis(o.basis);
        sensors = qr_pivots(basis, o.n, o.allow_subrank);
    } else if (o.method == "random") {
        std::int64_t m = o.m;
        if (m == 0 && !o.basis.empty()) m = load_basis(o.basis).m();
        if (m == 0) throw std::runtime_error("place --method random needs --m or --basis");
        sensors = random_sensors(m, o.n, o.seed, o.forbidden);
    } else {
        throw std::runtime_error("unknown placement method \"" + o.method + "\"");
    }
    save_sensors(sensors, o.out);

    // Original-grid coordinates when the snapshot sidecar is available.
    std::vector<std::int64_t> row_map;
    std::int64_t grid_rows = 0, grid_cols = 0;
    SnapshotMatrix data;
    if (!o.data.empty()) {
        data = load_matrix(o.data, parse_format(o.data_format));
        row_map = data.row_map;
        grid_rows = data.grid_rows;
        grid_cols = data.grid_cols;
    }
    for (std::size_t i = 0; i < sensors.indices.size(); ++i) {
        const std::int64_t idx = sensors.indices[i];
        std::string line = "sensor " + std::to_string(i) + ": index " + std::to_string(idx);
        const std::int64_t orig = row_map.empty() ? idx : row_map[static_cast<std::size_t>(idx)];
        if (grid_cols > 0) {
            line += " grid (" + std::to_string(orig / grid_cols) + ", " +
                    std::to_string(orig % grid_cols) + ")";
        }
        progress(line);
    }
    if (!o.overlay.empty()) {
        if (grid_rows < 1) throw std::runtime_error("--overlay needs --data with a grid shape");
        write_pgm(o.overlay, data.values.col_copy(0), grid_rows, grid_cols, data.row_map,
                  sensors.indices);
    }
}

// ------------------------------------------------------------------- train

struct TrainOpts {
    std::string data, format = "raw-f64", sensors, out, history;
    std::vector<std::int64_t> arch{35, 40};
    double lr = 1e-3, val_fraction = 0.1;
    std::int64_t max_epochs = 1000, patience = 5, batch = 0;
    std::uint64_t seed = 0;
    std::string init = "glorot_uniform", hidden_act = "relu", output_act = "linear";
    bool no_bias = false;
};

void cmd_train(const TrainOpts& o) {
    const SnapshotMatrix data = load_matrix(o.data, parse_format(o.format));
    const SensorSet sensors = load_sensors(o.sensors);
    if (sensors.m != data.m()) {
        throw std::runtime_error("sensor set covers " + std::to_string(sensors.m) +
                                 " states but data has " + std::to_string(data.m()));
    }

    const CenterResult centered = mean_center(data);
    const Matrix s_train = sample_columns(centered.centered.values, sensors);

    std::vector<std::int64_t> sizes;
    sizes.push_back(sensors.n());
    sizes.insert(sizes.end(), o.arch.begin(), o.arch.end());
    sizes.push_back(data.m());

    TrainConfig cfg;
    cfg.learning_rate = o.lr;
    cfg.max_epochs = o.max_epochs;
    cfg.patience = o.patience;
    cfg.batch_size = o.batch;
    cfg.val_fraction = o.val_fraction;
    cfg.seed = derive_seed(o.seed, seed_stream::train);
    cfg.init = init_from_string(o.init);

    SdnModel model = init_model(sizes, act_from_string(o.hidden_act),
                                act_from_string(o.output_act), derive_seed(o.seed, seed_stream::init),
                                cfg.init, !o.no_bias);
    const TrainResult result = train(model, s_train, centered.centered.values, cfg);

    Vector input_center(sensors.indices.size());
    for (std::size_t i = 0; i < sensors.indices.size(); ++i) {
        input_center[i] = centered.mean[static_cast<std::size_t>(sensors.indices[i])];
    }
    json cfg_json;
    cfg_json["learning_rate"] = cfg.learning_rate;
    cfg_json["max_epochs"] = cfg.max_epochs;
    cfg_json["patience"] = cfg.patience;
    cfg_json["seed"] = o.seed;
    const std::string dump = cfg_json.dump();
    save_model(result.model, o.out, hex64(fnv1a64(dump.data(), dump.size())), input_center,
               centered.mean);
    if (!o.history.empty()) write_history_csv(o.history, result.history);

    progress("trained " + std::to_string(result.history.size()) + " epochs, best val loss " +
             format_double(result.best_val_loss) + " at epoch " +
             std::to_string(result.best_epoch) + " -> " + o.out);
}

// ------------------------------------------------------------- reconstruct

struct ReconstructOpts {
    std::string data, format = "raw-f64", sensors, model, basis, out, report, pgm_dir;
    std::int64_t pgm_count = 1;
};

void cmd_reconstruct(const ReconstructOpts& o) {
    const SnapshotMatrix data = load_matrix(o.data, parse_format(o.format));
    const SensorSet sensors = load_sensors(o.sensors);
    if (sensors.m != data.m()) {
        throw std::runtime_error("sensor set covers " + std::to_string(sensors.m) +
                                 " states but data has " + std::to_string(data.m()));
    }
    if (o.model.empty() == o.basis.empty()) {
        throw std::runtime_error("reconstruct needs exactly one of --model or --basis");
    }

    Matrix x_hat(data.m(), data.n());
    Vector mean(static_cast<std::size_t>(data.m()), 0.0);

    if (!o.model.empty()) {
        const LoadedModel loaded = load_model(o.model);
        if (loaded.model.input_dim() != sensors.n()) {
            throw std::runtime_error("model expects input width " +
                                     std::to_string(loaded.model.input_dim()) +
                                     " but sensor set provides " + std::to_string(sensors.n()));
        }
        if (loaded.model.output_dim() != data.m()) {
            throw std::runtime_error("model reconstructs " +
                                     std::to_string(loaded.model.output_dim()) +
                                     " states but data has " + std::to_string(data.m()));
        }
        Matrix s_test = sample_columns(data.values, sensors);
        if (!loaded.input_center.empty()) {
            mean = loaded.output_center;
            for (std::int64_t j = 0; j < s_test.cols(); ++j) {
                double* cj = s_test.col(j);
                for (std::size_t i = 0; i < loaded.input_center.size(); ++i) {
                    cj[i] -= loaded.input_center[i];
                }
            }
        }
        x_hat = forward(loaded.model, s_test);
        for (std::int64_t j = 0; j < x_hat.cols(); ++j) {
            double* cj = x_hat.col(j);
            for (std::int64_t i = 0; i < x_hat.rows(); ++i) {
                cj[i] += mean[static_cast<std::size_t>(i)];
            }
        }
    } else {
        const PodBasis basis = load_basis(o.basis);
        if (basis.m() != data.m()) {
            throw std::runtime_error("basis covers " + std::to_string(basis.m()) +
                                     " states but data has " + std::to_string(data.m()));
        }
        mean = basis.train_mean;
        for (std::int64_t j = 0; j < data.n(); ++j) {
            Vector s = sample(data.values.col_copy(j), sensors);
            for (std::size_t i = 0; i < s.size(); ++i) {
                s[i] -= mean[static_cast<std::size_t>(sensors.indices[i])];
            }
            const Coefficients fit = fit_coefficients(basis, sensors, s);
            if (fit.ill_conditioned) {
                progress("warning: ill-conditioned fit on column " + std::to_string(j) +
                         " (cond " + format_double(fit.condition) + ")");
            }
            x_hat.set_col(j, reconstruct(basis, fit.a, true));
        }
    }

    if (!o.out.empty()) {
        SnapshotMatrix out_mat;
        out_mat.values = x_hat;
        out_mat.valid_mask = data.valid_mask;
        out_mat.row_map = data.row_map;
        out_mat.grid_rows = data.grid_rows;
        out_mat.grid_cols = data.grid_cols;
        save_matrix(out_mat, o.out, SnapshotFormat::raw_f64);
    }

    const RelativeError re = relative_error(x_hat, data.values, mean);
    std::printf("RE %s\n", format_double(re.mean).c_str());

    if (!o.report.empty()) {
        std::string csv = "column,relative_error\n";
        for (std::size_t k = 0; k < re.per_sample.size(); ++k) {
            csv += std::to_string(k) + "," + format_double(re.per_sample[k]) + "\n";
        }
        write_text(o.report, csv);
    }
    if (!o.pgm_dir.empty()) {
        if (data.grid_rows < 1) throw std::runtime_error("--pgm-dir needs grid-shaped data");
        fs::create_directories(o.pgm_dir);
        const std::int64_t count = std::min<std::int64_t>(o.pgm_count, data.n());
        for (std::int64_t j = 0; j < count; ++j) {
            write_pgm((fs::path(o.pgm_dir) / ("truth_" + std::to_string(j) + ".pgm")).string(),
                      data.values.col_copy(j), data.grid_rows, data.grid_cols, data.row_map);
            write_pgm((fs::path(o.pgm_dir) / ("recon_" + std::to_string(j) + ".pgm")).string(),
                      x_hat.col_copy(j), data.grid_rows, data.grid_cols, data.row_map);
        }
    }
}

// ------------------------------------------------------------------- bench

struct BenchOpts {
    std::string config, out;
    std::int64_t workers = 0;
};

SnapshotMatrix dataset_from_config(const json& d) {
    require_keys(d,
                 {"kind", "rows", "cols", "m", "snapshots", "waves", "amplitudes", "omega",
                  "time_horizon", "random_times", "rank", "sigma", "blobs", "blob_width", "seed",
                  "path", "format", "mask_path"},
                 "dataset");
    if (d.contains("path")) {
        const SnapshotFormat format =
            parse_format(d.value("format", std::string("raw-f64")));
        SnapshotMatrix x = load_matrix(d["path"].get<std::string>(), format);
        if (d.contains("mask_path") && format == SnapshotFormat::csv) {
            x = apply_valid_mask(x, detail::read_mask_file(d["mask_path"].get<std::string>()));
        }
        return x;
    }
    if (!d.contains("kind")) throw std::runtime_error("dataset needs \"kind\" or \"path\"");
    SyntheticSpec spec;
    spec.kind = parse_kind(d["kind"].get<std::string>());
    spec.grid_rows = d.value("rows", std::int64_t{0});
    spec.grid_cols = d.value("cols", std::int64_t{0});
    spec.state_dim = d.value("m", std::int64_t{0});
    spec.snapshots = d.value("snapshots", std::int64_t{0});
    spec.waves = d.value("waves", std::int64_t{1});
    if (d.contains("amplitudes")) spec.amplitudes = d["amplitudes"].get<std::vector<double>>();
    if (d.contains("omega")) spec.omega = d["omega"].get<std::vector<double>>();
    spec.time_horizon = d.value("time_horizon", 1.0);
    spec.random_times = d.value("random_times", false);
    spec.rank = d.value("rank", std::int64_t{1});
    if (d.contains("sigma")) spec.sigma = d["sigma"].get<std::vector<double>>();
    spec.blobs = d.value("blobs", std::int64_t{4});
    spec.blob_width = d.value("blob_width", 0.08);
    spec.seed = d.value("seed", std::uint64_t{0});
    return gen_synthetic(spec);
}

void cmd_bench(const BenchOpts& o) {
    const json cfg = read_json(o.config);
    require_keys(cfg,
                 {"dataset", "split", "pipelines", "sensor_counts", "trials", "master_seed",
                  "arch", "train", "noise", "prune", "emit_pgm", "workers"},
                 "config");
    for (const char* key : {"dataset", "split", "pipelines", "sensor_counts", "trials",
                            "master_seed"}) {
        if (!cfg.contains(key)) {
            throw std::runtime_error(std::string("config: missing required key \"") + key + "\"");
        }
    }

    // Validate every section before the (potentially expensive) dataset
    // work; generation happens only once the whole schema is accepted.
    require_keys(cfg["dataset"],
                 {"kind", "rows", "cols", "m", "snapshots", "waves", "amplitudes", "omega",
                  "time_horizon", "random_times", "rank", "sigma", "blobs", "blob_width", "seed",
                  "path", "format", "mask_path"},
                 "dataset");
    const json& split_cfg = cfg["split"];
    require_keys(split_cfg, {"train_count", "strategy"}, "split");
    const std::int64_t train_count = split_cfg.at("train_count").get<std::int64_t>();
    const std::string strategy_str = split_cfg.value("strategy", std::string("random"));
    SplitStrategy strategy;
    if (strategy_str == "random") {
        strategy = SplitStrategy::random;
    } else if (strategy_str == "leading") {
        strategy = SplitStrategy::leading;
    } else {
        throw std::runtime_error("split: unknown strategy \"" + strategy_str + "\"");
    }

    TrainConfig train_cfg;
    Act hidden_act = Act::relu;
    Act output_act = Act::linear;
    if (cfg.contains("train")) {
        const json& t = cfg["train"];
        require_keys(t,
                     {"learning_rate", "max_epochs", "patience", "batch_size", "val_fraction",
                      "init", "adam_beta1", "adam_beta2", "adam_eps", "hidden_activation",
                      "output_activation"},
                     "train");
        train_cfg.learning_rate = t.value("learning_rate", train_cfg.learning_rate);
        train_cfg.max_epochs = t.value("max_epochs", train_cfg.max_epochs);
        train_cfg.patience = t.value("patience", train_cfg.patience);
        train_cfg.batch_size = t.value("batch_size", train_cfg.batch_size);
        train_cfg.val_fraction = t.value("val_fraction", train_cfg.val_fraction);
        train_cfg.adam_beta1 = t.value("adam_beta1", train_cfg.adam_beta1);
        train_cfg.adam_beta2 = t.value("adam_beta2", train_cfg.adam_beta2);
        train_cfg.adam_eps = t.value("adam_eps", train_cfg.adam_eps);
        if (t.contains("init")) train_cfg.init = init_from_string(t["init"].get<std::string>());
        if (t.contains("hidden_activation")) {
            hidden_act = act_from_string(t["hidden_activation"].get<std::string>());
        }
        if (t.contains("output_activation")) {
            output_act = act_from_string(t["output_activation"].get<std::string>());
        }
    }

    double noise_psnr = std::numeric_limits<double>::infinity();
    NoiseApply noise_apply = NoiseApply::both;
    if (cfg.contains("noise") && !cfg["noise"].is_null()) {
        const json& n = cfg["noise"];
        require_keys(n, {"psnr_db", "apply_to"}, "noise");
        if (n.contains("psnr_db") && !n["psnr_db"].is_null()) {
            noise_psnr = n["psnr_db"].get<double>();
        }
        const std::string apply = n.value("apply_to", std::string("both"));
        if (apply == "both") {
            noise_apply = NoiseApply::both;
        } else if (apply == "train") {
            noise_apply = NoiseApply::train_only;
        } else if (apply == "test") {
            noise_apply = NoiseApply::test_only;
        } else {
            throw std::runtime_error("noise: unknown apply_to \"" + apply + "\"");
        }
    }

    PruneSchedule prune;
    std::int64_t candidate_pool = 0;
    if (cfg.contains("prune")) {
        const json& p = cfg["prune"];
        require_keys(p, {"mode", "fraction", "ladder", "candidate_pool"}, "prune");
        const std::string mode = p.value("mode", std::string("fraction_of_remaining"));
        if (mode == "fraction_of_remaining") {
            prune.mode = PruneMode::fraction_of_remaining;
        } else if (mode == "target_sparsity_ladder") {
            prune.mode = PruneMode::target_sparsity_ladder;
        } else {
            throw std::runtime_error("prune: unknown mode \"" + mode + "\"");
        }
        prune.fraction = p.value("fraction", prune.fraction);
        if (p.contains("ladder")) prune.ladder = p["ladder"].get<std::vector<double>>();
        candidate_pool = p.value("candidate_pool", std::int64_t{0});
    }

    std::vector<std::int64_t> arch{35, 40};
    if (cfg.contains("arch")) arch = cfg["arch"].get<std::vector<std::int64_t>>();

    const std::vector<std::string> pipeline_names =
        cfg["pipelines"].get<std::vector<std::string>>();
    const std::vector<std::int64_t> sensor_counts =
        cfg["sensor_counts"].get<std::vector<std::int64_t>>();
    const std::int64_t trials = cfg["trials"].get<std::int64_t>();
    const std::uint64_t master_seed = cfg["master_seed"].get<std::uint64_t>();
    if (pipeline_names.empty() || sensor_counts.empty() || trials < 1) {
        throw std::runtime_error("config: pipelines, sensor_counts and trials must be nonempty");
    }

    std::vector<PipelineSpec> specs;
    for (const std::string& name : pipeline_names) {
        const PipelineKind kind = pipeline_from_string(name);
        for (std::int64_t n : sensor_counts) {
            for (std::int64_t t = 0; t < trials; ++t) {
                PipelineSpec spec;
                spec.kind = kind;
                spec.n_sensors = n;
                spec.rank_r = kind == PipelineKind::q_pod ? n : 0;
                spec.arch = arch;
                spec.train = train_cfg;
                spec.hidden_act = hidden_act;
                spec.output_act = output_act;
                spec.noise_psnr = noise_psnr;
                spec.noise_apply = noise_apply;
                spec.prune = prune;
                spec.candidate_pool = candidate_pool;
                spec.seed = derive_seed(master_seed, static_cast<std::uint64_t>(t));
                spec.validate();
                specs.push_back(std::move(spec));
            }
        }
    }

    const SnapshotMatrix data = dataset_from_config(cfg["dataset"]);

    const std::string out_dir = default_out_dir(o.out);
    fs::create_directories(out_dir);

    std::size_t done = 0;
    auto on_trial = [&](const TrialReport& r) {
        ++done;
        if (g_quiet) return;
        const std::string status =
            r.ok ? "RE=" + format_double(r.relative_error) : "failed: " + r.error;
        std::fprintf(stderr, "[%zu/%zu] %s n=%lld seed=%llu %s\n", done, specs.size(),
                     to_string(r.kind), static_cast<long long>(r.n_sensors),
                     static_cast<unsigned long long>(r.seed), status.c_str());
    };

    std::int64_t workers = o.workers;
    if (workers == 0 && cfg.contains("workers")) workers = cfg["workers"].get<std::int64_t>();
    const EnsembleResult result =
        run_ensemble(data, train_count, strategy, specs, workers, on_trial);

    write_trials_csv((fs::path(out_dir) / "trials.csv").string(), result.reports);
    write_trials_json((fs::path(out_dir) / "trials.json").string(), result.reports);
    write_summary_csv((fs::path(out_dir) / "summary.csv").string(), result.summary);
    std::int64_t failures = 0;
    for (const TrialReport& r : result.reports) {
        if (!r.ok) ++failures;
    }
    if (failures > 0) {
        write_failures_csv((fs::path(out_dir) / "failures.csv").string(), result.reports);
    }
    write_json((fs::path(out_dir) / "config_echo.json").string(), cfg);

    // First trial of each (pipeline, n): sensor set, plus placement and
    // reconstruction maps when the dataset is grid shaped.
    const bool emit_pgm = cfg.value("emit_pgm", false);
    fs::create_directories(fs::path(out_dir) / "sensors");
    if (emit_pgm) fs::create_directories(fs::path(out_dir) / "pgm");
    for (const std::string& name : pipeline_names) {
        const PipelineKind kind = pipeline_from_string(name);
        for (std::int64_t n : sensor_counts) {
            const TrialReport* first = nullptr;
            for (const TrialReport& r : result.reports) {
                if (r.ok && r.kind == kind && r.n_sensors == n) {
                    first = &r;
                    break;
                }
            }
            if (!first) continue;
            const std::string tag = name + "_n" + std::to_string(n);
            save_sensors(first->sensors,
                         (fs::path(out_dir) / "sensors" / (tag + ".json")).string());
            if (emit_pgm && data.grid_rows > 0) {
                write_pgm((fs::path(out_dir) / "pgm" / (tag + "_sensors.pgm")).string(),
                          first->example_truth, data.grid_rows, data.grid_cols, data.row_map,
                          first->sensors.indices);
                write_pgm((fs::path(out_dir) / "pgm" / (tag + "_recon.pgm")).string(),
                          first->example_recon, data.grid_rows, data.grid_cols, data.row_map);
                write_pgm((fs::path(out_dir) / "pgm" / (tag + "_truth.pgm")).string(),
                          first->example_truth, data.grid_rows, data.grid_cols, data.row_map);
            }
        }
    }

    progress("bench complete: " + std::to_string(result.reports.size()) + " trials, " +
             std::to_string(failures) + " failures -> " + out_dir);
    if (failures > 0) {
        throw std::runtime_error(std::to_string(failures) + " trial(s) failed, see " +
                                 (fs::path(out_dir) / "failures.csv").string());
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sensekit: sparse sensor placement and full-state reconstruction"};
    app.require_subcommand(1);
    app.add_flag("--quiet", g_quiet, "suppress progress output");

    GenerateOpts gen;
    auto* cmd_gen = app.add_subcommand("generate", "generate a synthetic snapshot matrix");
    cmd_gen->add_option("--kind", gen.kind, "traveling_wave | rank_r_random | vortex_like");
    cmd_gen->add_option("--rows", gen.rows, "grid rows");
    cmd_gen->add_option("--cols", gen.cols, "grid cols");
    cmd_gen->add_option("--m", gen.state_dim, "state dimension (rank_r_random without grid)");
    cmd_gen->add_option("--snapshots", gen.snapshots, "number of snapshots")->required();
    cmd_gen->add_option("--waves", gen.waves, "traveling_wave component count");
    cmd_gen->add_option("--amplitudes", gen.amplitudes, "wave amplitudes")->delimiter(',');
    cmd_gen->add_option("--omega", gen.omega, "wave frequencies (default: distinct integers)")
        ->delimiter(',');
    cmd_gen->add_option("--horizon", gen.horizon, "time horizon spanned by the snapshots");
    cmd_gen->add_flag("--random-times", gen.random_times,
                      "sample observation times uniformly over the horizon");
    cmd_gen->add_option("--rank", gen.rank, "rank_r_random rank");
    cmd_gen->add_option("--sigma", gen.sigma, "rank_r_random singular values")->delimiter(',');
    cmd_gen->add_option("--blobs", gen.blobs, "vortex_like blob count");
    cmd_gen->add_option("--blob-width", gen.blob_width, "vortex_like blob width");
    cmd_gen->add_option("--seed", gen.seed, "RNG seed");
    cmd_gen->add_option("--out", gen.out, "output path")->required();
    cmd_gen->add_option("--format", gen.format, "csv | raw-f64");
    cmd_gen->add_option("--pgm", gen.pgm, "render first snapshot to this PGM path");

    BasisOpts bas;
    auto* cmd_bas = app.add_subcommand("basis", "compute a POD basis from snapshots");
    cmd_bas->add_option("--data", bas.data, "snapshot file")->required();
    cmd_bas->add_option("--format", bas.format, "csv | raw-f64");
    cmd_bas->add_option("--rank", bas.rank, "basis rank")->required();
    cmd_bas->add_option("--out", bas.out, "output basis path")->required();

    PlaceOpts plc;
    auto* cmd_plc = app.add_subcommand("place", "select sensor locations");
    cmd_plc->add_option("--basis", plc.basis, "POD basis (qr method)");
    cmd_plc->add_option("--n", plc.n, "sensor count")->required();
    cmd_plc->add_option("--method", plc.method, "qr | random");
    cmd_plc->add_option("--m", plc.m, "state dimension (random method)");
    cmd_plc->add_option("--seed", plc.seed, "RNG seed (random method)");
    cmd_plc->add_option("--forbidden", plc.forbidden, "indices never selected")->delimiter(',');
    cmd_plc->add_flag("--allow-subrank", plc.allow_subrank, "permit n < basis rank (ablation)");
    cmd_plc->add_option("--data", plc.data, "snapshots for grid coordinates/overlay");
    cmd_plc->add_option("--data-format", plc.data_format, "csv | raw-f64");
    cmd_plc->add_option("--overlay", plc.overlay, "write placement overlay PGM");
    cmd_plc->add_option("--out", plc.out, "output sensors.json")->required();

    TrainOpts trn;
    auto* cmd_trn = app.add_subcommand("train", "train a shallow decoder network");
    cmd_trn->add_option("--data", trn.data, "training snapshots")->required();
    cmd_trn->add_option("--format", trn.format, "csv | raw-f64");
    cmd_trn->add_option("--sensors", trn.sensors, "sensors.json")->required();
    cmd_trn->add_option("--arch", trn.arch, "hidden layer sizes")->delimiter(',');
    cmd_trn->add_option("--lr", trn.lr, "ADAM learning rate");
    cmd_trn->add_option("--max-epochs", trn.max_epochs, "epoch cap");
    cmd_trn->add_option("--patience", trn.patience, "early stopping patience");
    cmd_trn->add_option("--batch", trn.batch, "batch size (0 = full batch)");
    cmd_trn->add_option("--val-fraction", trn.val_fraction, "validation holdout fraction");
    cmd_trn->add_option("--seed", trn.seed, "master seed");
    cmd_trn->add_option("--init", trn.init, "glorot_uniform | small_normal");
    cmd_trn->add_option("--hidden-act", trn.hidden_act, "relu | tanh");
    cmd_trn->add_option("--output-act", trn.output_act, "linear | relu");
    cmd_trn->add_flag("--no-bias", trn.no_bias, "disable bias terms");
    cmd_trn->add_option("--out", trn.out, "output model path")->required();
    cmd_trn->add_option("--history", trn.history, "write per-epoch loss CSV");

    ReconstructOpts rec;
    auto* cmd_rec = app.add_subcommand("reconstruct", "reconstruct full states from sensors");
    cmd_rec->add_option("--data", rec.data, "snapshots holding the true states")->required();
    cmd_rec->add_option("--format", rec.format, "csv | raw-f64");
    cmd_rec->add_option("--sensors", rec.sensors, "sensors.json")->required();
    cmd_rec->add_option("--model", rec.model, "SDN checkpoint");
    cmd_rec->add_option("--basis", rec.basis, "POD basis (gappy-POD reconstruction)");
    cmd_rec->add_option("--out", rec.out, "write reconstructions (raw-f64)");
    cmd_rec->add_option("--report", rec.report, "write per-sample error CSV");
    cmd_rec->add_option("--pgm-dir", rec.pgm_dir, "render truth/reconstruction pairs");
    cmd_rec->add_option("--pgm-count", rec.pgm_count, "how many columns to render");

    BenchOpts bch;
    auto* cmd_bch = app.add_subcommand("bench", "run a benchmark sweep from a config file");
    cmd_bch->add_option("--config", bch.config, "RunConfig JSON")->required();
    cmd_bch->add_option("--out", bch.out, "output directory (default $SENSEKIT_OUT or .)");
    cmd_bch->add_option("--workers", bch.workers, "worker pool size (0 = hardware)");

    try {
        app.parse(argc, argv);
        if (cmd_gen->parsed()) cmd_generate(gen);
        if (cmd_bas->parsed()) cmd_basis(bas);
        if (cmd_plc->parsed()) cmd_place(plc);
        if (cmd_trn->parsed()) cmd_train(trn);
        if (cmd_rec->parsed()) cmd_reconstruct(rec);
        if (cmd_bch->parsed()) cmd_bench(bch);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
