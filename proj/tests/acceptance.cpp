// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exit status is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sensekit/bench.hpp"
#include "sensekit/lowrank.hpp"
#include "sensekit/placement.hpp"
#include "sensekit/sdn.hpp"
#include "sensekit/snapshots.hpp"

using namespace sensekit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

// ----------------------------------------------------------------------
// 1. Exact-recovery oracle: q_pod with n = r = 5 QR pivots on exact rank-5
//    data reconstructs 20 held-out in-span columns to RE < 1e-8.
Outcome criterion_exact_recovery() {
    const auto t0 = std::chrono::steady_clock::now();
    SyntheticSpec gen;
    gen.kind = SyntheticKind::rank_r_random;
    gen.state_dim = 2000;
    gen.snapshots = 140; // 120 train + 20 held out
    gen.rank = 5;
    gen.sigma = {1.0, 0.5, 0.25, 0.125, 0.0625};
    gen.seed = 71;
    const SnapshotMatrix data = gen_synthetic(gen);
    const SplitResult sr = split(data, {120, 0, SplitStrategy::leading});

    PipelineSpec spec;
    spec.kind = PipelineKind::q_pod;
    spec.n_sensors = 5;
    spec.rank_r = 5;
    spec.seed = 72;
    const TrialReport report = run_trial(spec, sr.train, sr.test);
    const double elapsed = seconds_since(t0);

    Outcome out;
    out.pass = report.ok && report.relative_error < 1e-8 && elapsed < 10.0;
    out.detail = "RE=" + fmt(report.relative_error) + " on 20 held-out columns, " +
                 fmt(elapsed) + "s";
    return out;
}

// ----------------------------------------------------------------------
// 2. Gradient correctness: 25 random shapes, widths <= 20, depths 2-3,
//    both activations; every entry matches central differences within 1e-5.
Outcome criterion_gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng shape_rng(81);
    double worst = 0.0;
    std::int64_t checked = 0;

    for (int trial = 0; trial < 25; ++trial) {
        const std::int64_t depth = 2 + static_cast<std::int64_t>(shape_rng.uniform_below(2));
        std::vector<std::int64_t> sizes;
        for (std::int64_t l = 0; l <= depth; ++l) {
            sizes.push_back(2 + static_cast<std::int64_t>(shape_rng.uniform_below(19)));
        }
        const Act hidden = trial % 2 == 0 ? Act::relu : Act::tanh;
        const Act output = trial % 5 == 4 ? Act::relu : Act::linear;

        SdnModel model = init_model(sizes, hidden, output, 8100 + trial);
        Matrix s(sizes.front(), 3);
        const Matrix x = [&] {
            Rng r(8200 + trial);
            Matrix mx(sizes.back(), 3);
            for (double& v : mx.data()) v = r.gaussian();
            return mx;
        }();

        // keep pre-activations off relu kinks so central differences are valid
        std::uint64_t bump = 0;
        while (true) {
            Rng r(8300 + trial + 1000 * bump);
            for (double& v : s.data()) v = r.gaussian();
            Matrix a = detail::masked_input(model, s);
            bool safe = true;
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                Matrix z(model.layers[l].out_dim, 3);
                detail::affine_forward(model.layers[l], model.use_bias, a, z);
                const Act act =
                    l + 1 == model.layers.size() ? model.output_activation : model.hidden_activation;
                if (act == Act::relu) {
                    for (double v : z.data()) safe = safe && std::abs(v) > 1e-4;
                }
                detail::apply_activation(act, z);
                a = std::move(z);
            }
            if (safe || ++bump > 50) break;
        }

        const LossGrad lg = loss_and_gradients(model, s, x);
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            auto check = [&](bool bias, std::size_t count) {
                for (std::size_t i = 0; i < count; ++i) {
                    auto& param = bias ? model.layers[l].b : model.layers[l].w;
                    const double orig = param[i];
                    const double h = 1e-6 * std::max(1.0, std::abs(orig));
                    param[i] = orig + h;
                    const double up = loss_and_gradients(model, s, x).loss;
                    param[i] = orig - h;
                    const double down = loss_and_gradients(model, s, x).loss;
                    param[i] = orig;
                    const double fd = (up - down) / (2.0 * h);
                    const double an = bias ? lg.grads[l].b[i] : lg.grads[l].w[i];
                    // The denominator floor reflects the oracle's own noise:
                    // central differences carry ~eps*|loss|/h ~ 4e-10 of
                    // cancellation error, so entries below 1e-4 are checked
                    // absolutely (to 1e-9) rather than relatively.
                    const double rel =
                        std::abs(an - fd) / std::max({1e-4, std::abs(an), std::abs(fd)});
                    worst = std::max(worst, rel);
                    ++checked;
                }
            };
            check(false, lg.grads[l].w.size());
            check(true, lg.grads[l].b.size());
        }
    }

    const double elapsed = seconds_since(t0);
    Outcome out;
    out.pass = worst < 1e-5 && elapsed < 30.0;
    out.detail = std::to_string(checked) + " entries, worst rel err " + fmt(worst) + ", " +
                 fmt(elapsed) + "s";
    return out;
}

// ----------------------------------------------------------------------
// 3. Greedy pivot optimality on 200 random orthonormal bases (m <= 12,
//    r <= 4): each pivot maximizes the residual norm; one-step last-pivot
//    swaps never gain more than 1e-10 in |det|.
Outcome criterion_greedy_pivots() {
    const auto t0 = std::chrono::steady_clock::now();
    std::int64_t violations = 0;

    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const std::int64_t m = 5 + static_cast<std::int64_t>(seed % 8);  // 5..12
        const std::int64_t r = 2 + static_cast<std::int64_t>(seed % 3);  // 2..4
        PodBasis basis;
        basis.modes = oracles::random_orthonormal(m, r, 9000 + seed);
        basis.singular_values.assign(static_cast<std::size_t>(r), 1.0);
        basis.train_mean.assign(static_cast<std::size_t>(m), 0.0);
        const PivotResult piv = qr_pivot_details(basis, r);

        // independent Gram-Schmidt replay of the greedy argument
        Matrix work = transpose(basis.modes);
        for (std::int64_t step = 0; step < r; ++step) {
            double best = -1.0;
            for (std::int64_t j = 0; j < m; ++j) {
                if (std::find(piv.indices.begin(), piv.indices.begin() + step, j) !=
                    piv.indices.begin() + step) {
                    continue;
                }
                double s = 0.0;
                for (std::int64_t i = 0; i < r; ++i) s += work(i, j) * work(i, j);
                best = std::max(best, std::sqrt(s));
            }
            const std::int64_t p = piv.indices[static_cast<std::size_t>(step)];
            double picked = 0.0;
            for (std::int64_t i = 0; i < r; ++i) picked += work(i, p) * work(i, p);
            picked = std::sqrt(picked);
            if (picked < best * (1.0 - 1e-9)) ++violations;

            for (std::int64_t i = 0; i < r; ++i) work(i, p) /= picked;
            for (std::int64_t j = 0; j < m; ++j) {
                if (j == p) continue;
                double dot = 0.0;
                for (std::int64_t i = 0; i < r; ++i) dot += work(i, p) * work(i, j);
                for (std::int64_t i = 0; i < r; ++i) work(i, j) -= dot * work(i, p);
            }
        }

        auto volume = [&](const std::vector<std::int64_t>& rows) {
            Matrix sub(r, r);
            for (std::int64_t i = 0; i < r; ++i) {
                for (std::int64_t j = 0; j < r; ++j) {
                    sub(i, j) = basis.modes(rows[static_cast<std::size_t>(i)], j);
                }
            }
            return std::abs(oracles::det(sub));
        };
        const double greedy_vol = volume(piv.indices);
        for (std::int64_t alt = 0; alt < m; ++alt) {
            if (std::find(piv.indices.begin(), piv.indices.end(), alt) != piv.indices.end()) {
                continue;
            }
            std::vector<std::int64_t> swapped = piv.indices;
            swapped.back() = alt;
            if (volume(swapped) > greedy_vol + 1e-10) ++violations;
        }
    }

    const double elapsed = seconds_since(t0);
    Outcome out;
    out.pass = violations == 0 && elapsed < 10.0;
    out.detail = "200 bases, " + std::to_string(violations) + " violations, " + fmt(elapsed) + "s";
    return out;
}

// ----------------------------------------------------------------------
// 4. Mask semantics: 1000 randomized checks that perturbing pruned inputs
//    leaves the forward pass bit-identical and their gradients exactly zero.
Outcome criterion_mask_semantics() {
    Rng rng(41);
    std::int64_t bad_forward = 0;
    std::int64_t bad_grad = 0;

    for (int check = 0; check < 1000; ++check) {
        const std::int64_t d0 = 3 + static_cast<std::int64_t>(rng.uniform_below(6));
        SdnModel model = init_model({d0, 6, 5}, check % 2 == 0 ? Act::relu : Act::tanh,
                                    Act::linear, 4100 + static_cast<std::uint64_t>(check));
        std::int64_t masked = 0;
        for (std::int64_t k = 0; k < d0; ++k) {
            if (rng.uniform01() < 0.4 && masked + 1 < d0) {
                model.input_mask[static_cast<std::size_t>(k)] = 0;
                ++masked;
            }
        }
        if (masked == 0) {
            model.input_mask[0] = 0;
            masked = 1;
        }

        Matrix s(d0, 2);
        for (double& v : s.data()) v = rng.gaussian();
        const Matrix base = forward(model, s);
        Matrix perturbed = s;
        for (std::int64_t k = 0; k < d0; ++k) {
            if (model.input_mask[static_cast<std::size_t>(k)]) continue;
            for (std::int64_t b = 0; b < 2; ++b) perturbed(k, b) = 1e6 * rng.gaussian();
        }
        const Matrix flipped = forward(model, perturbed);
        if (std::memcmp(base.data().data(), flipped.data().data(),
                        base.data().size() * sizeof(double)) != 0) {
            ++bad_forward;
        }

        Matrix x(5, 2);
        for (double& v : x.data()) v = rng.gaussian();
        const LossGrad lg = loss_and_gradients(model, perturbed, x);
        const Dense& g1 = lg.grads.front();
        for (std::int64_t k = 0; k < d0; ++k) {
            if (model.input_mask[static_cast<std::size_t>(k)]) continue;
            for (std::int64_t i = 0; i < g1.out_dim; ++i) {
                if (g1.w[i * g1.in_dim + k] != 0.0) ++bad_grad;
            }
        }
    }

    Outcome out;
    out.pass = bad_forward == 0 && bad_grad == 0;
    out.detail = "1000 checks, " + std::to_string(bad_forward) + " forward / " +
                 std::to_string(bad_grad) + " gradient violations";
    return out;
}

// ----------------------------------------------------------------------
// 5. Trend reproduction: on a 76x96 traveling-wave dataset (rank ~ 6,
//    100 train / 51 test, PSNR 50), over 32 paired seeds and
//    n in {1,2,3,5,8}, mean RE(Q-SDN) <= mean RE(R-SDN) at every n with a
//    gap of at least 2 paired standard errors at n <= 3.
Outcome criterion_qsdn_trend() {
    const auto t0 = std::chrono::steady_clock::now();

    // Rank-6 wave field observed at unsynchronized instants: incommensurate
    // frequencies over a long horizon fill the phase torus, so snapshots are
    // independent draws from the attractor rather than one closed orbit
    // (where any injective scalar measurement would suffice and placement
    // would not matter).
    SyntheticSpec gen;
    gen.kind = SyntheticKind::traveling_wave;
    gen.grid_rows = 76;
    gen.grid_cols = 96;
    gen.snapshots = 151;
    gen.waves = 3;
    gen.amplitudes = {1.0, 0.7, 0.5};
    gen.omega = {1.0, 1.4142135623730951, 2.2360679774997896};
    gen.time_horizon = 500.0;
    gen.random_times = true;
    gen.seed = 2024;
    const SnapshotMatrix data = gen_synthetic(gen);

    const std::vector<std::int64_t> counts{1, 2, 3, 5, 8};
    const std::int64_t trials = 32;

    TrainConfig train_cfg;
    train_cfg.learning_rate = 0.01;
    train_cfg.max_epochs = 400;
    train_cfg.patience = 5;
    train_cfg.batch_size = 16;
    train_cfg.val_fraction = 0.1;

    std::vector<PipelineSpec> specs;
    for (PipelineKind kind : {PipelineKind::q_sdn, PipelineKind::r_sdn}) {
        for (std::int64_t n : counts) {
            for (std::int64_t t = 0; t < trials; ++t) {
                PipelineSpec spec;
                spec.kind = kind;
                spec.n_sensors = n;
                spec.arch = {30, 25};
                spec.train = train_cfg;
                spec.noise_psnr = 50.0;
                spec.seed = derive_seed(515, static_cast<std::uint64_t>(t));
                specs.push_back(std::move(spec));
            }
        }
    }

    const EnsembleResult res = run_ensemble(data, 100, SplitStrategy::random, specs, 2);
    const double elapsed = seconds_since(t0);

    auto re_of = [&](PipelineKind kind, std::int64_t n, std::int64_t t) {
        for (const TrialReport& r : res.reports) {
            if (r.kind == kind && r.n_sensors == n &&
                r.seed == derive_seed(515, static_cast<std::uint64_t>(t))) {
                if (!r.ok) throw std::runtime_error("trial failed: " + r.error);
                return r.relative_error;
            }
        }
        throw std::runtime_error("trial not found");
    };

    bool ordered = true;
    bool separated = true;
    std::string table;
    for (std::int64_t n : counts) {
        Vector diffs;
        double mean_q = 0.0, mean_r = 0.0;
        for (std::int64_t t = 0; t < trials; ++t) {
            const double q = re_of(PipelineKind::q_sdn, n, t);
            const double r = re_of(PipelineKind::r_sdn, n, t);
            mean_q += q;
            mean_r += r;
            diffs.push_back(r - q);
        }
        mean_q /= static_cast<double>(trials);
        mean_r /= static_cast<double>(trials);
        const auto d = oracles::two_pass_stats(diffs);
        const double se = d.stddev / std::sqrt(static_cast<double>(trials));
        if (mean_q > mean_r) ordered = false;
        if (n <= 3 && d.mean < 2.0 * se) separated = false;
        table += " n=" + std::to_string(n) + ": Q=" + fmt(mean_q) + " R=" + fmt(mean_r) +
                 " gap/se=" + fmt(se > 0 ? d.mean / se : 0.0) + ";";
    }

    Outcome out;
    out.pass = ordered && separated && elapsed < 300.0;
    out.detail = table + " " + fmt(elapsed) + "s";
    return out;
}

// ----------------------------------------------------------------------
// 6. Q-POD plateau analogue: RE non-increasing in n on noiseless in-span
//    data, reaching < 1e-8 at n = true rank.
Outcome criterion_qpod_plateau() {
    SyntheticSpec gen;
    gen.kind = SyntheticKind::rank_r_random;
    gen.state_dim = 500;
    gen.snapshots = 80;
    gen.rank = 5;
    gen.sigma = {1.0, 1e-1, 1e-2, 1e-3, 1e-4};
    gen.seed = 61;
    const SnapshotMatrix data = gen_synthetic(gen);
    const SplitResult sr = split(data, {60, 0, SplitStrategy::leading});

    Vector errs;
    for (std::int64_t n = 1; n <= 5; ++n) {
        PipelineSpec spec;
        spec.kind = PipelineKind::q_pod;
        spec.n_sensors = n;
        spec.rank_r = n;
        spec.seed = 62;
        errs.push_back(run_trial(spec, sr.train, sr.test).relative_error);
    }

    bool monotone = true;
    for (std::size_t i = 1; i < errs.size(); ++i) {
        if (errs[i] > errs[i - 1] * (1.0 + 1e-9) + 1e-12) monotone = false;
    }
    Outcome out;
    out.pass = monotone && errs.back() < 1e-8;
    out.detail = "RE(n=1..5) =";
    for (double e : errs) out.detail += " " + fmt(e);
    return out;
}

// ----------------------------------------------------------------------
// 7. P-SDN planted-relevance oracle: 16 candidate inputs, 2 carrying all
//    signal; both recovered in >= 80% of 20 seeds, survivor sets monotone.
Outcome criterion_planted_relevance() {
    const auto t0 = std::chrono::steady_clock::now();
    std::int64_t hits = 0;
    bool monotone = true;

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(7100 + seed);
        const std::int64_t n_samples = 160;
        Matrix s(16, n_samples);
        for (double& v : s.data()) v = rng.gaussian();
        Matrix x(24, n_samples);
        Rng wrng(7200 + seed);
        Vector w0(24), w1(24);
        for (double& v : w0) v = wrng.gaussian();
        for (double& v : w1) v = wrng.gaussian();
        for (std::int64_t j = 0; j < n_samples; ++j) {
            for (std::int64_t i = 0; i < 24; ++i) {
                x(i, j) = w0[static_cast<std::size_t>(i)] * s(0, j) +
                          w1[static_cast<std::size_t>(i)] * s(1, j);
            }
        }

        PruneSchedule schedule;
        schedule.fraction = 0.5;
        schedule.stop_at = 2;
        TrainConfig cfg;
        cfg.learning_rate = 0.01;
        cfg.max_epochs = 250;
        cfg.patience = 5;
        cfg.seed = 7300 + seed;
        const PruneRun run = iterative_prune(s, x, {}, schedule, cfg, {12});

        std::vector<std::int64_t> got = run.sensors.indices;
        std::sort(got.begin(), got.end());
        if (got == std::vector<std::int64_t>{0, 1}) ++hits;
        for (std::size_t i = 1; i < run.trajectory.size(); ++i) {
            if (run.trajectory[i].survivors >= run.trajectory[i - 1].survivors) monotone = false;
        }
        if (run.trajectory.back().survivors != 2) monotone = false;
    }

    const double elapsed = seconds_since(t0);
    Outcome out;
    out.pass = hits >= 16 && monotone;
    out.detail = std::to_string(hits) + "/20 seeds recovered {0,1}, monotone=" +
                 (monotone ? "yes" : "no") + ", " + fmt(elapsed) + "s";
    return out;
}

// ----------------------------------------------------------------------
// 8. Relative-error metric equivalence against an independent two-loop oracle.
Outcome criterion_metric_oracle() {
    Rng rng(90);
    double worst = 0.0;
    for (int instance = 0; instance < 100; ++instance) {
        const std::int64_t m = 2 + static_cast<std::int64_t>(rng.uniform_below(20));
        const std::int64_t n = 1 + static_cast<std::int64_t>(rng.uniform_below(10));
        Matrix x(m, n), xhat(m, n);
        Vector mean(static_cast<std::size_t>(m));
        for (double& v : mean) v = rng.gaussian();
        for (double& v : x.data()) v = 2.0 * rng.gaussian();
        for (double& v : xhat.data()) v = 2.0 * rng.gaussian();
        const double lib = relative_error(xhat, x, mean).mean;
        const double oracle = oracles::two_loop_relative_error(xhat, x, mean);
        worst = std::max(worst, std::abs(lib - oracle));
    }
    Outcome out;
    out.pass = worst < 1e-12;
    out.detail = "100 instances, worst deviation " + fmt(worst);
    return out;
}

// ----------------------------------------------------------------------
// 9. Determinism: rerunning the CLI bench with an identical config and
//    master seed produces byte-identical artifacts (wall-clock timings,
//    the one non-artifact field, excluded).
Outcome criterion_determinism() {
    const fs::path dir = fs::temp_directory_path() / "sensekit_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);

    json cfg;
    cfg["dataset"] = {{"kind", "traveling_wave"}, {"rows", 12}, {"cols", 14},
                      {"snapshots", 60},          {"waves", 2},  {"seed", 5}};
    cfg["split"] = {{"train_count", 45}, {"strategy", "random"}};
    cfg["pipelines"] = {"q_pod", "q_sdn", "r_sdn", "p_sdn"};
    cfg["sensor_counts"] = {2, 4};
    cfg["trials"] = 2;
    cfg["master_seed"] = 404;
    cfg["arch"] = {8, 8};
    cfg["train"] = {{"learning_rate", 0.01}, {"max_epochs", 30}, {"patience", 5}};
    cfg["prune"] = {{"fraction", 0.3}, {"candidate_pool", 24}};
    cfg["emit_pgm"] = true;
    write_json((dir / "cfg.json").string(), cfg);

    auto run_once = [&](const std::string& out) {
        const std::string cmd = std::string(SENSEKIT_CLI_PATH) + " --quiet bench --config " +
                                (dir / "cfg.json").string() + " --out " + (dir / out).string() +
                                " 2>/dev/null";
        return WEXITSTATUS(std::system(cmd.c_str()));
    };
    if (run_once("a") != 0 || run_once("b") != 0) {
        return {false, "bench invocation failed"};
    }

    auto strip_wall_time = [](const std::string& csv) {
        std::string out;
        std::size_t pos = 0;
        while (pos < csv.size()) {
            std::size_t eol = csv.find('\n', pos);
            if (eol == std::string::npos) eol = csv.size();
            const std::string line = csv.substr(pos, eol - pos);
            out += line.substr(0, line.rfind(',')) + "\n";
            pos = eol + 1;
        }
        return out;
    };

    std::int64_t mismatches = 0;
    std::int64_t compared = 0;
    if (strip_wall_time(read_text((dir / "a/trials.csv").string())) !=
        strip_wall_time(read_text((dir / "b/trials.csv").string()))) {
        ++mismatches;
    }
    ++compared;
    for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
        if (!entry.is_regular_file()) continue;
        const fs::path rel = fs::relative(entry.path(), dir / "a");
        if (rel == "trials.csv") continue;
        ++compared;
        if (!fs::exists(dir / "b" / rel) ||
            read_text(entry.path().string()) != read_text((dir / "b" / rel).string())) {
            ++mismatches;
        }
    }

    Outcome out;
    out.pass = mismatches == 0;
    out.detail = std::to_string(compared) + " artifacts compared, " +
                 std::to_string(mismatches) + " mismatches";
    return out;
}

// ----------------------------------------------------------------------
// 10. Noise calibration at the two PSNR regimes used in the experiments.
Outcome criterion_noise_calibration() {
    SnapshotMatrix x;
    x.values = Matrix(400, 300); // 120k entries
    Rng rng(55);
    for (double& v : x.values.data()) v = 8.0 * rng.uniform01();
    x.values(0, 0) = 10.0; // pins max|x|

    std::string detail;
    bool pass = true;
    for (double psnr : {20.0, 50.0}) {
        const double sigma_expected = 10.0 * std::pow(10.0, -psnr / 20.0);
        const SnapshotMatrix noisy = add_noise(x, {psnr, 550});
        Vector eps(x.values.data().size());
        for (std::size_t i = 0; i < eps.size(); ++i) {
            eps[i] = noisy.values.data()[i] - x.values.data()[i];
        }
        const auto stats = oracles::two_pass_stats(eps);
        const double rel = std::abs(stats.stddev - sigma_expected) / sigma_expected;
        pass = pass && rel < 0.02;
        detail += " PSNR" + fmt(psnr) + ": sigma=" + fmt(stats.stddev) + " expected=" +
                  fmt(sigma_expected) + " (" + fmt(100.0 * rel) + "%);";
    }
    return {pass, detail};
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "exact-recovery oracle (q_pod, n=r=5, m=2000)", criterion_exact_recovery},
        {2, "gradient correctness vs central differences", criterion_gradients},
        {3, "greedy pivot optimality (brute force)", criterion_greedy_pivots},
        {4, "mask semantics (forward bits + zero gradients)", criterion_mask_semantics},
        {5, "Q-SDN vs R-SDN trend on traveling wave", criterion_qsdn_trend},
        {6, "Q-POD error non-increasing, exact at true rank", criterion_qpod_plateau},
        {7, "P-SDN planted-relevance recovery", criterion_planted_relevance},
        {8, "relative-error metric vs two-loop oracle", criterion_metric_oracle},
        {9, "pipeline determinism (byte-identical artifacts)", criterion_determinism},
        {10, "noise calibration at PSNR 20/50", criterion_noise_calibration},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        if (!out.pass) ++failures;
        std::printf("[%s] %2d. %s: %s\n", out.pass ? "PASS" : "FAIL", c.id, c.name,
                    out.detail.c_str());
        std::fflush(stdout);
    }
    if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
    return failures;
}
