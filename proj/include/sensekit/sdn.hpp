#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "sensekit/io.hpp"
#include "sensekit/matrix.hpp"
#include "sensekit/rng.hpp"
#include "sensekit/sensor_set.hpp"

namespace sensekit {

enum class Act { relu, tanh, linear };

inline const char* to_string(Act a) {
    switch (a) {
        case Act::relu: return "relu";
        case Act::tanh: return "tanh";
        case Act::linear: return "linear";
    }
    return "?";
}

inline Act act_from_string(const std::string& s) {
    if (s == "relu") return Act::relu;
    if (s == "tanh") return Act::tanh;
    if (s == "linear") return Act::linear;
    throw std::runtime_error("unknown activation: " + s);
}

/// One affine layer. Weights are stored row-major (out x in) so the forward
/// dot products and the backward rank-1 updates both run over contiguous
/// memory.
struct Dense {
    std::int64_t out_dim = 0;
    std::int64_t in_dim = 0;
    std::vector<double> w; // w[i*in_dim + k]
    std::vector<double> b; // length out_dim

    Dense() = default;
    Dense(std::int64_t out, std::int64_t in)
        : out_dim(out), in_dim(in), w(static_cast<std::size_t>(out * in), 0.0),
          b(static_cast<std::size_t>(out), 0.0) {}
};

/// Shallow decoder network: a small fully connected net mapping sensor
/// measurements to the full state. The binary input mask realizes pruning;
/// masked inputs are zeroed before the first layer and their first-layer
/// weight gradients are pinned to zero, so they can never influence the
/// output or recover during training.
struct SdnModel {
    std::vector<std::int64_t> layer_sizes; // d0 .. dk
    std::vector<Dense> layers;             // k entries
    std::vector<std::uint8_t> input_mask;  // length d0, entries 0/1
    Act hidden_activation = Act::relu;
    Act output_activation = Act::linear;
    bool use_bias = true;

    std::int64_t input_dim() const { return layer_sizes.front(); }
    std::int64_t output_dim() const { return layer_sizes.back(); }

    std::int64_t surviving_inputs() const {
        std::int64_t n = 0;
        for (std::uint8_t v : input_mask) n += v;
        return n;
    }

    std::vector<std::int64_t> surviving_indices() const {
        std::vector<std::int64_t> idx;
        for (std::size_t i = 0; i < input_mask.size(); ++i) {
            if (input_mask[i]) idx.push_back(static_cast<std::int64_t>(i));
        }
        return idx;
    }
};

enum class InitKind { glorot_uniform, small_normal };

inline const char* to_string(InitKind k) {
    return k == InitKind::glorot_uniform ? "glorot_uniform" : "small_normal";
}

inline InitKind init_from_string(const std::string& s) {
    if (s == "glorot_uniform") return InitKind::glorot_uniform;
    if (s == "small_normal") return InitKind::small_normal;
    throw std::runtime_error("unknown init kind: " + s);
}

namespace detail {

/// Re-draws every weight from the init distribution (biases stay zero).
/// Draws happen in storage order regardless of the mask so the stream is
/// reproducible; masked first-layer columns are zeroed afterwards.
inline void draw_parameters(SdnModel& model, Rng& rng, InitKind init) {
    for (Dense& layer : model.layers) {
        if (init == InitKind::glorot_uniform) {
            const double limit = std::sqrt(6.0 / static_cast<double>(layer.in_dim + layer.out_dim));
            for (double& v : layer.w) v = (2.0 * rng.uniform01() - 1.0) * limit;
        } else {
            for (double& v : layer.w) v = 0.01 * rng.gaussian();
        }
        std::fill(layer.b.begin(), layer.b.end(), 0.0);
    }
    Dense& first = model.layers.front();
    for (std::int64_t k = 0; k < first.in_dim; ++k) {
        if (model.input_mask[static_cast<std::size_t>(k)]) continue;
        for (std::int64_t i = 0; i < first.out_dim; ++i) first.w[i * first.in_dim + k] = 0.0;
    }
}

// out = W*in (+ bias), column-major batches. Loops put the wide dimension
// outermost so each weight row streams through cache exactly once.
inline void affine_forward(const Dense& layer, bool use_bias, const Matrix& in, Matrix& out) {
    const std::int64_t dout = layer.out_dim;
    const std::int64_t din = layer.in_dim;
    const std::int64_t batch = in.cols();
    for (std::int64_t i = 0; i < dout; ++i) {
        const double* wrow = layer.w.data() + i * din;
        const double bias = use_bias ? layer.b[static_cast<std::size_t>(i)] : 0.0;
        for (std::int64_t b = 0; b < batch; ++b) {
            const double* ic = in.col(b);
            double acc = bias;
            for (std::int64_t k = 0; k < din; ++k) acc += wrow[k] * ic[k];
            out(i, b) = acc;
        }
    }
}

// grad_in = W' * delta (grad_in must be zeroed by the caller)
inline void affine_backward_data(const Dense& layer, const Matrix& delta, Matrix& grad_in) {
    const std::int64_t dout = layer.out_dim;
    const std::int64_t din = layer.in_dim;
    const std::int64_t batch = delta.cols();
    for (std::int64_t i = 0; i < dout; ++i) {
        const double* wrow = layer.w.data() + i * din;
        for (std::int64_t b = 0; b < batch; ++b) {
            const double g = delta(i, b);
            if (g == 0.0) continue;
            double* gc = grad_in.col(b);
            for (std::int64_t k = 0; k < din; ++k) gc[k] += g * wrow[k];
        }
    }
}

// grad_w += delta * in', grad_b += rowsum(delta)
inline void affine_backward_params(const Matrix& in, const Matrix& delta, Dense& grad) {
    const std::int64_t dout = grad.out_dim;
    const std::int64_t din = grad.in_dim;
    const std::int64_t batch = delta.cols();
    for (std::int64_t i = 0; i < dout; ++i) {
        double* gwrow = grad.w.data() + i * din;
        double gb = 0.0;
        for (std::int64_t b = 0; b < batch; ++b) {
            const double g = delta(i, b);
            gb += g;
            if (g == 0.0) continue;
            const double* ic = in.col(b);
            for (std::int64_t k = 0; k < din; ++k) gwrow[k] += g * ic[k];
        }
        grad.b[static_cast<std::size_t>(i)] += gb;
    }
}

inline void apply_activation(Act act, Matrix& z) {
    switch (act) {
        case Act::relu:
            for (double& v : z.data()) v = v > 0.0 ? v : 0.0;
            break;
        case Act::tanh:
            for (double& v : z.data()) v = std::tanh(v);
            break;
        case Act::linear: break;
    }
}

// derivative expressed through the activation value
inline double activation_slope(Act act, double a) {
    switch (act) {
        case Act::relu: return a > 0.0 ? 1.0 : 0.0;
        case Act::tanh: return 1.0 - a * a;
        case Act::linear: return 1.0;
    }
    return 1.0;
}

inline Matrix masked_input(const SdnModel& model, const Matrix& s) {
    if (s.rows() != model.input_dim()) {
        throw std::invalid_argument("forward: input width " + std::to_string(s.rows()) +
                                    " does not match model input " +
                                    std::to_string(model.input_dim()));
    }
    Matrix a0 = s;
    for (std::int64_t k = 0; k < a0.rows(); ++k) {
        if (model.input_mask[static_cast<std::size_t>(k)]) continue;
        for (std::int64_t b = 0; b < a0.cols(); ++b) a0(k, b) = 0.0;
    }
    return a0;
}

/// Activations a0..ak; a0 is the masked input.
inline std::vector<Matrix> forward_cached(const SdnModel& model, const Matrix& s) {
    std::vector<Matrix> acts;
    acts.reserve(model.layers.size() + 1);
    acts.push_back(masked_input(model, s));
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const Dense& layer = model.layers[l];
        Matrix z(layer.out_dim, s.cols());
        affine_forward(layer, model.use_bias, acts.back(), z);
        apply_activation(l + 1 == model.layers.size() ? model.output_activation
                                                      : model.hidden_activation,
                         z);
        acts.push_back(std::move(z));
    }
    return acts;
}

} // namespace detail

inline void validate_architecture(const std::vector<std::int64_t>& layer_sizes, Act hidden,
                                  Act output) {
    if (layer_sizes.size() < 3) {
        throw std::invalid_argument("SdnModel needs at least two weight layers");
    }
    for (std::int64_t d : layer_sizes) {
        if (d < 1) throw std::invalid_argument("SdnModel: layer sizes must be positive");
    }
    if (hidden != Act::relu && hidden != Act::tanh) {
        throw std::invalid_argument("hidden activation must be relu or tanh");
    }
    if (output != Act::linear && output != Act::relu) {
        throw std::invalid_argument("output activation must be linear or relu");
    }
}

inline SdnModel init_model(const std::vector<std::int64_t>& layer_sizes, Act hidden_act,
                           Act output_act, std::uint64_t seed,
                           InitKind init = InitKind::glorot_uniform, bool use_bias = true) {
    validate_architecture(layer_sizes, hidden_act, output_act);
    SdnModel model;
    model.layer_sizes = layer_sizes;
    model.hidden_activation = hidden_act;
    model.output_activation = output_act;
    model.use_bias = use_bias;
    model.input_mask.assign(static_cast<std::size_t>(layer_sizes.front()), 1);
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        model.layers.emplace_back(layer_sizes[l + 1], layer_sizes[l]);
    }
    Rng rng(seed);
    detail::draw_parameters(model, rng, init);
    return model;
}

inline Matrix forward(const SdnModel& model, const Matrix& s) {
    std::vector<Matrix> acts = detail::forward_cached(model, s);
    Matrix out = std::move(acts.back());
    if (!out.all_finite()) throw std::runtime_error("forward: non-finite output");
    return out;
}

inline Vector forward(const SdnModel& model, const Vector& s) {
    Matrix in(static_cast<std::int64_t>(s.size()), 1);
    std::copy(s.begin(), s.end(), in.col(0));
    return forward(model, in).col_copy(0);
}

struct LossGrad {
    double loss = 0.0;
    std::vector<Dense> grads; // same shapes as model.layers
};

/// Mean squared error over every output entry of the batch, with exact
/// reverse-mode gradients. Masked input columns of W1 get exactly zero
/// gradient (the mask is not trainable).
inline LossGrad loss_and_gradients(const SdnModel& model, const Matrix& s_batch,
                                   const Matrix& x_batch) {
    if (s_batch.cols() != x_batch.cols()) {
        throw std::invalid_argument("loss_and_gradients: batch size mismatch");
    }
    if (x_batch.rows() != model.output_dim()) {
        throw std::invalid_argument("loss_and_gradients: target width mismatch");
    }
    const std::int64_t batch = s_batch.cols();
    const std::int64_t m_out = model.output_dim();

    std::vector<Matrix> acts = detail::forward_cached(model, s_batch);

    LossGrad result;
    for (const Dense& layer : model.layers) {
        result.grads.emplace_back(layer.out_dim, layer.in_dim);
    }

    const double scale = 1.0 / static_cast<double>(batch * m_out);
    Matrix delta(m_out, batch);
    double loss = 0.0;
    {
        const Matrix& pred = acts.back();
        for (std::int64_t b = 0; b < batch; ++b) {
            const double* pc = pred.col(b);
            const double* xc = x_batch.col(b);
            double* dc = delta.col(b);
            for (std::int64_t i = 0; i < m_out; ++i) {
                const double r = pc[i] - xc[i];
                loss += r * r;
                double d = 2.0 * scale * r;
                if (model.output_activation != Act::linear) {
                    d *= detail::activation_slope(model.output_activation, pc[i]);
                }
                dc[i] = d;
            }
        }
        loss *= scale;
    }
    if (!std::isfinite(loss)) throw std::runtime_error("loss_and_gradients: non-finite loss");
    result.loss = loss;

    for (std::size_t l = model.layers.size(); l-- > 0;) {
        const Dense& layer = model.layers[l];
        detail::affine_backward_params(acts[l], delta, result.grads[l]);
        if (l > 0) {
            Matrix grad_in(layer.in_dim, batch);
            detail::affine_backward_data(layer, delta, grad_in);
            const Matrix& a_prev = acts[l];
            for (std::int64_t b = 0; b < batch; ++b) {
                double* gc = grad_in.col(b);
                const double* ac = a_prev.col(b);
                for (std::int64_t k = 0; k < layer.in_dim; ++k) {
                    gc[k] *= detail::activation_slope(model.hidden_activation, ac[k]);
                }
            }
            delta = std::move(grad_in);
        }
    }

    // Pin pruned-input gradients; the masked activations already make them
    // zero, this keeps the contract airtight against rounding surprises.
    Dense& g1 = result.grads.front();
    for (std::int64_t k = 0; k < g1.in_dim; ++k) {
        if (model.input_mask[static_cast<std::size_t>(k)]) continue;
        for (std::int64_t i = 0; i < g1.out_dim; ++i) g1.w[i * g1.in_dim + k] = 0.0;
    }
    if (!model.use_bias) {
        for (Dense& g : result.grads) std::fill(g.b.begin(), g.b.end(), 0.0);
    }
    return result;
}

inline double mse_loss(const SdnModel& model, const Matrix& s_batch, const Matrix& x_batch) {
    const Matrix pred = forward(model, s_batch);
    double loss = 0.0;
    for (std::size_t i = 0; i < pred.data().size(); ++i) {
        const double r = pred.data()[i] - x_batch.data()[i];
        loss += r * r;
    }
    return loss / static_cast<double>(pred.rows() * pred.cols());
}

struct TrainConfig {
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::int64_t max_epochs = 1000;
    std::int64_t patience = 5;
    std::int64_t batch_size = 0; // 0 = full batch
    double val_fraction = 0.1;   // held out for early stopping
    std::uint64_t seed = 0;
    InitKind init = InitKind::glorot_uniform;

    void validate() const {
        if (!(learning_rate >= 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be >= 0");
        if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
            throw std::invalid_argument("TrainConfig: adam betas must lie in (0, 1)");
        }
        if (!(adam_eps > 0.0)) throw std::invalid_argument("TrainConfig: adam_eps must be positive");
        if (max_epochs < 0) throw std::invalid_argument("TrainConfig: max_epochs must be >= 0");
        if (patience < 1) throw std::invalid_argument("TrainConfig: patience must be >= 1");
        if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
            throw std::invalid_argument("TrainConfig: val_fraction must lie in [0, 1)");
        }
    }
};

struct EpochStats {
    std::int64_t epoch = 0; // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainResult {
    SdnModel model; // parameters from the best validation epoch
    std::vector<EpochStats> history;
    std::int64_t best_epoch = 0;
    double best_val_loss = std::numeric_limits<double>::infinity();
    std::vector<std::int64_t> val_columns; // holdout columns used for early stopping
};

inline void write_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
    std::string out = "epoch,train_loss,val_loss\n";
    for (const EpochStats& e : history) {
        out += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," +
               format_double(e.val_loss) + "\n";
    }
    write_text(path, out);
}

namespace detail {

struct AdamState {
    std::vector<Dense> m;
    std::vector<Dense> v;
    std::int64_t t = 0;
};

inline void adam_step(SdnModel& model, const std::vector<Dense>& grads, AdamState& state,
                      const TrainConfig& cfg) {
    ++state.t;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.t));
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        auto update = [&](std::vector<double>& p, std::vector<double>& m, std::vector<double>& v,
                          const std::vector<double>& g) {
            for (std::size_t i = 0; i < p.size(); ++i) {
                m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g[i];
                v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g[i] * g[i];
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                p[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
            }
        };
        update(model.layers[l].w, state.m[l].w, state.v[l].w, grads[l].w);
        if (model.use_bias) update(model.layers[l].b, state.m[l].b, state.v[l].b, grads[l].b);
    }
}

inline Matrix gather_cols(const Matrix& x, const std::vector<std::int64_t>& idx) {
    Matrix out(x.rows(), static_cast<std::int64_t>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
        const double* src = x.col(idx[j]);
        std::copy(src, src + x.rows(), out.col(static_cast<std::int64_t>(j)));
    }
    return out;
}

} // namespace detail

/// ADAM training with validation-loss early stopping: stops after `patience`
/// consecutive epochs without improvement and returns the parameters of the
/// best validation epoch, never the last. With val_fraction = 0 the training
/// loss is monitored instead.
inline TrainResult train(const SdnModel& model_in, const Matrix& s_train, const Matrix& x_train,
                         const TrainConfig& cfg) {
    cfg.validate();
    if (s_train.cols() != x_train.cols() || s_train.cols() < 1) {
        throw std::invalid_argument("train: need matching, nonempty training batches");
    }
    if (s_train.rows() != model_in.input_dim() || x_train.rows() != model_in.output_dim()) {
        throw std::invalid_argument("train: data width does not match model architecture");
    }

    const std::int64_t n_total = s_train.cols();
    std::vector<std::int64_t> train_idx;
    std::vector<std::int64_t> val_idx;
    if (cfg.val_fraction > 0.0) {
        std::int64_t n_val = std::max<std::int64_t>(
            1, static_cast<std::int64_t>(std::llround(cfg.val_fraction * static_cast<double>(n_total))));
        if (n_val >= n_total) {
            throw std::invalid_argument("train: validation split leaves no training columns");
        }
        std::vector<std::int64_t> perm(static_cast<std::size_t>(n_total));
        std::iota(perm.begin(), perm.end(), 0);
        Rng rng(derive_seed(cfg.seed, 11));
        rng.shuffle(perm);
        val_idx.assign(perm.begin(), perm.begin() + n_val);
        train_idx.assign(perm.begin() + n_val, perm.end());
        std::sort(val_idx.begin(), val_idx.end());
        std::sort(train_idx.begin(), train_idx.end());
    } else {
        train_idx.resize(static_cast<std::size_t>(n_total));
        std::iota(train_idx.begin(), train_idx.end(), 0);
    }

    const Matrix s_fit = detail::gather_cols(s_train, train_idx);
    const Matrix x_fit = detail::gather_cols(x_train, train_idx);
    const Matrix s_val = val_idx.empty() ? Matrix() : detail::gather_cols(s_train, val_idx);
    const Matrix x_val = val_idx.empty() ? Matrix() : detail::gather_cols(x_train, val_idx);
    const std::int64_t n_fit = s_fit.cols();

    TrainResult result;
    result.model = model_in;
    result.val_columns = val_idx;
    SdnModel current = model_in;

    detail::AdamState adam;
    for (const Dense& layer : current.layers) {
        adam.m.emplace_back(layer.out_dim, layer.in_dim);
        adam.v.emplace_back(layer.out_dim, layer.in_dim);
    }

    std::int64_t stale_epochs = 0;
    const bool full_batch = cfg.batch_size <= 0 || cfg.batch_size >= n_fit;

    for (std::int64_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        double epoch_loss = 0.0;
        try {
            if (full_batch) {
                LossGrad lg = loss_and_gradients(current, s_fit, x_fit);
                epoch_loss = lg.loss;
                detail::adam_step(current, lg.grads, adam, cfg);
            } else {
                std::vector<std::int64_t> order(static_cast<std::size_t>(n_fit));
                std::iota(order.begin(), order.end(), 0);
                Rng rng(derive_seed(cfg.seed, 5000 + static_cast<std::uint64_t>(epoch)));
                rng.shuffle(order);
                for (std::int64_t start = 0; start < n_fit; start += cfg.batch_size) {
                    const std::int64_t stop = std::min(start + cfg.batch_size, n_fit);
                    std::vector<std::int64_t> batch_idx(order.begin() + start, order.begin() + stop);
                    LossGrad lg = loss_and_gradients(current, detail::gather_cols(s_fit, batch_idx),
                                                     detail::gather_cols(x_fit, batch_idx));
                    epoch_loss += lg.loss * static_cast<double>(stop - start);
                    detail::adam_step(current, lg.grads, adam, cfg);
                }
                epoch_loss /= static_cast<double>(n_fit);
            }
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("train: diverged at epoch " + std::to_string(epoch) + ": " +
                                     e.what());
        }

        const double val_loss = val_idx.empty() ? epoch_loss : mse_loss(current, s_val, x_val);
        if (!std::isfinite(val_loss)) {
            throw std::runtime_error("train: diverged at epoch " + std::to_string(epoch) +
                                     ": non-finite validation loss");
        }
        result.history.push_back({epoch, epoch_loss, val_loss});

        if (val_loss < result.best_val_loss) {
            result.best_val_loss = val_loss;
            result.best_epoch = epoch;
            result.model = current;
            stale_epochs = 0;
        } else {
            ++stale_epochs;
            if (stale_epochs >= cfg.patience) break;
        }
    }

    if (result.best_epoch == 0) result.model = std::move(current); // max_epochs == 0
    return result;
}

/// Masks the (surviving - keep) surviving inputs whose first-layer weight
/// columns have the smallest root mean square. Already-masked inputs stay
/// masked; ties resolve to the lowest input index.
inline SdnModel prune_inputs(const SdnModel& model, std::int64_t keep) {
    const std::int64_t surviving = model.surviving_inputs();
    if (keep < 1 || keep >= surviving) {
        throw std::invalid_argument("prune_inputs: keep " + std::to_string(keep) +
                                    " out of range for " + std::to_string(surviving) +
                                    " surviving inputs");
    }
    const Dense& first = model.layers.front();
    std::vector<std::pair<double, std::int64_t>> rms;
    for (std::int64_t k = 0; k < first.in_dim; ++k) {
        if (!model.input_mask[static_cast<std::size_t>(k)]) continue;
        double s = 0.0;
        for (std::int64_t i = 0; i < first.out_dim; ++i) {
            const double w = first.w[i * first.in_dim + k];
            s += w * w;
        }
        rms.emplace_back(std::sqrt(s / static_cast<double>(first.out_dim)), k);
    }
    std::sort(rms.begin(), rms.end());

    SdnModel pruned = model;
    for (std::int64_t drop = 0; drop < surviving - keep; ++drop) {
        pruned.input_mask[static_cast<std::size_t>(rms[static_cast<std::size_t>(drop)].second)] = 0;
    }
    return pruned;
}

enum class PruneMode { fraction_of_remaining, target_sparsity_ladder };

struct PruneSchedule {
    PruneMode mode = PruneMode::fraction_of_remaining;
    double fraction = 0.2;       // fraction of surviving inputs pruned per round
    std::vector<double> ladder;  // sparsity targets relative to the original width
    std::int64_t stop_at = 1;

    void validate() const {
        if (stop_at < 1) throw std::invalid_argument("PruneSchedule: stop_at must be >= 1");
        if (mode == PruneMode::fraction_of_remaining) {
            if (!(fraction > 0.0 && fraction < 1.0)) {
                throw std::invalid_argument("PruneSchedule: fraction must lie in (0, 1)");
            }
        } else {
            if (ladder.empty()) throw std::invalid_argument("PruneSchedule: ladder is empty");
            for (std::size_t i = 0; i < ladder.size(); ++i) {
                if (!(ladder[i] >= 0.0 && ladder[i] < 1.0)) {
                    throw std::invalid_argument("PruneSchedule: ladder entries must lie in [0, 1)");
                }
                if (i > 0 && ladder[i] <= ladder[i - 1]) {
                    throw std::invalid_argument("PruneSchedule: ladder must be strictly increasing");
                }
            }
        }
    }

    /// Surviving count after the next prune, clamped to stop_at.
    std::int64_t next_keep(std::int64_t surviving, std::int64_t original_width) const {
        if (mode == PruneMode::fraction_of_remaining) {
            const std::int64_t pruned = std::max<std::int64_t>(
                1, std::llround(fraction * static_cast<double>(surviving)));
            return std::max(stop_at, surviving - pruned);
        }
        for (double sparsity : ladder) {
            const std::int64_t keep = static_cast<std::int64_t>(
                std::llround((1.0 - sparsity) * static_cast<double>(original_width)));
            if (keep < surviving) return std::max(stop_at, keep);
        }
        return stop_at;
    }
};

struct PruneStage {
    std::int64_t survivors = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct PruneRun {
    SensorSet sensors;
    SdnModel model; // trained at stop_at survivors
    std::vector<PruneStage> trajectory;
};

/// Iterative input pruning: train to early stop, prune the lowest-RMS
/// inputs per the schedule, reinitialize the surviving weights with a
/// stage-derived seed, repeat until stop_at inputs survive. `candidates`
/// maps input rows of s_full to state indices (empty = identity over the
/// input width).
inline PruneRun iterative_prune(const Matrix& s_full, const Matrix& x,
                                const std::vector<std::int64_t>& candidates,
                                const PruneSchedule& schedule, const TrainConfig& cfg,
                                const std::vector<std::int64_t>& hidden_arch,
                                Act hidden_act = Act::relu, Act output_act = Act::linear) {
    schedule.validate();
    cfg.validate();
    const std::int64_t d0 = s_full.rows();
    if (!candidates.empty() && static_cast<std::int64_t>(candidates.size()) != d0) {
        throw std::invalid_argument("iterative_prune: candidate map length mismatch");
    }
    if (schedule.stop_at >= d0) {
        throw std::invalid_argument("iterative_prune: stop_at must be below the candidate count");
    }

    std::vector<std::int64_t> sizes;
    sizes.push_back(d0);
    sizes.insert(sizes.end(), hidden_arch.begin(), hidden_arch.end());
    sizes.push_back(x.rows());

    SdnModel model = init_model(sizes, hidden_act, output_act, derive_seed(cfg.seed, 100),
                                cfg.init);
    PruneRun run;

    std::int64_t stage = 0;
    while (true) {
        TrainConfig stage_cfg = cfg;
        stage_cfg.seed = derive_seed(cfg.seed, 200 + static_cast<std::uint64_t>(stage));
        TrainResult trained = train(model, s_full, x, stage_cfg);
        model = trained.model;

        const std::int64_t survivors = model.surviving_inputs();
        const EpochStats last = trained.history.empty() ? EpochStats{} : trained.history.back();
        run.trajectory.push_back({survivors, last.train_loss, trained.best_val_loss});

        if (survivors <= schedule.stop_at) break;

        model = prune_inputs(model, schedule.next_keep(survivors, d0));
        Rng rng(derive_seed(cfg.seed, 300 + static_cast<std::uint64_t>(stage)));
        detail::draw_parameters(model, rng, cfg.init);
        ++stage;
    }

    run.sensors.m = candidates.empty() ? d0 : x.rows();
    for (std::int64_t k : model.surviving_indices()) {
        run.sensors.indices.push_back(candidates.empty() ? k
                                                         : candidates[static_cast<std::size_t>(k)]);
    }
    run.sensors.method = PlacementMethod::pruned;
    run.sensors.seed = cfg.seed;
    run.model = std::move(model);
    return run;
}

/// Checkpoint: raw float64 tensors (W1, b1, W2, b2, ...) plus a JSON
/// manifest. Optional centering vectors (sensor mean, state mean) travel in
/// the same blob so a saved decoder is self-contained.
inline void save_model(const SdnModel& model, const std::string& path,
                       const std::string& config_fingerprint = "",
                       const Vector& input_center = {}, const Vector& output_center = {}) {
    std::vector<double> blob;
    for (const Dense& layer : model.layers) {
        blob.insert(blob.end(), layer.w.begin(), layer.w.end());
        blob.insert(blob.end(), layer.b.begin(), layer.b.end());
    }
    if (!input_center.empty() || !output_center.empty()) {
        if (static_cast<std::int64_t>(input_center.size()) != model.input_dim() ||
            static_cast<std::int64_t>(output_center.size()) != model.output_dim()) {
            throw std::invalid_argument("save_model: centering vector lengths mismatch");
        }
        blob.insert(blob.end(), input_center.begin(), input_center.end());
        blob.insert(blob.end(), output_center.begin(), output_center.end());
    }
    write_f64(path, blob);

    json side;
    side["layer_sizes"] = model.layer_sizes;
    side["hidden_activation"] = to_string(model.hidden_activation);
    side["output_activation"] = to_string(model.output_activation);
    side["use_bias"] = model.use_bias;
    side["input_mask"] = model.input_mask;
    side["centering"] = !input_center.empty();
    if (!config_fingerprint.empty()) side["config_fingerprint"] = config_fingerprint;
    write_json(path + ".json", side);
}

struct LoadedModel {
    SdnModel model;
    Vector input_center;  // empty when the checkpoint has no centering
    Vector output_center;
};

inline LoadedModel load_model(const std::string& path) {
    const json side = read_json(path + ".json");
    require_keys(side,
                 {"layer_sizes", "hidden_activation", "output_activation", "use_bias",
                  "input_mask", "centering", "config_fingerprint"},
                 path + ".json");

    LoadedModel loaded;
    SdnModel& model = loaded.model;
    model.layer_sizes = side.at("layer_sizes").get<std::vector<std::int64_t>>();
    model.hidden_activation = act_from_string(side.at("hidden_activation").get<std::string>());
    model.output_activation = act_from_string(side.at("output_activation").get<std::string>());
    model.use_bias = side.at("use_bias").get<bool>();
    model.input_mask = side.at("input_mask").get<std::vector<std::uint8_t>>();
    validate_architecture(model.layer_sizes, model.hidden_activation, model.output_activation);
    if (static_cast<std::int64_t>(model.input_mask.size()) != model.layer_sizes.front()) {
        throw std::runtime_error(path + ": input mask length does not match layer sizes");
    }

    const std::vector<double> blob = read_f64(path);
    std::size_t expected = 0;
    for (std::size_t l = 0; l + 1 < model.layer_sizes.size(); ++l) {
        expected += static_cast<std::size_t>(model.layer_sizes[l + 1]) *
                        static_cast<std::size_t>(model.layer_sizes[l]) +
                    static_cast<std::size_t>(model.layer_sizes[l + 1]);
    }
    const bool centering = side.at("centering").get<bool>();
    if (centering) {
        expected += static_cast<std::size_t>(model.layer_sizes.front()) +
                    static_cast<std::size_t>(model.layer_sizes.back());
    }
    if (blob.size() != expected) {
        throw std::runtime_error(path + ": tensor blob size does not match manifest");
    }

    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < model.layer_sizes.size(); ++l) {
        Dense layer(model.layer_sizes[l + 1], model.layer_sizes[l]);
        std::copy(blob.begin() + off, blob.begin() + off + layer.w.size(), layer.w.begin());
        off += layer.w.size();
        std::copy(blob.begin() + off, blob.begin() + off + layer.b.size(), layer.b.begin());
        off += layer.b.size();
        model.layers.push_back(std::move(layer));
    }
    if (centering) {
        loaded.input_center.assign(blob.begin() + off,
                                   blob.begin() + off + model.layer_sizes.front());
        off += static_cast<std::size_t>(model.layer_sizes.front());
        loaded.output_center.assign(blob.begin() + off, blob.end());
    }
    return loaded;
}

} // namespace sensekit
