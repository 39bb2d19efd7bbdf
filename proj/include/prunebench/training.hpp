#pragma once

// Backprop through time for the full network, Adam, a seeded synthetic
// denoising task and the fine-tuning experiments built on top of them.

#include "prunebench/inference.hpp"
#include "prunebench/layers.hpp"
#include "prunebench/model.hpp"
#include "prunebench/pruning.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace prunebench {

template <typename T = float>
using Sequence = std::vector<std::vector<T>>;

template <typename T = float>
struct Example {
    Sequence<T> noisy;
    Sequence<T> clean;
};

// ---------------------------------------------------------------------------
// Synthetic data

struct SynthConfig {
    std::uint64_t seed = 42;
    std::size_t num_sequences = 32;
    std::size_t frames_per_sequence = 32;
    std::size_t freq_bins = 16;
    double snr_db = 0.0;
    /// Per-sequence SNR is drawn uniformly from snr_db +- snr_spread_db.
    double snr_spread_db = 10.0;
    /// Per-frame probability that a ridge toggles between active and silent.
    double activity_switch_prob = 0.1;
    /// Noise floor fluctuates uniformly in [1 - d, 1 + d) around its profile.
    double noise_fluctuation = 0.9;
};

/// Clean frames are a sum of three drifting Gaussian ridges over frequency.
/// Noisy frames add a stationary non-negative noise floor: a per-sequence
/// smooth spectral profile modulated by uniform frame-to-frame fluctuation,
/// scaled so that mean clean power over mean noise power hits the
/// sequence's SNR.
inline std::vector<Example<float>> make_synth_dataset(const SynthConfig& cfg)
{
    if (cfg.num_sequences == 0 || cfg.frames_per_sequence == 0 || cfg.freq_bins == 0)
        throw std::invalid_argument("synthetic dataset sizes must be positive");
    constexpr std::size_t kRidges = 3;
    const double F = static_cast<double>(cfg.freq_bins);
    Rng rng(cfg.seed);
    std::vector<Example<float>> data;
    data.reserve(cfg.num_sequences);
    for (std::size_t s = 0; s < cfg.num_sequences; ++s) {
        struct Ridge {
            double center, drift, width, amp, rate, phase;
            bool active;
        };
        std::array<Ridge, kRidges> ridges;
        for (auto& r : ridges)
            r = {rng.uniform(0.0, F), rng.uniform(-0.15, 0.15) * F / 16.0, rng.uniform(0.6, 2.0) * F / 16.0,
                 rng.uniform(0.3, 1.0), rng.uniform(0.05, 0.4), rng.uniform(0.0, 2.0 * std::numbers::pi),
                 rng.uniform() < 0.5};
        Example<float> ex;
        double clean_power = 0.0;
        for (std::size_t t = 0; t < cfg.frames_per_sequence; ++t) {
            std::vector<float> frame(cfg.freq_bins, 0.0f);
            const double td = static_cast<double>(t);
            // Ridges switch on and off like bursts of activity.
            for (auto& r : ridges)
                if (rng.uniform() < cfg.activity_switch_prob)
                    r.active = !r.active;
            for (std::size_t f = 0; f < cfg.freq_bins; ++f) {
                double v = 0.0;
                for (const auto& r : ridges) {
                    if (!r.active)
                        continue;
                    const double mu = r.center + r.drift * td;
                    const double d = (static_cast<double>(f) - mu) / r.width;
                    v += r.amp * (0.75 + 0.25 * std::sin(r.rate * td + r.phase)) * std::exp(-0.5 * d * d);
                }
                frame[f] = static_cast<float>(v);
                clean_power += v * v;
            }
            ex.clean.push_back(std::move(frame));
        }
        clean_power /= static_cast<double>(cfg.frames_per_sequence * cfg.freq_bins);

        const double tilt = rng.uniform(-1.0, 1.0), bump = rng.uniform(0.0, F), bump_amp = rng.uniform(0.0, 1.5);
        std::vector<double> profile(cfg.freq_bins);
        double profile_power = 0.0;
        for (std::size_t f = 0; f < cfg.freq_bins; ++f) {
            const double x = static_cast<double>(f) / F;
            const double d = (static_cast<double>(f) - bump) / (0.2 * F);
            profile[f] = std::exp(tilt * (x - 0.5)) * (1.0 + bump_amp * std::exp(-0.5 * d * d));
            profile_power += profile[f] * profile[f];
        }
        profile_power /= F;
        const double snr = cfg.snr_db + rng.uniform(-cfg.snr_spread_db, cfg.snr_spread_db);
        const double fl = cfg.noise_fluctuation;
        // Uniform[1-d, 1+d) has mean square 1 + d^2/3.
        const double scale =
            std::sqrt(std::max(clean_power, 1e-6) / std::pow(10.0, snr / 10.0) / (profile_power * (1.0 + fl * fl / 3.0)));
        for (const auto& c : ex.clean) {
            std::vector<float> noisy(c.size());
            for (std::size_t f = 0; f < c.size(); ++f)
                noisy[f] = c[f] + static_cast<float>(scale * profile[f] * rng.uniform(1.0 - fl, 1.0 + fl));
            ex.noisy.push_back(std::move(noisy));
        }
        data.push_back(std::move(ex));
    }
    return data;
}

template <typename U, typename T>
Example<U> cast_example(const Example<T>& ex)
{
    auto conv = [](const Sequence<T>& s) {
        Sequence<U> out;
        for (const auto& f : s)
            out.emplace_back(f.begin(), f.end());
        return out;
    };
    return {conv(ex.noisy), conv(ex.clean)};
}

// ---------------------------------------------------------------------------
// Loss and gradients

namespace detail {

template <typename T>
void check_example(const ModelSpec& spec, const Example<T>& ex)
{
    if (ex.noisy.size() != ex.clean.size())
        throw std::invalid_argument("noisy and clean sequences differ in length");
    for (std::size_t t = 0; t < ex.noisy.size(); ++t)
        if (ex.noisy[t].size() != spec.freq_bins || ex.clean[t].size() != spec.freq_bins)
            throw std::invalid_argument("frame " + std::to_string(t) + " does not have " +
                                        std::to_string(spec.freq_bins) + " bins");
}

/// Everything backprop needs from one sequence's forward pass.
template <typename T>
struct Trace {
    std::size_t frames = 0;
    // [t][level] buffers; see forward_frame_into for the meaning of each.
    std::vector<std::array<std::vector<T>, kNumLayers + 1>> enc_pre, enc_act, dec_pre, dec_in;
    std::vector<std::vector<T>> h, gh, r, z, n, out;
};

template <typename T>
Trace<T> trace_forward(const ModelWeights<T>& w, const Sequence<T>& noisy)
{
    using namespace tensor_id;
    const auto& spec = w.spec;
    const auto H = spec.gru_size();
    const std::size_t steps = noisy.size();
    Trace<T> tr;
    tr.frames = steps;
    tr.enc_pre.resize(steps);
    tr.enc_act.resize(steps);
    tr.dec_pre.resize(steps);
    tr.dec_in.resize(steps);
    tr.h.assign(steps, std::vector<T>(H));
    tr.gh.assign(steps, std::vector<T>(3 * H));
    tr.r.assign(steps, std::vector<T>(H));
    tr.z.assign(steps, std::vector<T>(H));
    tr.n.assign(steps, std::vector<T>(H));
    tr.out.assign(steps, std::vector<T>(spec.freq_bins));

    std::array<std::vector<T>, kNumLayers + 1> zeros;
    for (std::size_t l = 0; l <= kNumLayers; ++l)
        zeros[l].assign(spec.channels_at(l) * spec.bins_at(l), T{0});
    const std::vector<T> h0(H, T{0});
    std::vector<T> scratch(kernels::kTaps * 512), gi(3 * H);

    for (std::size_t t = 0; t < steps; ++t) {
        auto& act = tr.enc_act[t];
        auto& pre = tr.enc_pre[t];
        act[0] = noisy[t];
        for (std::size_t i = 1; i <= kNumLayers; ++i) {
            const auto c_in = spec.channels_at(i - 1), c_out = spec.channels_at(i), f_in = spec.bins_at(i - 1);
            const auto& prev = t ? tr.enc_act[t - 1][i - 1] : zeros[i - 1];
            scratch.resize(std::max(scratch.size(), c_in * kernels::kTaps));
            pre[i].assign(c_out * spec.bins_at(i), T{0});
            kernels::conv_forward(w[enc_weight(i)].raw(), w[enc_bias(i)].raw(), prev.data(), act[i - 1].data(), c_in,
                                  f_in, c_out, pre[i].data(), scratch.data());
            act[i] = pre[i];
            for (auto& v : act[i])
                v = kernels::leaky_relu(v);
        }
        const auto& hp = t ? tr.h[t - 1] : h0;
        kernels::gru_forward(w[gru_ih].raw(), w[gru_hh].raw(), w[gru_bias_ih].raw(), w[gru_bias_hh].raw(),
                             act[4].data(), hp.data(), H, H, gi.data(), tr.gh[t].data(), tr.h[t].data(),
                             tr.r[t].data(), tr.z[t].data(), tr.n[t].data());
        auto& din = tr.dec_in[t];
        auto& dpre = tr.dec_pre[t];
        din[4].resize(H);
        for (std::size_t k = 0; k < H; ++k)
            din[4][k] = tr.h[t][k] + act[4][k];
        for (std::size_t j = 1; j <= kNumLayers; ++j) {
            const std::size_t in_level = 5 - j, out_level = 4 - j;
            const auto c_in = spec.channels_at(in_level), c_out = spec.channels_at(out_level);
            const auto f_in = spec.bins_at(in_level);
            const auto& prev = t ? tr.dec_in[t - 1][in_level] : zeros[in_level];
            scratch.resize(std::max(scratch.size(), c_out * kernels::kTaps));
            dpre[out_level].assign(c_out * spec.bins_at(out_level), T{0});
            kernels::deconv_forward(w[dec_weight(j)].raw(), w[dec_bias(j)].raw(), prev.data(),
                                    din[in_level].data(), c_in, f_in, c_out, dpre[out_level].data(),
                                    scratch.data());
            if (out_level > 0) {
                din[out_level].resize(dpre[out_level].size());
                for (std::size_t k = 0; k < din[out_level].size(); ++k)
                    din[out_level][k] = kernels::leaky_relu(dpre[out_level][k]) + act[out_level][k];
            } else {
                for (std::size_t f = 0; f < spec.freq_bins; ++f)
                    tr.out[t][f] = sigmoid(dpre[0][f]) * noisy[t][f];
            }
        }
    }
    return tr;
}

template <typename T>
ModelWeights<T> zeros_like(const ModelWeights<T>& w)
{
    ModelWeights<T> g;
    g.spec = w.spec;
    for (std::size_t i = 0; i < tensor_id::count; ++i)
        g.tensors[i] = Tensor<T>(w.tensors[i].shape());
    return g;
}

/// Backprop of `scale * sum((out - clean)^2)` for one sequence, accumulated into `grad`.
template <typename T>
void trace_backward(const ModelWeights<T>& w, const Example<T>& ex, const Trace<T>& tr, T scale,
                    ModelWeights<T>& grad)
{
    using namespace tensor_id;
    const auto& spec = w.spec;
    const auto H = spec.gru_size();
    const std::size_t steps = tr.frames;

    std::array<std::vector<T>, kNumLayers + 1> zeros;
    for (std::size_t l = 0; l <= kNumLayers; ++l)
        zeros[l].assign(spec.channels_at(l) * spec.bins_at(l), T{0});
    const std::vector<T> h0(H, T{0});

    // Gradients flowing into frame t from frame t+1: through the time-0
    // kernel taps of every layer, and through the recurrent state.
    auto enc_carry = zeros, dec_carry = zeros;
    std::vector<T> dh_carry(H, T{0});

    std::array<std::vector<T>, kNumLayers + 1> d_act, d_dec_in, d_enc_prev, d_dec_prev;
    std::vector<T> dh(H), dgi(3 * H), dgh(3 * H), dpre, patch, dpatch;
    std::size_t widest = 0;
    for (std::size_t l = 0; l <= kNumLayers; ++l)
        widest = std::max(widest, spec.channels_at(l));
    patch.resize(widest * kernels::kTaps);
    dpatch.resize(widest * kernels::kTaps);

    for (std::size_t tt = steps; tt-- > 0;) {
        const auto& act = tr.enc_act[tt];
        const auto& din = tr.dec_in[tt];
        for (std::size_t l = 0; l <= kNumLayers; ++l) {
            d_act[l] = enc_carry[l];
            d_dec_in[l] = dec_carry[l];
            d_enc_prev[l] = zeros[l];
            d_dec_prev[l] = zeros[l];
        }

        // Output mask: out = sigmoid(y) * x.
        std::vector<T> dy(spec.freq_bins);
        for (std::size_t f = 0; f < spec.freq_bins; ++f) {
            const T g = T{2} * scale * (tr.out[tt][f] - ex.clean[tt][f]);
            const T m = sigmoid(tr.dec_pre[tt][0][f]);
            dy[f] = g * ex.noisy[tt][f] * m * (T{1} - m);
        }

        // Decoders, last to first.
        for (std::size_t j = kNumLayers; j >= 1; --j) {
            const std::size_t in_level = 5 - j, out_level = 4 - j;
            const auto c_in = spec.channels_at(in_level), c_out = spec.channels_at(out_level);
            const auto f_in = spec.bins_at(in_level);
            if (out_level == 0) {
                dpre = dy;
            } else {
                // dec_in[out] = lrelu(dec_pre[out]) + act[out]
                const auto& g = d_dec_in[out_level];
                dpre.resize(g.size());
                for (std::size_t k = 0; k < g.size(); ++k) {
                    dpre[k] = g[k] * kernels::leaky_relu_grad(tr.dec_pre[tt][out_level][k]);
                    d_act[out_level][k] += g[k];
                }
            }
            const auto& prev = tt ? tr.dec_in[tt - 1][in_level] : zeros[in_level];
            patch.resize(std::max(patch.size(), c_out * 3));
            kernels::deconv_backward(w[dec_weight(j)].raw(), prev.data(), din[in_level].data(), dpre.data(), c_in,
                                     f_in, c_out, grad[dec_weight(j)].raw(), grad[dec_bias(j)].raw(),
                                     d_dec_prev[in_level].data(), d_dec_in[in_level].data(), patch.data());
        }

        // dec_in[4] = h + act[4]
        for (std::size_t k = 0; k < H; ++k) {
            dh[k] = d_dec_in[4][k] + dh_carry[k];
            d_act[4][k] += d_dec_in[4][k];
        }

        // GRU step.
        const auto& hp = tt ? tr.h[tt - 1] : h0;
        const auto& r = tr.r[tt];
        const auto& z = tr.z[tt];
        const auto& n = tr.n[tt];
        const auto& gh = tr.gh[tt];
        std::vector<T> dh_prev(H);
        for (std::size_t k = 0; k < H; ++k) {
            const T dn = dh[k] * (T{1} - z[k]);
            const T dz = dh[k] * (hp[k] - n[k]);
            dh_prev[k] = dh[k] * z[k];
            const T dn_pre = dn * (T{1} - n[k] * n[k]);
            const T dr = dn_pre * gh[2 * H + k];
            const T dr_pre = dr * r[k] * (T{1} - r[k]);
            const T dz_pre = dz * z[k] * (T{1} - z[k]);
            dgi[k] = dr_pre;
            dgi[H + k] = dz_pre;
            dgi[2 * H + k] = dn_pre;
            dgh[k] = dr_pre;
            dgh[H + k] = dz_pre;
            dgh[2 * H + k] = dn_pre * r[k];
        }
        {
            const T* wih = w[gru_ih].raw();
            const T* whh = w[gru_hh].raw();
            T* gwih = grad[gru_ih].raw();
            T* gwhh = grad[gru_hh].raw();
            T* gbih = grad[gru_bias_ih].raw();
            T* gbhh = grad[gru_bias_hh].raw();
            const auto& u = act[4];
            for (std::size_t row = 0; row < 3 * H; ++row) {
                const T a = dgi[row], b = dgh[row];
                gbih[row] += a;
                gbhh[row] += b;
                const T* wi = wih + row * H;
                const T* wh = whh + row * H;
                T* gi = gwih + row * H;
                T* gh_row = gwhh + row * H;
                for (std::size_t k = 0; k < H; ++k) {
                    gi[k] += a * u[k];
                    gh_row[k] += b * hp[k];
                    d_act[4][k] += a * wi[k];
                    dh_prev[k] += b * wh[k];
                }
            }
        }
        dh_carry = std::move(dh_prev);

        // Encoders, last to first.
        for (std::size_t i = kNumLayers; i >= 1; --i) {
            const auto c_in = spec.channels_at(i - 1), c_out = spec.channels_at(i), f_in = spec.bins_at(i - 1);
            const auto& g = d_act[i];
            dpre.resize(g.size());
            for (std::size_t k = 0; k < g.size(); ++k)
                dpre[k] = g[k] * kernels::leaky_relu_grad(tr.enc_pre[tt][i][k]);
            const auto& prev = tt ? tr.enc_act[tt - 1][i - 1] : zeros[i - 1];
            kernels::conv_backward(w[enc_weight(i)].raw(), prev.data(), act[i - 1].data(), dpre.data(), c_in, f_in,
                                   c_out, grad[enc_weight(i)].raw(), grad[enc_bias(i)].raw(),
                                   d_enc_prev[i - 1].data(), d_act[i - 1].data(), patch.data(), dpatch.data());
        }

        enc_carry = d_enc_prev;
        dec_carry = d_dec_prev;
    }
}

} // namespace detail

/// Mean squared error between the model output and the clean frames of one example.
template <typename T>
double loss(const ModelWeights<T>& w, const Example<T>& ex)
{
    detail::check_example(w.spec, ex);
    if (ex.noisy.empty())
        return 0.0;
    const auto out = forward_sequence(w, ex.noisy);
    double acc = 0.0;
    for (std::size_t t = 0; t < out.size(); ++t)
        for (std::size_t f = 0; f < out[t].size(); ++f) {
            const double d = static_cast<double>(out[t][f]) - static_cast<double>(ex.clean[t][f]);
            acc += d * d;
        }
    return acc / static_cast<double>(out.size() * w.spec.freq_bins);
}

/// Mean of the per-example losses.
template <typename T>
double loss(const ModelWeights<T>& w, std::span<const Example<T>> batch)
{
    if (batch.empty())
        throw std::invalid_argument("loss over an empty batch");
    double acc = 0.0;
    for (const auto& ex : batch)
        acc += loss(w, ex);
    return acc / static_cast<double>(batch.size());
}

template <typename T>
struct LossAndGrad {
    double loss = 0.0;
    ModelWeights<T> grad;
};

/// Exact gradient of the batch-mean loss with respect to every tensor.
template <typename T>
LossAndGrad<T> loss_and_gradients(const ModelWeights<T>& w, std::span<const Example<T>> batch)
{
    if (batch.empty())
        throw std::invalid_argument("gradients over an empty batch");
    LossAndGrad<T> r{0.0, detail::zeros_like(w)};
    for (const auto& ex : batch) {
        detail::check_example(w.spec, ex);
        if (ex.noisy.empty())
            continue;
        const auto tr = detail::trace_forward(w, ex.noisy);
        const auto elems = static_cast<double>(ex.noisy.size() * w.spec.freq_bins);
        double acc = 0.0;
        for (std::size_t t = 0; t < tr.frames; ++t)
            for (std::size_t f = 0; f < w.spec.freq_bins; ++f) {
                const double d = static_cast<double>(tr.out[t][f]) - static_cast<double>(ex.clean[t][f]);
                acc += d * d;
            }
        r.loss += acc / elems;
        detail::trace_backward(w, ex, tr, static_cast<T>(1.0 / (elems * static_cast<double>(batch.size()))), r.grad);
    }
    r.loss /= static_cast<double>(batch.size());
    return r;
}

template <typename T>
ModelWeights<T> gradients(const ModelWeights<T>& w, std::span<const Example<T>> batch)
{
    return loss_and_gradients(w, batch).grad;
}

// ---------------------------------------------------------------------------
// Optimizer and training loop

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t epochs = 20;
    std::size_t batch_size = 8;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 42;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Adam {
public:
    Adam(const ModelWeights<float>& w, const TrainConfig& cfg)
        : cfg_(cfg), m_(detail::zeros_like(w)), v_(detail::zeros_like(w))
    {
    }

    void step(ModelWeights<float>& w, const ModelWeights<float>& grad)
    {
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        const double step = cfg_.learning_rate / c1;
        for (std::size_t id = 0; id < tensor_id::count; ++id) {
            auto& p = w[id];
            auto& m = m_[id];
            auto& v = v_[id];
            const auto& g = grad[id];
            for (std::size_t k = 0; k < p.size(); ++k) {
                const double gk = g[k];
                const double mk = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * gk;
                const double vk = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * gk * gk;
                m[k] = static_cast<float>(mk);
                v[k] = static_cast<float>(vk);
                p[k] = static_cast<float>(p[k] - step * mk / (std::sqrt(vk / c2) + cfg_.epsilon));
            }
        }
    }

private:
    TrainConfig cfg_;
    ModelWeights<float> m_, v_;
    std::size_t t_ = 0;
};

struct TrainResult {
    ModelWeights<float> weights;
    std::vector<double> history; // mean training loss per epoch
};

inline void validate_train_config(const TrainConfig& cfg)
{
    if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate))
        throw std::invalid_argument("learning rate must be finite and non-negative");
    if (cfg.epochs < 1)
        throw std::invalid_argument("epochs must be at least 1");
    if (cfg.batch_size < 1)
        throw std::invalid_argument("batch size must be at least 1");
}

/// Mini-batch Adam. Each epoch visits the data in a seeded shuffled order.
inline TrainResult train(const ModelWeights<float>& w0, const std::vector<Example<float>>& data,
                         const TrainConfig& cfg)
{
    validate_train_config(cfg);
    if (data.empty())
        throw std::invalid_argument("training on an empty dataset");
    TrainResult r{w0, {}};
    Adam opt(w0, cfg);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<Example<float>> batch;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng rng(cfg.seed * 1000003ULL + epoch);
        for (std::size_t k = order.size(); k > 1; --k)
            std::swap(order[k - 1], order[static_cast<std::size_t>(rng.uniform() * static_cast<double>(k))]);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (std::size_t k = start; k < end; ++k)
                batch.push_back(data[order[k]]);
            auto lg = loss_and_gradients<float>(r.weights, batch);
            if (!std::isfinite(lg.loss))
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                                    std::to_string(start));
            epoch_loss += lg.loss * static_cast<double>(end - start);
            opt.step(r.weights, lg.grad);
        }
        r.history.push_back(epoch_loss / static_cast<double>(data.size()));
    }
    return r;
}

inline double evaluate(const ModelWeights<float>& w, const std::vector<Example<float>>& data)
{
    return loss<float>(w, std::span<const Example<float>>(data));
}

// ---------------------------------------------------------------------------
// Experiments

struct PruneVsDirectReport {
    NetworkParam target;
    double pruned_loss = 0.0;     // pruned, before fine-tuning
    double finetuned_loss = 0.0;  // arm A after fine-tuning
    double direct_loss = 0.0;     // arm B, trained from scratch
    std::vector<double> finetune_history;
    std::vector<double> direct_history;
    ModelWeights<float> finetuned;
    ModelWeights<float> direct;
};

/// Arm A prunes `base` to `target` and fine-tunes with `cfg`; arm B trains a
/// freshly initialized `target` model for `direct_epochs`. Losses are
/// measured on `eval`.
inline PruneVsDirectReport experiment_prune_vs_direct(const ModelWeights<float>& base, const NetworkParam& target,
                                                      const std::vector<Example<float>>& train_data,
                                                      const std::vector<Example<float>>& eval_data,
                                                      const TrainConfig& cfg, std::size_t direct_epochs,
                                                      std::uint64_t direct_seed)
{
    PruneVsDirectReport rep;
    rep.target = target;
    const auto pruned = prune_structured(base, target);
    rep.pruned_loss = evaluate(pruned, eval_data);

    auto a = train(pruned, train_data, cfg);
    rep.finetuned_loss = evaluate(a.weights, eval_data);
    rep.finetune_history = std::move(a.history);
    rep.finetuned = std::move(a.weights);

    TrainConfig direct_cfg = cfg;
    direct_cfg.epochs = direct_epochs;
    auto b = train(build_model(ModelSpec{target, base.spec.freq_bins}, direct_seed), train_data, direct_cfg);
    rep.direct_loss = evaluate(b.weights, eval_data);
    rep.direct_history = std::move(b.history);
    rep.direct = std::move(b.weights);
    return rep;
}

struct LrSweepRow {
    double learning_rate = 0.0;
    double final_loss = 0.0;
    std::vector<double> history;
};

/// Fine-tunes the pruned model once per learning rate with identical seeds and budgets.
inline std::vector<LrSweepRow> experiment_lr_sweep(const ModelWeights<float>& base, const NetworkParam& target,
                                                   const std::vector<Example<float>>& train_data,
                                                   const std::vector<Example<float>>& eval_data,
                                                   const TrainConfig& cfg, const std::vector<double>& lrs)
{
    if (lrs.empty())
        throw std::invalid_argument("learning-rate sweep needs at least one rate");
    const auto pruned = prune_structured(base, target);
    std::vector<LrSweepRow> rows;
    for (double lr : lrs) {
        TrainConfig c = cfg;
        c.learning_rate = lr;
        auto r = train(pruned, train_data, c);
        rows.push_back({lr, evaluate(r.weights, eval_data), std::move(r.history)});
    }
    return rows;
}

} // namespace prunebench
