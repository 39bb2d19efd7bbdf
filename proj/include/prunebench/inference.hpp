#pragma once

// Single-threaded streaming forward pass. One frame in, one masked frame out;
// everything the next frame needs lives in StreamState.

#include "prunebench/layers.hpp"
#include "prunebench/model.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <span>
#include <stdexcept>
#include <vector>

namespace prunebench {

using Frame = std::vector<float>;

template <typename T = float>
class StreamState {
public:
    StreamState() = default;
    explicit StreamState(const ModelSpec& spec) : spec_(spec)
    {
        validate_spec(spec);
        const auto H = spec.gru_size();
        hidden_.assign(H, T{0});
        next_hidden_.assign(H, T{0});
        gi_.assign(3 * H, T{0});
        gh_.assign(3 * H, T{0});
        std::size_t widest = 0;
        for (std::size_t level = 0; level <= kNumLayers; ++level) {
            const auto n = spec.channels_at(level) * spec.bins_at(level);
            act_[level].assign(n, T{0});
            skip_[level].assign(n, T{0});
            enc_hist_[level].assign(n, T{0});
            dec_hist_[level].assign(n, T{0});
            widest = std::max(widest, spec.channels_at(level));
        }
        scratch_.assign(widest * kernels::kTaps, T{0});
    }

    const ModelSpec& spec() const { return spec_; }
    std::span<const T> hidden() const { return hidden_; }

    void reset()
    {
        std::fill(hidden_.begin(), hidden_.end(), T{0});
        for (std::size_t level = 0; level <= kNumLayers; ++level) {
            std::fill(enc_hist_[level].begin(), enc_hist_[level].end(), T{0});
            std::fill(dec_hist_[level].begin(), dec_hist_[level].end(), T{0});
        }
    }

private:
    template <typename U, typename Probe>
    friend void forward_frame_into(const ModelWeights<U>&, StreamState<U>&, std::span<const U>, std::span<U>, Probe&);

    ModelSpec spec_{};
    std::vector<T> hidden_, next_hidden_, gi_, gh_;
    // act_[l]: encoder output at depth l (act_[0] = input frame).
    // skip_[l]: decoder input at depth l (decoder output + encoder skip).
    // enc_hist_[l]: previous-frame input to encoder l+1; dec_hist_[l]:
    // previous-frame input to the decoder reading depth l.
    std::array<std::vector<T>, kNumLayers + 1> act_, skip_, enc_hist_, dec_hist_;
    std::vector<T> scratch_;
};

/// Where forward time goes, in the categories of a per-operator profile.
enum class OpCategory { recurrent, conv_deconv, other };

struct NoProbe {
    template <typename Fn>
    void operator()(OpCategory, Fn&& fn)
    {
        fn();
    }
};

/// Wall-clocks every primitive and charges it to one category.
struct TimingProbe {
    double recurrent = 0.0;
    double conv_deconv = 0.0;
    double other = 0.0;

    template <typename Fn>
    void operator()(OpCategory cat, Fn&& fn)
    {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        switch (cat) {
        case OpCategory::recurrent: recurrent += dt; break;
        case OpCategory::conv_deconv: conv_deconv += dt; break;
        case OpCategory::other: other += dt; break;
        }
    }

    double total() const { return recurrent + conv_deconv + other; }
};

template <typename T, typename Probe>
void forward_frame_into(const ModelWeights<T>& w, StreamState<T>& s, std::span<const T> x, std::span<T> y,
                        Probe& probe)
{
    using namespace tensor_id;
    const auto& spec = w.spec;
    if (x.size() != spec.freq_bins || y.size() != spec.freq_bins)
        throw std::invalid_argument("frame length " + std::to_string(x.size()) + " does not match model freq_bins " +
                                    std::to_string(spec.freq_bins));
    if (!(s.spec_ == spec))
        throw std::invalid_argument("stream state was built for a different model spec");

    probe(OpCategory::other, [&] { std::copy(x.begin(), x.end(), s.act_[0].begin()); });

    for (std::size_t i = 1; i <= kNumLayers; ++i) {
        const auto c_in = spec.channels_at(i - 1), c_out = spec.channels_at(i), f_in = spec.bins_at(i - 1);
        probe(OpCategory::conv_deconv, [&] {
            kernels::conv_forward(w[enc_weight(i)].raw(), w[enc_bias(i)].raw(), s.enc_hist_[i - 1].data(),
                                  s.act_[i - 1].data(), c_in, f_in, c_out, s.act_[i].data(), s.scratch_.data());
        });
        probe(OpCategory::other, [&] {
            for (auto& v : s.act_[i])
                v = kernels::leaky_relu(v);
            std::copy(s.act_[i - 1].begin(), s.act_[i - 1].end(), s.enc_hist_[i - 1].begin());
        });
    }

    const auto H = spec.gru_size();
    probe(OpCategory::recurrent, [&] {
        kernels::gru_forward(w[gru_ih].raw(), w[gru_hh].raw(), w[gru_bias_ih].raw(), w[gru_bias_hh].raw(),
                             s.act_[4].data(), s.hidden_.data(), H, H, s.gi_.data(), s.gh_.data(),
                             s.next_hidden_.data());
        s.hidden_.swap(s.next_hidden_);
    });

    // Decoder j reads depth 5-j and writes depth 4-j.
    probe(OpCategory::other, [&] {
        for (std::size_t k = 0; k < H; ++k)
            s.skip_[4][k] = s.hidden_[k] + s.act_[4][k];
    });
    for (std::size_t j = 1; j <= kNumLayers; ++j) {
        const std::size_t in_level = 5 - j, out_level = 4 - j;
        const auto c_in = spec.channels_at(in_level), c_out = spec.channels_at(out_level);
        const auto f_in = spec.bins_at(in_level);
        auto& out = s.skip_[out_level];
        probe(OpCategory::conv_deconv, [&] {
            kernels::deconv_forward(w[dec_weight(j)].raw(), w[dec_bias(j)].raw(), s.dec_hist_[in_level].data(),
                                    s.skip_[in_level].data(), c_in, f_in, c_out, out.data(), s.scratch_.data());
        });
        probe(OpCategory::other, [&] {
            std::copy(s.skip_[in_level].begin(), s.skip_[in_level].end(), s.dec_hist_[in_level].begin());
            if (out_level > 0) {
                const auto& e = s.act_[out_level];
                for (std::size_t k = 0; k < out.size(); ++k)
                    out[k] = kernels::leaky_relu(out[k]) + e[k];
            } else {
                for (std::size_t f = 0; f < y.size(); ++f)
                    y[f] = sigmoid(out[f]) * x[f];
            }
        });
    }
}

template <typename T>
void forward_frame_into(const ModelWeights<T>& w, StreamState<T>& s, std::span<const T> x, std::span<T> y)
{
    NoProbe probe;
    forward_frame_into(w, s, x, y, probe);
}

/// Processes one frame, advancing `s`.
inline Frame forward_frame(const ModelWeights<float>& w, StreamState<float>& s, const Frame& x)
{
    Frame y(x.size());
    forward_frame_into<float>(w, s, x, y);
    return y;
}

/// Runs a whole sequence from a reset state.
template <typename T>
std::vector<std::vector<T>> forward_sequence(const ModelWeights<T>& w, const std::vector<std::vector<T>>& frames)
{
    StreamState<T> s(w.spec);
    std::vector<std::vector<T>> out;
    out.reserve(frames.size());
    for (const auto& x : frames) {
        std::vector<T> y(x.size());
        forward_frame_into<T>(w, s, x, y);
        out.push_back(std::move(y));
    }
    return out;
}

struct ProfileResult {
    std::vector<Frame> outputs;
    double recurrent_s = 0.0;
    double conv_deconv_s = 0.0;
    double other_s = 0.0;

    double total_s() const { return recurrent_s + conv_deconv_s + other_s; }
    double recurrent_fraction() const { return recurrent_s / total_s(); }
    double conv_deconv_fraction() const { return conv_deconv_s / total_s(); }
    double other_fraction() const { return other_s / total_s(); }
};

/// forward_sequence with every primitive timed and attributed to a category.
inline ProfileResult forward_profiled(const ModelWeights<float>& w, const std::vector<Frame>& frames)
{
    StreamState<float> s(w.spec);
    TimingProbe probe;
    ProfileResult r;
    r.outputs.reserve(frames.size());
    for (const auto& x : frames) {
        Frame y(x.size());
        forward_frame_into<float>(w, s, x, y, probe);
        r.outputs.push_back(std::move(y));
    }
    r.recurrent_s = probe.recurrent;
    r.conv_deconv_s = probe.conv_deconv;
    r.other_s = probe.other;
    return r;
}

} // namespace prunebench
