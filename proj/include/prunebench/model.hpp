#pragma once

// A small CRUSE-style convolutional recurrent denoiser:
//
//   frame (1 x F) -> enc1..enc4 (kernel 2x3, stride 2 in frequency)
//                 -> GRU over the flattened c4 x B encoder output
//                 -> dec1..dec4 (transposed convs) with additive skips
//                 -> sigmoid mask applied to the input frame
//
// The whole architecture is parameterized by the channel vector [c1..c4].

#include "prunebench/tensor.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace prunebench {

struct NetworkParam {
    std::array<std::size_t, 4> c{};

    std::size_t operator[](std::size_t i) const { return c[i]; }
    std::size_t& operator[](std::size_t i) { return c[i]; }

    bool monotone() const { return c[0] <= c[1] && c[1] <= c[2] && c[2] <= c[3]; }
    bool positive() const { return c[0] > 0 && c[1] > 0 && c[2] > 0 && c[3] > 0; }

    std::string to_string() const
    {
        return std::to_string(c[0]) + "," + std::to_string(c[1]) + "," + std::to_string(c[2]) + "," +
               std::to_string(c[3]);
    }

    friend bool operator==(const NetworkParam&, const NetworkParam&) = default;
};

inline void validate_network_param(const NetworkParam& p)
{
    if (!p.positive())
        throw std::invalid_argument("network param [" + p.to_string() + "] has a zero channel count");
    if (!p.monotone())
        throw std::invalid_argument("network param [" + p.to_string() + "] violates c1 <= c2 <= c3 <= c4");
}

inline constexpr std::size_t kKernelTime = 2;
inline constexpr std::size_t kKernelFreq = 3;
inline constexpr std::size_t kFreqStride = 2;
inline constexpr std::size_t kNumLayers = 4;

struct ModelSpec {
    NetworkParam params;
    std::size_t freq_bins = 16;

    /// Frequency bins left after the four stride-2 encoders.
    std::size_t bins_after_encoder() const { return freq_bins / 16; }
    /// GRU input and hidden size.
    std::size_t gru_size() const { return params[3] * bins_after_encoder(); }
    /// Frequency bins at encoder depth `level` (0 = input).
    std::size_t bins_at(std::size_t level) const { return freq_bins >> level; }
    /// Channels at encoder depth `level` (0 = the single input channel).
    std::size_t channels_at(std::size_t level) const { return level == 0 ? 1 : params[level - 1]; }

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

inline void validate_spec(const ModelSpec& spec)
{
    validate_network_param(spec.params);
    if (spec.freq_bins == 0 || spec.freq_bins % 16 != 0)
        throw std::invalid_argument("freq_bins must be a positive multiple of 16, got " +
                                    std::to_string(spec.freq_bins));
}

/// Canonical tensor order. Serialization, coupling groups and the optimizer
/// all index tensors through this layout.
namespace tensor_id {
inline constexpr std::size_t enc_weight(std::size_t layer) { return 2 * (layer - 1); }
inline constexpr std::size_t enc_bias(std::size_t layer) { return 2 * (layer - 1) + 1; }
inline constexpr std::size_t gru_ih = 8;
inline constexpr std::size_t gru_hh = 9;
inline constexpr std::size_t gru_bias_ih = 10;
inline constexpr std::size_t gru_bias_hh = 11;
inline constexpr std::size_t dec_weight(std::size_t layer) { return 12 + 2 * (layer - 1); }
inline constexpr std::size_t dec_bias(std::size_t layer) { return 13 + 2 * (layer - 1); }
inline constexpr std::size_t count = 20;
} // namespace tensor_id

inline const std::array<std::string, tensor_id::count>& tensor_names()
{
    static const std::array<std::string, tensor_id::count> names = {
        "enc1_w", "enc1_b", "enc2_w", "enc2_b", "enc3_w", "enc3_b", "enc4_w", "enc4_b",
        "gru_ih", "gru_hh", "gru_bias_ih", "gru_bias_hh",
        "dec1_w", "dec1_b", "dec2_w", "dec2_b", "dec3_w", "dec3_b", "dec4_w", "dec4_b"};
    return names;
}

inline std::optional<std::size_t> tensor_index(std::string_view name)
{
    const auto& names = tensor_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name)
            return i;
    return std::nullopt;
}

/// Expected shape of every tensor for a given spec.
///
/// Encoder kernels are (c_out, c_in, kt, kf); decoder kernels are
/// transposed-conv style (c_in, c_out, kt, kf). Decoder j consumes c_{5-j}
/// channels and produces c_{4-j}, with c_0 = 1. GRU gate rows are stacked
/// as (reset, update, candidate).
inline std::array<Shape, tensor_id::count> expected_shapes(const ModelSpec& spec)
{
    std::array<Shape, tensor_id::count> shapes;
    for (std::size_t i = 1; i <= kNumLayers; ++i) {
        const auto out = spec.channels_at(i), in = spec.channels_at(i - 1);
        shapes[tensor_id::enc_weight(i)] = {out, in, kKernelTime, kKernelFreq};
        shapes[tensor_id::enc_bias(i)] = {out};
    }
    const auto h = spec.gru_size();
    shapes[tensor_id::gru_ih] = {3 * h, h};
    shapes[tensor_id::gru_hh] = {3 * h, h};
    shapes[tensor_id::gru_bias_ih] = {3 * h};
    shapes[tensor_id::gru_bias_hh] = {3 * h};
    for (std::size_t j = 1; j <= kNumLayers; ++j) {
        const auto in = spec.channels_at(5 - j), out = spec.channels_at(4 - j);
        shapes[tensor_id::dec_weight(j)] = {in, out, kKernelTime, kKernelFreq};
        shapes[tensor_id::dec_bias(j)] = {out};
    }
    return shapes;
}

template <typename T = float>
struct ModelWeights {
    ModelSpec spec;
    std::array<Tensor<T>, tensor_id::count> tensors;

    Tensor<T>& operator[](std::size_t id) { return tensors[id]; }
    const Tensor<T>& operator[](std::size_t id) const { return tensors[id]; }

    Tensor<T>& by_name(std::string_view name)
    {
        auto id = tensor_index(name);
        if (!id)
            throw std::invalid_argument("unknown tensor name '" + std::string(name) + "'");
        return tensors[*id];
    }

    std::size_t parameter_count() const
    {
        std::size_t n = 0;
        for (const auto& t : tensors)
            n += t.size();
        return n;
    }

    /// Checks every tensor against the shapes implied by `spec`.
    void validate() const
    {
        validate_spec(spec);
        const auto shapes = expected_shapes(spec);
        for (std::size_t i = 0; i < tensor_id::count; ++i)
            if (tensors[i].shape() != shapes[i])
                throw std::invalid_argument("tensor '" + tensor_names()[i] + "' has shape " +
                                            shape_string(tensors[i].shape()) + ", expected " +
                                            shape_string(shapes[i]));
    }

    template <typename U>
    ModelWeights<U> cast() const
    {
        ModelWeights<U> out;
        out.spec = spec;
        for (std::size_t i = 0; i < tensor_id::count; ++i)
            out.tensors[i] = tensors[i].template cast<U>();
        return out;
    }

    friend bool operator==(const ModelWeights& a, const ModelWeights& b)
    {
        return a.spec == b.spec && a.tensors == b.tensors;
    }
};

/// Closed-form parameter count, independent of any allocated weights.
inline std::size_t parameter_count(const ModelSpec& spec)
{
    std::size_t n = 0;
    const std::size_t k = kKernelTime * kKernelFreq;
    for (std::size_t i = 1; i <= kNumLayers; ++i) {
        const auto a = spec.channels_at(i - 1), b = spec.channels_at(i);
        n += 2 * a * b * k; // encoder i and its mirrored decoder
        n += b + a;         // encoder bias (b) and decoder bias (a)
    }
    const auto h = spec.gru_size();
    n += 2 * 3 * h * h + 2 * 3 * h;
    return n;
}

/// Seeded 32-bit generator producing identical streams on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(static_cast<std::mt19937::result_type>(seed ^ (seed >> 32))) {}

    /// Uniform in [0, 1) with 24 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 8) * (1.0 / 16777216.0); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::mt19937 engine_;
};

namespace detail {

inline std::size_t fan_in(const ModelSpec& spec, std::size_t id)
{
    const auto shapes = expected_shapes(spec);
    if (id == tensor_id::gru_ih || id == tensor_id::gru_hh || id == tensor_id::gru_bias_ih ||
        id == tensor_id::gru_bias_hh)
        return spec.gru_size();
    // Biases share the bound of their kernel.
    const auto& kernel = shapes[id % 2 == 0 ? id : id - 1];
    const std::size_t in_axis = id >= tensor_id::dec_weight(1) ? 0 : 1;
    return kernel[in_axis] * kKernelTime * kKernelFreq;
}

} // namespace detail

/// Deterministic initialization: every tensor uniform in +-sqrt(1/fan_in).
inline ModelWeights<float> build_model(const ModelSpec& spec, std::uint64_t seed)
{
    validate_spec(spec);
    ModelWeights<float> w;
    w.spec = spec;
    const auto shapes = expected_shapes(spec);
    Rng rng(seed);
    for (std::size_t i = 0; i < tensor_id::count; ++i) {
        const double bound = std::sqrt(1.0 / static_cast<double>(detail::fan_in(spec, i)));
        Tensor<float> t(shapes[i]);
        for (auto& v : t.data())
            v = static_cast<float>(rng.uniform(-bound, bound));
        w.tensors[i] = std::move(t);
    }
    return w;
}

/// Size of the serialized weight payload in MiB (4 bytes per parameter).
template <typename T>
double model_memory_mb(const ModelWeights<T>& w)
{
    return static_cast<double>(w.parameter_count()) * 4.0 / (1024.0 * 1024.0);
}

// ---------------------------------------------------------------------------
// Coupling groups

/// One axis that moves with a channel count. Channel j owns the coordinates
/// [j*group, j*group + group) on `axis`; when `gate_stacked` the axis holds
/// three such blocks back to back (reset, update, candidate).
struct CouplingEntry {
    std::size_t tensor;
    std::size_t axis;
    std::size_t group = 1;
    bool gate_stacked = false;
};

struct CouplingGroup {
    std::size_t target; // 0-based index into NetworkParam
    std::vector<CouplingEntry> entries;
};

/// Expands a channel selection into the coordinates it owns on an entry's axis.
inline std::vector<std::size_t> expand_channels(const CouplingEntry& e, std::size_t channels,
                                                std::span<const std::size_t> keep)
{
    std::vector<std::size_t> out;
    const std::size_t blocks = e.gate_stacked ? 3 : 1;
    const std::size_t block_len = channels * e.group;
    out.reserve(blocks * keep.size() * e.group);
    for (std::size_t b = 0; b < blocks; ++b)
        for (auto j : keep)
            for (std::size_t g = 0; g < e.group; ++g)
                out.push_back(b * block_len + j * e.group + g);
    return out;
}

/// The four groups of axes that must share one index set when c1..c4 shrink.
///
/// Skip connections add enc_i's output to the input of dec_{5-i}, so the
/// channels of enc_i out, enc_{i+1} in, dec_{4-i} out and dec_{5-i} in are one
/// group. The c4 group additionally reaches into the GRU through the
/// flattened (c4 x B) encoder output.
inline std::vector<CouplingGroup> coupling_groups(const ModelSpec& spec)
{
    using namespace tensor_id;
    const std::size_t B = spec.bins_after_encoder();
    std::vector<CouplingGroup> groups;
    for (std::size_t i = 1; i <= 3; ++i) {
        CouplingGroup g{i - 1, {}};
        g.entries.push_back({enc_weight(i), 0});
        g.entries.push_back({enc_bias(i), 0});
        g.entries.push_back({enc_weight(i + 1), 1});
        g.entries.push_back({dec_weight(4 - i), 1});
        g.entries.push_back({dec_bias(4 - i), 0});
        g.entries.push_back({dec_weight(5 - i), 0});
        groups.push_back(std::move(g));
    }
    CouplingGroup g4{3, {}};
    g4.entries.push_back({enc_weight(4), 0});
    g4.entries.push_back({enc_bias(4), 0});
    g4.entries.push_back({gru_ih, 1, B, false});
    g4.entries.push_back({gru_ih, 0, B, true});
    g4.entries.push_back({gru_hh, 0, B, true});
    g4.entries.push_back({gru_hh, 1, B, false});
    g4.entries.push_back({gru_bias_ih, 0, B, true});
    g4.entries.push_back({gru_bias_hh, 0, B, true});
    g4.entries.push_back({dec_weight(1), 0});
    groups.push_back(std::move(g4));
    return groups;
}

} // namespace prunebench
