#pragma once

// Structured magnitude pruning over coupling groups, and unstructured
// (per-tensor magnitude) zeroing of the GRU weights.

#include "prunebench/model.hpp"

#include <algorithm>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace prunebench {

/// Strictly ascending coordinate set along one dimension.
using IndexSet = std::vector<std::size_t>;

/// The k coordinates with the largest scores, returned in ascending order.
///
/// For non-negative additive scores this is exactly the subset of size k that
/// maximizes the summed score. Ties go to the lower coordinate.
inline IndexSet select_top_coordinates(std::span<const double> scores, std::size_t k)
{
    if (k < 1 || k > scores.size())
        throw std::invalid_argument("select_top_coordinates: k=" + std::to_string(k) + " outside [1, " +
                                    std::to_string(scores.size()) + "]");
    IndexSet order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

/// Per-channel score for one coupling group: the sum over every coupled axis
/// of the L2 norms of the slices owned by that channel.
template <typename T>
std::vector<double> channel_scores(const ModelWeights<T>& w, const CouplingGroup& group)
{
    const std::size_t channels = w.spec.params[group.target];
    std::vector<double> scores(channels, 0.0);
    for (const auto& e : group.entries) {
        const auto& t = w.tensors[e.tensor];
        const std::size_t blocks = e.gate_stacked ? 3 : 1;
        if (e.axis >= t.rank() || t.dim(e.axis) != blocks * channels * e.group)
            throw std::logic_error("coupling entry on '" + tensor_names()[e.tensor] + "' axis " +
                                   std::to_string(e.axis) + " does not match " + std::to_string(channels) +
                                   " channels");
        const auto norms = slice_norms(t, e.axis);
        for (std::size_t b = 0; b < blocks; ++b)
            for (std::size_t j = 0; j < channels; ++j)
                for (std::size_t g = 0; g < e.group; ++g)
                    scores[j] += norms[b * channels * e.group + j * e.group + g];
    }
    return scores;
}

/// Applies one shared channel selection to every axis of a group.
template <typename T>
void apply_channel_selection(ModelWeights<T>& w, const CouplingGroup& group, const IndexSet& keep)
{
    const std::size_t channels = w.spec.params[group.target];
    for (const auto& e : group.entries) {
        const auto coords = expand_channels(e, channels, keep);
        w.tensors[e.tensor] = take_along_axis(w.tensors[e.tensor], e.axis, coords);
    }
    w.spec.params[group.target] = keep.size();
}

/// Shrinks the model to `target` channels by magnitude.
///
/// Groups are processed c4, c3, c2, c1; each shrinking group gets one index
/// set computed from the weights as they stand after the previous groups.
template <typename T>
ModelWeights<T> prune_structured(const ModelWeights<T>& w, const NetworkParam& target)
{
    validate_network_param(target);
    for (std::size_t i = 0; i < 4; ++i)
        if (target[i] > w.spec.params[i])
            throw std::invalid_argument("prune target [" + target.to_string() + "] exceeds current channels [" +
                                        w.spec.params.to_string() + "]");
    ModelWeights<T> out = w;
    for (int i = 3; i >= 0; --i) {
        if (target[i] == out.spec.params[i])
            continue;
        // Group layout depends only on B, which pruning never changes.
        const auto group = coupling_groups(out.spec)[static_cast<std::size_t>(i)];
        const auto scores = channel_scores(out, group);
        apply_channel_selection(out, group, select_top_coordinates(scores, target[i]));
    }
    out.validate();
    return out;
}

/// Zeroes the floor(fraction * n) smallest-magnitude entries of each GRU
/// weight matrix independently. Biases and convolutions are left alone.
template <typename T>
ModelWeights<T> prune_unstructured(const ModelWeights<T>& w, double fraction)
{
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw std::invalid_argument("unstructured fraction must be in [0, 1], got " + std::to_string(fraction));
    ModelWeights<T> out = w;
    for (auto id : {tensor_id::gru_ih, tensor_id::gru_hh}) {
        auto& t = out.tensors[id];
        const auto n = t.size();
        const auto drop = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
        if (drop == 0)
            continue;
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return std::abs(t[a]) < std::abs(t[b]); });
        for (std::size_t k = 0; k < drop; ++k)
            t[order[k]] = T{0};
    }
    return out;
}

} // namespace prunebench
