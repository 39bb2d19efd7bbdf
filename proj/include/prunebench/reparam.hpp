#pragma once

// Prune-fraction -> channel configuration.
//
// The fraction shrinks c4 (the GRU width); earlier layers are then clamped so
// that c1 <= c2 <= c3 <= c4 still holds.

#include "prunebench/model.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace prunebench {

inline NetworkParam derive_config(const NetworkParam& base, double fraction)
{
    validate_network_param(base);
    if (!(fraction >= 0.0 && fraction < 1.0))
        throw std::invalid_argument("prune fraction must be in [0, 1), got " + std::to_string(fraction));
    // nearbyint honours the default round-half-to-even mode.
    const double c4 = std::nearbyint((1.0 - fraction) * static_cast<double>(base[3]));
    if (c4 < 1.0)
        throw std::invalid_argument("prune fraction " + std::to_string(fraction) + " leaves c4 = 0");
    NetworkParam out = base;
    out[3] = static_cast<std::size_t>(c4);
    for (int i = 2; i >= 0; --i)
        out[i] = std::min(base[i], out[i + 1]);
    return out;
}

struct NamedConfig {
    std::string name;
    NetworkParam params;
};

inline constexpr NetworkParam kCruse32{{32, 64, 128, 256}};
inline constexpr NetworkParam kCruse16{{16, 32, 64, 128}};

/// The two baselines followed by the eight prune configurations.
inline std::vector<NamedConfig> standard_configs()
{
    static const std::vector<std::pair<std::string, double>> fractions = {
        {"P.125", 0.125}, {"P.250", 0.25},   {"P.500", 0.5},  {"P.5625", 0.5625},
        {"P.625", 0.625}, {"P.6875", 0.6875}, {"P.750", 0.75}, {"P.875", 0.875}};
    std::vector<NamedConfig> out = {{"CRUSE32", kCruse32}, {"CRUSE16", kCruse16}};
    for (const auto& [name, p] : fractions)
        out.push_back({name, derive_config(kCruse32, p)});
    return out;
}

inline std::optional<NetworkParam> find_config(std::string_view name)
{
    for (const auto& c : standard_configs())
        if (c.name == name)
            return c.params;
    return std::nullopt;
}

/// Accepts either a standard config name or "c1,c2,c3,c4".
inline NetworkParam parse_network_param(std::string_view text)
{
    if (auto named = find_config(text))
        return *named;
    NetworkParam p;
    std::size_t idx = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const auto tok = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        if (idx >= 4 || tok.empty())
            throw std::invalid_argument("expected a config name or c1,c2,c3,c4, got '" + std::string(text) + "'");
        std::size_t value = 0;
        for (char ch : tok) {
            if (ch < '0' || ch > '9')
                throw std::invalid_argument("invalid channel count '" + std::string(tok) + "'");
            value = value * 10 + static_cast<std::size_t>(ch - '0');
        }
        p[idx++] = value;
        if (comma == std::string_view::npos)
            break;
        pos = comma + 1;
    }
    if (idx != 4)
        throw std::invalid_argument("expected 4 channel counts, got '" + std::string(text) + "'");
    return p;
}

} // namespace prunebench
