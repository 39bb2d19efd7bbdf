#pragma once

// Model directory format:
//   manifest.json  {version, network_param, freq_bins, tensors: [{name, shape,
//                   dtype, offset_bytes, len_elems}, ...]}
//   weights.bin    little-endian f32, row-major, manifest order, no padding

#include "prunebench/model.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

namespace prunebench {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kWeightsFile = "weights.bin";

class ModelFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline nlohmann::json make_manifest(const ModelWeights<float>& w)
{
    nlohmann::json m;
    m["version"] = kFormatVersion;
    m["network_param"] = w.spec.params.c;
    m["freq_bins"] = w.spec.freq_bins;
    auto& list = m["tensors"] = nlohmann::json::array();
    std::size_t offset = 0;
    for (std::size_t i = 0; i < tensor_id::count; ++i) {
        const auto& t = w.tensors[i];
        list.push_back({{"name", tensor_names()[i]},
                        {"shape", t.shape()},
                        {"dtype", "f32"},
                        {"offset_bytes", offset},
                        {"len_elems", t.size()}});
        offset += 4 * t.size();
    }
    return m;
}

inline std::vector<char> encode_weights(const ModelWeights<float>& w)
{
    std::vector<char> blob;
    blob.reserve(4 * w.parameter_count());
    for (const auto& t : w.tensors)
        for (float v : t.data()) {
            const auto bits = std::bit_cast<std::uint32_t>(v);
            for (int b = 0; b < 4; ++b)
                blob.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
        }
    return blob;
}

inline void save_model(const ModelWeights<float>& w, const std::filesystem::path& dir)
{
    w.validate();
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / kManifestFile);
        if (!out)
            throw std::runtime_error("cannot write " + (dir / kManifestFile).string());
        out << make_manifest(w).dump(2) << '\n';
    }
    const auto blob = encode_weights(w);
    std::ofstream out(dir / kWeightsFile, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + (dir / kWeightsFile).string());
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out)
        throw std::runtime_error("short write to " + (dir / kWeightsFile).string());
}

/// Parses a manifest and a weight blob that are already in memory.
inline ModelWeights<float> decode_model(const nlohmann::json& m, const std::vector<char>& blob)
{
    auto field = [&](const char* key) -> const nlohmann::json& {
        if (!m.contains(key))
            throw ModelFormatError(std::string("manifest: missing field '") + key + "'");
        return m.at(key);
    };
    try {
        const int version = field("version").get<int>();
        if (version != kFormatVersion)
            throw ModelFormatError("manifest: unsupported version " + std::to_string(version));

        ModelWeights<float> w;
        const auto params = field("network_param").get<std::vector<std::size_t>>();
        if (params.size() != 4)
            throw ModelFormatError("manifest: network_param must have 4 entries");
        for (std::size_t i = 0; i < 4; ++i)
            w.spec.params[i] = params[i];
        w.spec.freq_bins = field("freq_bins").get<std::size_t>();
        try {
            validate_spec(w.spec);
        } catch (const std::invalid_argument& e) {
            throw ModelFormatError(std::string("manifest: ") + e.what());
        }

        const auto& list = field("tensors");
        if (!list.is_array() || list.size() != tensor_id::count)
            throw ModelFormatError("manifest: expected " + std::to_string(tensor_id::count) + " tensors");
        const auto shapes = expected_shapes(w.spec);
        std::size_t expected_offset = 0;
        for (std::size_t i = 0; i < tensor_id::count; ++i) {
            const auto& e = list[i];
            const auto name = e.at("name").get<std::string>();
            if (name != tensor_names()[i])
                throw ModelFormatError("manifest: tensor " + std::to_string(i) + " is '" + name +
                                       "', expected '" + tensor_names()[i] + "'");
            if (e.at("dtype").get<std::string>() != "f32")
                throw ModelFormatError("tensor '" + name + "': unsupported dtype");
            const auto shape = e.at("shape").get<Shape>();
            if (shape != shapes[i])
                throw ModelFormatError("tensor '" + name + "': shape " + shape_string(shape) +
                                       " does not match network_param, expected " + shape_string(shapes[i]));
            const auto len = e.at("len_elems").get<std::size_t>();
            if (len != shape_size(shape))
                throw ModelFormatError("tensor '" + name + "': len_elems " + std::to_string(len) +
                                       " does not match shape " + shape_string(shape));
            const auto offset = e.at("offset_bytes").get<std::size_t>();
            if (offset != expected_offset)
                throw ModelFormatError("tensor '" + name + "': offset_bytes " + std::to_string(offset) +
                                       ", expected " + std::to_string(expected_offset));
            if (offset + 4 * len > blob.size())
                throw ModelFormatError("tensor '" + name + "': weights.bin ends at byte " +
                                       std::to_string(blob.size()) + " but tensor needs bytes [" +
                                       std::to_string(offset) + ", " + std::to_string(offset + 4 * len) + ")");
            std::vector<float> data(len);
            for (std::size_t k = 0; k < len; ++k) {
                std::uint32_t bits = 0;
                for (int b = 0; b < 4; ++b)
                    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(blob[offset + 4 * k + b]))
                            << (8 * b);
                data[k] = std::bit_cast<float>(bits);
            }
            w.tensors[i] = Tensor<float>(shape, std::move(data));
            expected_offset += 4 * len;
        }
        if (expected_offset != blob.size())
            throw ModelFormatError("weights.bin has " + std::to_string(blob.size() - expected_offset) +
                                   " trailing bytes after tensor '" + tensor_names().back() + "'");
        return w;
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError(std::string("manifest: ") + e.what());
    }
}

inline ModelWeights<float> load_model(const std::filesystem::path& dir)
{
    const auto manifest_path = dir / kManifestFile;
    const auto weights_path = dir / kWeightsFile;
    std::ifstream min(manifest_path);
    if (!min)
        throw ModelFormatError("cannot open " + manifest_path.string());
    nlohmann::json m;
    try {
        min >> m;
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError(manifest_path.string() + ": malformed JSON: " + e.what());
    }
    std::ifstream win(weights_path, std::ios::binary);
    if (!win)
        throw ModelFormatError("cannot open " + weights_path.string());
    std::vector<char> blob((std::istreambuf_iterator<char>(win)), std::istreambuf_iterator<char>());
    return decode_model(m, blob);
}

} // namespace prunebench
