#include "prunebench/inference.hpp"
#include "prunebench/model.hpp"
#include "prunebench/reparam.hpp"
#include "prunebench/serialize.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

using namespace prunebench;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name)
{
    auto dir = fs::temp_directory_path() / ("prunebench_model_test_" + name);
    fs::remove_all(dir);
    return dir;
}

} // namespace

TEST(BuildModel, DeterministicForSeed)
{
    const ModelSpec spec{kCruse16, 16};
    EXPECT_EQ(build_model(spec, 5), build_model(spec, 5));
    EXPECT_FALSE(build_model(spec, 5) == build_model(spec, 6));
}

TEST(BuildModel, Cruse32GruShape)
{
    const auto w = build_model(ModelSpec{kCruse32, 16}, 1);
    EXPECT_EQ(w[tensor_id::gru_ih].shape(), (Shape{768, 256}));
    EXPECT_EQ(w[tensor_id::gru_hh].shape(), (Shape{768, 256}));
    EXPECT_EQ(w[tensor_id::dec_weight(1)].shape(), (Shape{256, 128, 2, 3}));
    EXPECT_EQ(w[tensor_id::dec_weight(4)].shape(), (Shape{32, 1, 2, 3}));
}

TEST(BuildModel, InitWithinFanInBound)
{
    const auto w = build_model(ModelSpec{{{4, 8, 8, 16}}, 32}, 3);
    for (std::size_t id = 0; id < tensor_id::count; ++id) {
        const double bound = std::sqrt(1.0 / static_cast<double>(detail::fan_in(w.spec, id)));
        for (float v : w[id].data())
            EXPECT_LE(std::abs(v), bound);
    }
}

TEST(BuildModel, RejectsInvalidSpecs)
{
    EXPECT_THROW(build_model(ModelSpec{{{2, 1, 2, 2}}, 16}, 0), std::invalid_argument);
    EXPECT_THROW(build_model(ModelSpec{{{0, 1, 2, 2}}, 16}, 0), std::invalid_argument);
    EXPECT_THROW(build_model(ModelSpec{{{1, 1, 2, 2}}, 24}, 0), std::invalid_argument);
}

TEST(ParameterCount, TinyModelClosedForm)
{
    // [2,2,2,2], F=16: convs 6*(1*2 + 2*2 + 2*2 + 2*2) per side, biases
    // enc 2+2+2+2 and dec 2+2+2+1, GRU 2 * (3*2*2) + 2 * 3*2.
    const ModelSpec spec{{{2, 2, 2, 2}}, 16};
    const std::size_t convs = 2 * 6 * (2 + 4 + 4 + 4);
    const std::size_t biases = 8 + 7;
    const std::size_t gru = 2 * 12 + 2 * 6;
    EXPECT_EQ(parameter_count(spec), convs + biases + gru);
    EXPECT_EQ(build_model(spec, 0).parameter_count(), parameter_count(spec));
    EXPECT_EQ(encode_weights(build_model(spec, 0)).size(), 4 * parameter_count(spec));
}

TEST(ModelMemory, BytesPerParameter)
{
    // 4 bytes per parameter in MiB; check against the closed form and one
    // exact value: a 512x512 GRU slice is 4 * 2^18 bytes = 1 MiB.
    const auto w = build_model(ModelSpec{kCruse32, 16}, 0);
    EXPECT_DOUBLE_EQ(model_memory_mb(w), 4.0 * static_cast<double>(parameter_count(w.spec)) / 1048576.0);
    ModelWeights<float> fake = w;
    for (auto& t : fake.tensors)
        t = Tensor<float>(Shape{1});
    fake.tensors[0] = Tensor<float>(Shape{1024, 1024});
    EXPECT_DOUBLE_EQ(model_memory_mb(fake), 4.0 + 19.0 * 4.0 / 1048576.0);
}

TEST(ModelMemory, Cruse32VsP875RatioAboveTen)
{
    const double big = static_cast<double>(parameter_count(ModelSpec{kCruse32, 16}));
    const double small = static_cast<double>(parameter_count(ModelSpec{*find_config("P.875"), 16}));
    EXPECT_GT(big / small, 10.0);
}

TEST(CouplingGroups, FourGroupsWithConsistentAxisLengths)
{
    for (std::size_t F : {16u, 32u, 64u}) {
        const ModelSpec spec{kCruse32, F};
        const auto w = build_model(spec, 1);
        const auto groups = coupling_groups(spec);
        ASSERT_EQ(groups.size(), 4u);
        for (std::size_t g = 0; g < 4; ++g) {
            EXPECT_EQ(groups[g].target, g);
            for (const auto& e : groups[g].entries) {
                const std::size_t blocks = e.gate_stacked ? 3 : 1;
                EXPECT_EQ(w[e.tensor].dim(e.axis), blocks * spec.params[g] * e.group)
                    << tensor_names()[e.tensor] << " axis " << e.axis;
            }
        }
    }
}

TEST(CouplingGroups, EveryChannelAxisCoveredExactlyOnce)
{
    // Walk every axis of every tensor. An axis is channel-sized if its
    // length moves when exactly one c_i moves; each such axis must appear in
    // exactly one group, and no other axis may appear at all.
    const ModelSpec base{{{3, 5, 7, 11}}, 32};
    const auto shapes = expected_shapes(base);
    std::map<std::pair<std::size_t, std::size_t>, int> owner;
    for (std::size_t i = 0; i < 4; ++i) {
        ModelSpec bumped = base;
        bumped.params[i] += 2;
        const auto moved = expected_shapes(bumped);
        for (std::size_t t = 0; t < tensor_id::count; ++t)
            for (std::size_t a = 0; a < shapes[t].size(); ++a)
                if (moved[t][a] != shapes[t][a]) {
                    EXPECT_EQ(owner.count({t, a}), 0u) << tensor_names()[t] << " depends on two channel counts";
                    owner[{t, a}] = static_cast<int>(i);
                }
    }
    std::map<std::pair<std::size_t, std::size_t>, int> seen;
    for (const auto& g : coupling_groups(base))
        for (const auto& e : g.entries) {
            EXPECT_EQ(seen.count({e.tensor, e.axis}), 0u) << tensor_names()[e.tensor] << " listed twice";
            seen[{e.tensor, e.axis}] = static_cast<int>(g.target);
        }
    EXPECT_EQ(seen, owner);
}

TEST(CouplingGroups, SkipPairTiesEnc1AndDec4)
{
    const auto groups = coupling_groups(ModelSpec{kCruse32, 16});
    const auto& c1 = groups[0].entries;
    auto has = [&](std::size_t t, std::size_t a) {
        return std::any_of(c1.begin(), c1.end(), [&](const CouplingEntry& e) { return e.tensor == t && e.axis == a; });
    };
    EXPECT_TRUE(has(tensor_id::enc_weight(1), 0));
    EXPECT_TRUE(has(tensor_id::dec_weight(4), 0));
    EXPECT_TRUE(has(tensor_id::dec_bias(3), 0));
}

TEST(Serialization, RoundTripIsBitExact)
{
    const auto dir = temp_dir("roundtrip");
    const auto w = build_model(ModelSpec{{{2, 4, 4, 8}}, 32}, 9);
    save_model(w, dir);
    const auto back = load_model(dir);
    EXPECT_EQ(back, w);

    const auto x = std::vector<Frame>(5, Frame(32, 0.7f));
    EXPECT_EQ(forward_sequence(w, x), forward_sequence(back, x));

    const auto blob_bytes = fs::file_size(dir / kWeightsFile);
    EXPECT_EQ(blob_bytes, 4 * w.parameter_count());
}

TEST(Serialization, ManifestFields)
{
    const auto dir = temp_dir("manifest");
    save_model(build_model(ModelSpec{kCruse16, 16}, 1), dir);
    std::ifstream in(dir / kManifestFile);
    const auto m = nlohmann::json::parse(in);
    EXPECT_EQ(m["version"], 1);
    EXPECT_EQ(m["network_param"], nlohmann::json({16, 32, 64, 128}));
    EXPECT_EQ(m["freq_bins"], 16);
    ASSERT_EQ(m["tensors"].size(), tensor_id::count);
    EXPECT_EQ(m["tensors"][8]["name"], "gru_ih");
    EXPECT_EQ(m["tensors"][8]["shape"], nlohmann::json({384, 128}));
    EXPECT_EQ(m["tensors"][1]["offset_bytes"], 4 * 16 * 1 * 6);
    EXPECT_EQ(m["tensors"][0]["dtype"], "f32");
}

TEST(Serialization, LittleEndianPayload)
{
    auto w = build_model(ModelSpec{{{1, 1, 1, 1}}, 16}, 0);
    w[0][0] = 1.0f; // 0x3f800000
    const auto blob = encode_weights(w);
    EXPECT_EQ(static_cast<unsigned char>(blob[0]), 0x00);
    EXPECT_EQ(static_cast<unsigned char>(blob[2]), 0x80);
    EXPECT_EQ(static_cast<unsigned char>(blob[3]), 0x3f);
}

TEST(Serialization, TruncatedBlobNamesOffendingTensor)
{
    const auto dir = temp_dir("truncated");
    save_model(build_model(ModelSpec{{{2, 2, 2, 2}}, 16}, 1), dir);
    const auto size = fs::file_size(dir / kWeightsFile);
    fs::resize_file(dir / kWeightsFile, size - 4);
    try {
        load_model(dir);
        FAIL() << "expected ModelFormatError";
    } catch (const ModelFormatError& e) {
        EXPECT_NE(std::string(e.what()).find("dec4_b"), std::string::npos) << e.what();
    }
}

TEST(Serialization, RejectsBadManifests)
{
    const auto dir = temp_dir("bad");
    save_model(build_model(ModelSpec{{{2, 2, 2, 2}}, 16}, 1), dir);
    std::ifstream in(dir / kManifestFile);
    const auto good = nlohmann::json::parse(in);
    std::ifstream bin(dir / kWeightsFile, std::ios::binary);
    const std::vector<char> blob((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());

    auto expect_error = [&](nlohmann::json m, const std::string& needle) {
        try {
            decode_model(m, blob);
            ADD_FAILURE() << "accepted manifest, expected error mentioning " << needle;
        } catch (const ModelFormatError& e) {
            EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
        }
    };
    auto m = good;
    m["version"] = 2;
    expect_error(m, "version");
    m = good;
    m.erase("freq_bins");
    expect_error(m, "freq_bins");
    m = good;
    m["tensors"][3]["len_elems"] = 1;
    expect_error(m, "enc2_b");
    m = good;
    m["tensors"][9]["shape"] = {6, 3};
    expect_error(m, "gru_hh");
    m = good;
    m["network_param"] = {2, 2, 2};
    expect_error(m, "network_param");

    auto extra = blob;
    extra.push_back(0);
    EXPECT_THROW(decode_model(good, extra), ModelFormatError);

    std::ofstream(dir / kManifestFile) << "{ not json";
    EXPECT_THROW(load_model(dir), ModelFormatError);
    EXPECT_THROW(load_model(temp_dir("missing")), ModelFormatError);
}
