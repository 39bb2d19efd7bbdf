#include "oracles.hpp"

#include "prunebench/pruning.hpp"
#include "prunebench/reparam.hpp"
#include "prunebench/training.hpp"

#include <gtest/gtest.h>

using namespace prunebench;

namespace {

SynthConfig small_synth(std::uint64_t seed, std::size_t n, std::size_t frames)
{
    SynthConfig c;
    c.seed = seed;
    c.num_sequences = n;
    c.frames_per_sequence = frames;
    return c;
}

/// Worst relative error between float analytic gradients and central
/// differences of the double-precision loss, over every coordinate.
double worst_fd_error(const ModelWeights<float>& w, const Example<float>& ex)
{
    const std::vector<Example<float>> batch = {ex};
    const auto g = gradients<float>(w, batch);
    auto wd = w.cast<double>();
    const auto exd = cast_example<double>(ex);
    constexpr double h = 1e-5;
    double worst = 0.0;
    for (std::size_t id = 0; id < tensor_id::count; ++id)
        for (std::size_t k = 0; k < wd[id].size(); ++k) {
            const double orig = wd[id][k];
            wd[id][k] = orig + h;
            const double up = loss(wd, exd);
            wd[id][k] = orig - h;
            const double down = loss(wd, exd);
            wd[id][k] = orig;
            const double num = (up - down) / (2.0 * h);
            const double ana = g[id][k];
            const double rel = std::abs(ana - num) / std::max({std::abs(ana), std::abs(num), 1e-6});
            worst = std::max(worst, rel);
        }
    return worst;
}

} // namespace

TEST(SynthDataset, DeterministicAndShaped)
{
    const auto a = make_synth_dataset(small_synth(3, 4, 6));
    const auto b = make_synth_dataset(small_synth(3, 4, 6));
    ASSERT_EQ(a.size(), 4u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].noisy, b[i].noisy);
        EXPECT_EQ(a[i].clean, b[i].clean);
        ASSERT_EQ(a[i].noisy.size(), 6u);
        EXPECT_EQ(a[i].noisy[0].size(), 16u);
        for (std::size_t t = 0; t < 6; ++t)
            for (std::size_t f = 0; f < 16; ++f) {
                EXPECT_GE(a[i].clean[t][f], 0.0f);
                EXPECT_GE(a[i].noisy[t][f], a[i].clean[t][f]);
            }
    }
    EXPECT_NE(make_synth_dataset(small_synth(4, 4, 6))[0].clean, a[0].clean);
    EXPECT_THROW(make_synth_dataset(small_synth(1, 0, 6)), std::invalid_argument);
}

TEST(Loss, ZeroWhenOutputIsTarget)
{
    const auto w = build_model(ModelSpec{{{2, 2, 4, 4}}, 16}, 1);
    auto ex = make_synth_dataset(small_synth(1, 1, 5))[0];
    ex.clean = forward_sequence(w, ex.noisy);
    EXPECT_EQ(loss(w, ex), 0.0);
}

TEST(Loss, MatchesLoopOracleAndBatchMean)
{
    const auto w = build_model(ModelSpec{{{2, 3, 3, 4}}, 16}, 2);
    const auto data = make_synth_dataset(small_synth(5, 3, 4));
    double total = 0.0;
    for (const auto& ex : data) {
        oracle::Network net(w);
        double acc = 0.0;
        for (std::size_t t = 0; t < ex.noisy.size(); ++t) {
            const auto y = net.step(ex.noisy[t]);
            for (std::size_t f = 0; f < 16; ++f)
                acc += (y[f] - ex.clean[t][f]) * (y[f] - ex.clean[t][f]);
        }
        acc /= static_cast<double>(ex.noisy.size() * 16);
        EXPECT_NEAR(loss(w, ex), acc, 1e-6 * std::max(1.0, acc));
        total += acc;
    }
    const double batch = loss<float>(w, std::span<const Example<float>>(data));
    EXPECT_NEAR(batch, total / 3.0, 1e-6);
    const std::vector<Example<float>> reversed(data.rbegin(), data.rend());
    EXPECT_DOUBLE_EQ(loss<float>(w, std::span<const Example<float>>(reversed)), batch);
}

TEST(Loss, ShapeMismatchThrows)
{
    const auto w = build_model(ModelSpec{{{2, 2, 4, 4}}, 16}, 1);
    auto ex = make_synth_dataset(small_synth(1, 1, 5))[0];
    ex.clean.pop_back();
    EXPECT_THROW(loss(w, ex), std::invalid_argument);
    auto ex2 = make_synth_dataset(small_synth(1, 1, 5))[0];
    ex2.noisy[2].push_back(0.0f);
    EXPECT_THROW(loss(w, ex2), std::invalid_argument);
}

TEST(Gradients, FiniteDifferencesTinyModel)
{
    const auto w = build_model(ModelSpec{{{1, 1, 1, 1}}, 16}, 11);
    const auto ex = make_synth_dataset(small_synth(9, 1, 3))[0];
    EXPECT_LT(worst_fd_error(w, ex), 1e-3);
}

TEST(Gradients, FiniteDifferencesWiderModel)
{
    const auto w = build_model(ModelSpec{{{2, 2, 3, 3}}, 32}, 12);
    auto cfg = small_synth(10, 1, 4);
    cfg.freq_bins = 32;
    EXPECT_LT(worst_fd_error(w, make_synth_dataset(cfg)[0]), 1e-3);
}

TEST(Gradients, ZeroModelZeroInput)
{
    auto w = build_model(ModelSpec{{{2, 2, 2, 2}}, 16}, 0);
    for (auto& t : w.tensors)
        t.fill(0.0f);
    Example<float> ex{std::vector<Frame>(3, Frame(16, 0.0f)), std::vector<Frame>(3, Frame(16, 0.0f))};
    const std::vector<Example<float>> batch = {ex};
    const auto g = gradients<float>(w, batch);
    for (const auto& t : g.tensors)
        for (float v : t.data())
            EXPECT_EQ(v, 0.0f);
}

TEST(Gradients, DuplicatedPairEqualsSingle)
{
    const auto w = build_model(ModelSpec{{{2, 2, 4, 4}}, 16}, 5);
    const auto ex = make_synth_dataset(small_synth(2, 1, 4))[0];
    const std::vector<Example<float>> one = {ex}, two = {ex, ex};
    const auto g1 = gradients<float>(w, one), g2 = gradients<float>(w, two);
    for (std::size_t id = 0; id < tensor_id::count; ++id)
        for (std::size_t k = 0; k < g1[id].size(); ++k)
            EXPECT_NEAR(g1[id][k], g2[id][k], 1e-6f * std::max(1.0f, std::abs(g1[id][k])));
}

TEST(Adam, ZeroGradientLeavesWeights)
{
    auto w = build_model(ModelSpec{{{2, 2, 4, 4}}, 16}, 5);
    const auto before = w;
    Adam opt(w, TrainConfig{});
    auto zero = w;
    for (auto& t : zero.tensors)
        t.fill(0.0f);
    for (int i = 0; i < 3; ++i)
        opt.step(w, zero);
    EXPECT_EQ(w, before);
}

TEST(Train, ZeroLearningRateLeavesWeights)
{
    const auto w = build_model(ModelSpec{{{2, 2, 4, 4}}, 16}, 5);
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.epochs = 2;
    EXPECT_EQ(train(w, make_synth_dataset(small_synth(1, 4, 4)), cfg).weights, w);
}

TEST(Train, DeterministicAndImproving)
{
    const auto w = build_model(ModelSpec{{{2, 2, 4, 4}}, 16}, 5);
    const auto data = make_synth_dataset(small_synth(1, 16, 8));
    TrainConfig cfg;
    cfg.epochs = 20;
    const auto a = train(w, data, cfg), b = train(w, data, cfg);
    EXPECT_EQ(a.weights, b.weights);
    EXPECT_EQ(a.history, b.history);
    ASSERT_EQ(a.history.size(), 20u);
    EXPECT_LT(a.history.back(), a.history.front());
}

TEST(Train, RejectsBadConfigs)
{
    const auto w = build_model(ModelSpec{{{2, 2, 4, 4}}, 16}, 5);
    const auto data = make_synth_dataset(small_synth(1, 2, 4));
    TrainConfig cfg;
    cfg.epochs = 0;
    EXPECT_THROW(train(w, data, cfg), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.learning_rate = -1.0;
    EXPECT_THROW(train(w, data, cfg), std::invalid_argument);
    EXPECT_THROW(train(w, {}, TrainConfig{}), std::invalid_argument);
}

TEST(Train, NonFiniteLossAborts)
{
    auto w = build_model(ModelSpec{{{2, 2, 4, 4}}, 16}, 5);
    auto data = make_synth_dataset(small_synth(1, 2, 4));
    data[0].clean[1][3] = std::numeric_limits<float>::infinity();
    TrainConfig cfg;
    cfg.epochs = 1;
    EXPECT_THROW(train(w, data, cfg), TrainingError);
}

TEST(Experiments, PruneVsDirectShapesAndSweep)
{
    const auto base = build_model(ModelSpec{{{2, 4, 4, 8}}, 16}, 5);
    const auto data = make_synth_dataset(small_synth(1, 4, 4));
    const auto eval = make_synth_dataset(small_synth(2, 2, 4));
    TrainConfig cfg;
    cfg.epochs = 2;
    const NetworkParam target{{2, 4, 4, 4}};
    const auto rep = experiment_prune_vs_direct(base, target, data, eval, cfg, 3, 99);
    EXPECT_EQ(rep.finetuned.spec, rep.direct.spec);
    EXPECT_EQ(rep.finetune_history.size(), 2u);
    EXPECT_EQ(rep.direct_history.size(), 3u);
    EXPECT_DOUBLE_EQ(rep.pruned_loss, evaluate(prune_structured(base, target), eval));

    const auto one = experiment_lr_sweep(base, target, data, eval, cfg, {1e-3});
    ASSERT_EQ(one.size(), 1u);
    const auto again = experiment_lr_sweep(base, target, data, eval, cfg, {1e-3});
    EXPECT_EQ(one[0].final_loss, again[0].final_loss);
    EXPECT_THROW(experiment_lr_sweep(base, target, data, eval, cfg, {}), std::invalid_argument);
}
