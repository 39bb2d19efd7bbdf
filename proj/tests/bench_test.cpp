#include "prunebench/bench.hpp"
#include "prunebench/reparam.hpp"

#include <gtest/gtest.h>

using namespace prunebench;

TEST(MeanCi, OneToFive)
{
    const std::vector<double> xs = {1, 2, 3, 4, 5};
    const auto ci = mean_ci95(xs);
    EXPECT_DOUBLE_EQ(ci.mean, 3.0);
    // s = sqrt(2.5), t_{.975,4} = 2.776445
    EXPECT_NEAR(ci.half_width, 1.9632, 1e-3);
    EXPECT_NEAR(ci.half_width, 2.776445105 * std::sqrt(2.5) / std::sqrt(5.0), 1e-9);
}

TEST(MeanCi, ConstantInputHasZeroWidth)
{
    const std::vector<double> xs(7, 0.25);
    const auto ci = mean_ci95(xs);
    EXPECT_DOUBLE_EQ(ci.mean, 0.25);
    EXPECT_EQ(ci.half_width, 0.0);
}

TEST(MeanCi, TwoSamplesClosedForm)
{
    const std::vector<double> xs = {1.0, 3.0};
    // s = sqrt(2), half width = 12.706 * sqrt(2) / sqrt(2)
    EXPECT_NEAR(mean_ci95(xs).half_width, 12.706204736, 1e-9);
}

TEST(MeanCi, NeedsTwoSamples)
{
    EXPECT_THROW(mean_ci95(std::vector<double>{1.0}), std::invalid_argument);
    EXPECT_THROW(mean_ci95(std::vector<double>{}), std::invalid_argument);
}

TEST(TQuantile, LargeDfApproachesNormal)
{
    // Reference values t_{.975}(df) for df = 40, 60, 120, 1000.
    EXPECT_NEAR(t_quantile_975(40), 2.021075390, 1e-5);
    EXPECT_NEAR(t_quantile_975(60), 2.000297822, 1e-5);
    EXPECT_NEAR(t_quantile_975(120), 1.979930405, 1e-5);
    EXPECT_NEAR(t_quantile_975(1000), 1.962339081, 1e-5);
    EXPECT_THROW(t_quantile_975(0), std::invalid_argument);
    for (std::size_t df = 1; df < 200; ++df)
        EXPECT_GT(t_quantile_975(df), t_quantile_975(df + 1));
}

TEST(Intervals, Overlap)
{
    EXPECT_TRUE(intervals_overlap(1.0, 0.5, 1.9, 0.5));
    EXPECT_FALSE(intervals_overlap(1.0, 0.4, 1.9, 0.4));
}

TEST(Benchmark, ReportFields)
{
    const auto w = build_model(ModelSpec{{{2, 2, 4, 4}}, 16}, 1);
    const BenchParams p{5, 4, 1, 42};
    const auto r = benchmark(w, p, "tiny");
    EXPECT_EQ(r.config_name, "tiny");
    EXPECT_EQ(r.samples, 4u);
    EXPECT_EQ(r.raw_ms.size(), 4u);
    EXPECT_EQ(r.frames_per_sample, 5u);
    EXPECT_GT(r.mean_ms_per_frame, 0.0);
    EXPECT_DOUBLE_EQ(r.memory_mb, model_memory_mb(w));
    EXPECT_FALSE(r.timestamp.empty());
    EXPECT_THROW(benchmark(w, BenchParams{5, 1, 0, 1}), std::invalid_argument);
    EXPECT_THROW(benchmark(w, BenchParams{0, 4, 0, 1}), std::invalid_argument);
}

TEST(Benchmark, JsonRoundTrip)
{
    const auto w = build_model(ModelSpec{{{2, 2, 4, 4}}, 16}, 1);
    const auto r = benchmark(w, BenchParams{3, 3, 0, 1}, "x");
    const nlohmann::json j = r;
    const auto back = j.get<BenchmarkReport>();
    EXPECT_EQ(back.config_name, r.config_name);
    EXPECT_EQ(back.raw_ms, r.raw_ms);
    EXPECT_DOUBLE_EQ(back.ci95_half_width_ms, r.ci95_half_width_ms);
}

TEST(Benchmark, InterleavedAndSparseRows)
{
    const auto w = build_model(ModelSpec{{{2, 2, 4, 4}}, 16}, 1);
    const auto rows = compare_sparse_dense(w, {0.0, 0.5}, BenchParams{3, 3, 1, 1});
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].config_name, "sparse_gru_0");
    EXPECT_EQ(rows[1].config_name, "sparse_gru_0.5");
    EXPECT_THROW(benchmark_interleaved({&w}, {"a", "b"}, BenchParams{3, 3, 1, 1}), std::invalid_argument);
}

TEST(Speedup, TableAndCsv)
{
    BenchmarkReport a, b;
    a.config_name = "CRUSE32";
    a.mean_ms_per_frame = 2.0;
    a.memory_mb = 8.0;
    b.config_name = "P.875";
    b.mean_ms_per_frame = 0.5;
    b.ci95_half_width_ms = 0.01;
    b.memory_mb = 0.5;
    const auto rows = speedup_table({a, b}, "CRUSE32");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_DOUBLE_EQ(rows[0].speedup, 1.0);
    EXPECT_DOUBLE_EQ(rows[1].speedup, 4.0);
    EXPECT_DOUBLE_EQ(rows[1].memory_reduction, 16.0);
    EXPECT_THROW(speedup_table({b}, "CRUSE32"), std::invalid_argument);
    EXPECT_EQ(speedup_csv(rows), "config,mean_ms,ci95_ms,memory_mb,speedup\nCRUSE32,2,0,8,1\nP.875,0.5,0.01,0.5,4\n");
}
