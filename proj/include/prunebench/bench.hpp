#pragma once

// Latency benchmarking: warmup, repeated timed samples of the uninstrumented
// streaming path, and Student-t 95% confidence intervals on the per-frame mean.

#include "prunebench/inference.hpp"
#include "prunebench/model.hpp"
#include "prunebench/pruning.hpp"

#include <json.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#if defined(__unix__) || defined(__APPLE__)
#include <sys/utsname.h>
#include <unistd.h>
#endif

namespace prunebench {

// ---------------------------------------------------------------------------
// Statistics

/// Two-sided 95% Student-t critical value, t_{0.975, df}.
inline double t_quantile_975(std::size_t df)
{
    static constexpr std::array<double, 30> table = {
        12.706204736, 4.302652730, 3.182446305, 2.776445105, 2.570581836, 2.446911851, 2.364624252,
        2.306004135,  2.262157163, 2.228138852, 2.200985160, 2.178812830, 2.160368656, 2.144786688,
        2.131449546,  2.119905299, 2.109815578, 2.100922040, 2.093024054, 2.085963447, 2.079613845,
        2.073873068,  2.068657610, 2.063898562, 2.059538553, 2.055529439, 2.051830516, 2.048407142,
        2.045229642,  2.042272456};
    if (df == 0)
        throw std::invalid_argument("t quantile needs at least one degree of freedom");
    if (df <= table.size())
        return table[df - 1];
    // Cornish-Fisher expansion around the normal quantile; below 1e-4 error past df = 30.
    constexpr double z = 1.959963984540054;
    const double v = static_cast<double>(df);
    const double z3 = z * z * z, z5 = z3 * z * z, z7 = z5 * z * z;
    return z + (z3 + z) / (4.0 * v) + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * v * v) +
           (3.0 * z7 + 19.0 * z5 + 17.0 * z3 - 15.0 * z) / (384.0 * v * v * v);
}

struct MeanCi {
    double mean = 0.0;
    double half_width = 0.0;
    double stddev = 0.0;
};

/// Sample mean and t-based 95% half-width using the unbiased standard deviation.
inline MeanCi mean_ci95(std::span<const double> xs)
{
    if (xs.size() < 2)
        throw std::invalid_argument("mean_ci95 needs at least 2 samples, got " + std::to_string(xs.size()));
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs)
        mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : xs)
        ss += (x - mean) * (x - mean);
    const double s = std::sqrt(ss / (n - 1.0));
    return {mean, t_quantile_975(xs.size() - 1) * s / std::sqrt(n), s};
}

inline bool intervals_overlap(double mean_a, double hw_a, double mean_b, double hw_b)
{
    return std::abs(mean_a - mean_b) <= hw_a + hw_b;
}

// ---------------------------------------------------------------------------
// Reports

struct BenchmarkReport {
    std::string config_name;
    double mean_ms_per_frame = 0.0;
    double ci95_half_width_ms = 0.0;
    std::size_t samples = 0;
    std::size_t frames_per_sample = 0;
    std::size_t warmup_samples = 0;
    double memory_mb = 0.0;
    std::string timestamp;
    std::string host;
    std::vector<double> raw_ms; // per-sample ms/frame

    bool overlaps(const BenchmarkReport& o) const
    {
        return intervals_overlap(mean_ms_per_frame, ci95_half_width_ms, o.mean_ms_per_frame, o.ci95_half_width_ms);
    }
};

inline void to_json(nlohmann::json& j, const BenchmarkReport& r)
{
    j = {{"config_name", r.config_name},
         {"mean_ms_per_frame", r.mean_ms_per_frame},
         {"ci95_half_width_ms", r.ci95_half_width_ms},
         {"samples", r.samples},
         {"frames_per_sample", r.frames_per_sample},
         {"warmup_samples", r.warmup_samples},
         {"memory_mb", r.memory_mb},
         {"timestamp", r.timestamp},
         {"host", r.host},
         {"raw_ms", r.raw_ms}};
}

inline void from_json(const nlohmann::json& j, BenchmarkReport& r)
{
    j.at("config_name").get_to(r.config_name);
    j.at("mean_ms_per_frame").get_to(r.mean_ms_per_frame);
    j.at("ci95_half_width_ms").get_to(r.ci95_half_width_ms);
    j.at("samples").get_to(r.samples);
    j.at("frames_per_sample").get_to(r.frames_per_sample);
    j.at("warmup_samples").get_to(r.warmup_samples);
    j.at("memory_mb").get_to(r.memory_mb);
    r.timestamp = j.value("timestamp", "");
    r.host = j.value("host", "");
    r.raw_ms = j.value("raw_ms", std::vector<double>{});
}

inline std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
#if defined(_WIN32)
    gmtime_s(&tm, &now);
#else
    gmtime_r(&now, &tm);
#endif
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

inline std::string host_descriptor()
{
    std::ostringstream os;
#if defined(__unix__) || defined(__APPLE__)
    utsname u{};
    if (uname(&u) == 0)
        os << u.nodename << ' ' << u.sysname << ' ' << u.release << ' ' << u.machine;
#endif
    std::ifstream cpu("/proc/cpuinfo");
    for (std::string line; std::getline(cpu, line);)
        if (line.rfind("model name", 0) == 0) {
            os << " | " << line.substr(line.find(':') + 2);
            break;
        }
    os << " | hw_threads=" << std::thread::hardware_concurrency();
    return os.str();
}

// ---------------------------------------------------------------------------
// Benchmarking

struct BenchParams {
    std::size_t frames_per_sample = 100;
    std::size_t samples = 100;
    std::size_t warmup = 10;
    std::uint64_t seed = 42;
};

/// Seeded non-negative input frames; the workload is identical for a given seed.
inline std::vector<Frame> bench_input(std::size_t freq_bins, std::size_t frames, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<Frame> out(frames, Frame(freq_bins));
    for (auto& f : out)
        for (auto& v : f)
            v = static_cast<float>(rng.uniform());
    return out;
}

namespace detail {

/// Times one forward pass over `input` from a reset state; returns ms per frame.
class SampleTimer {
public:
    SampleTimer(const ModelWeights<float>& w, const std::vector<Frame>& input)
        : w_(w), input_(input), state_(w.spec), out_(w.spec.freq_bins)
    {
    }

    double run()
    {
        const auto t0 = std::chrono::steady_clock::now();
        state_.reset();
        for (const auto& x : input_)
            forward_frame_into<float>(w_, state_, x, out_);
        const auto t1 = std::chrono::steady_clock::now();
        sink_ += out_[0];
        return std::chrono::duration<double, std::milli>(t1 - t0).count() / static_cast<double>(input_.size());
    }

    float sink() const { return sink_; }

private:
    const ModelWeights<float>& w_;
    const std::vector<Frame>& input_;
    StreamState<float> state_;
    std::vector<float> out_;
    float sink_ = 0.0f;
};

inline void check_bench_params(const BenchParams& p)
{
    if (p.samples < 2)
        throw std::invalid_argument("benchmark needs at least 2 samples");
    if (p.frames_per_sample < 1)
        throw std::invalid_argument("benchmark needs at least 1 frame per sample");
}

inline BenchmarkReport make_report(std::string name, const ModelWeights<float>& w, const BenchParams& p,
                                   std::vector<double> raw)
{
    const auto ci = mean_ci95(raw);
    BenchmarkReport r;
    r.config_name = std::move(name);
    r.mean_ms_per_frame = ci.mean;
    r.ci95_half_width_ms = ci.half_width;
    r.samples = p.samples;
    r.frames_per_sample = p.frames_per_sample;
    r.warmup_samples = p.warmup;
    r.memory_mb = model_memory_mb(w);
    r.timestamp = utc_timestamp();
    r.host = host_descriptor();
    r.raw_ms = std::move(raw);
    return r;
}

} // namespace detail

/// `warmup` untimed samples, then `samples` timed ones, each a full pass over
/// the same seeded input. Runs on the calling thread only.
inline BenchmarkReport benchmark(const ModelWeights<float>& w, const BenchParams& p, std::string name = "model")
{
    detail::check_bench_params(p);
    const auto input = bench_input(w.spec.freq_bins, p.frames_per_sample, p.seed);
    detail::SampleTimer timer(w, input);
    for (std::size_t i = 0; i < p.warmup; ++i)
        timer.run();
    std::vector<double> raw;
    raw.reserve(p.samples);
    for (std::size_t i = 0; i < p.samples; ++i)
        raw.push_back(timer.run());
    return detail::make_report(std::move(name), w, p, std::move(raw));
}

/// Benchmarks several models with their samples interleaved round-robin, so
/// slow drift of the host (frequency scaling, background load) is shared by
/// every row instead of biasing whichever model ran last.
inline std::vector<BenchmarkReport> benchmark_interleaved(const std::vector<const ModelWeights<float>*>& models,
                                                          const std::vector<std::string>& names,
                                                          const BenchParams& p)
{
    detail::check_bench_params(p);
    if (models.size() != names.size())
        throw std::invalid_argument("benchmark_interleaved: one name per model required");
    std::vector<std::vector<Frame>> inputs;
    inputs.reserve(models.size());
    for (const auto* m : models)
        inputs.push_back(bench_input(m->spec.freq_bins, p.frames_per_sample, p.seed));
    std::vector<detail::SampleTimer> timers;
    timers.reserve(models.size());
    for (std::size_t i = 0; i < models.size(); ++i)
        timers.emplace_back(*models[i], inputs[i]);
    for (std::size_t s = 0; s < p.warmup; ++s)
        for (auto& t : timers)
            t.run();
    std::vector<std::vector<double>> raw(models.size());
    for (std::size_t s = 0; s < p.samples; ++s)
        for (std::size_t i = 0; i < timers.size(); ++i)
            raw[i].push_back(timers[i].run());
    std::vector<BenchmarkReport> out;
    for (std::size_t i = 0; i < models.size(); ++i)
        out.push_back(detail::make_report(names[i], *models[i], p, std::move(raw[i])));
    return out;
}

/// Dense engine timings of GRU-sparsified copies of `base`, one row per fraction.
inline std::vector<BenchmarkReport> compare_sparse_dense(const ModelWeights<float>& base,
                                                         const std::vector<double>& fracs, const BenchParams& p)
{
    std::vector<ModelWeights<float>> models;
    std::vector<std::string> names;
    for (double f : fracs) {
        models.push_back(prune_unstructured(base, f));
        std::ostringstream os;
        os << "sparse_gru_" << f;
        names.push_back(os.str());
    }
    std::vector<const ModelWeights<float>*> ptrs;
    for (const auto& m : models)
        ptrs.push_back(&m);
    return benchmark_interleaved(ptrs, names, p);
}

struct SpeedupRow {
    std::string config;
    double mean_ms = 0.0;
    double ci95_ms = 0.0;
    double memory_mb = 0.0;
    double speedup = 0.0;
    double memory_reduction = 0.0;
};

inline std::vector<SpeedupRow> speedup_table(const std::vector<BenchmarkReport>& reports,
                                             const std::string& baseline_name)
{
    const BenchmarkReport* base = nullptr;
    for (const auto& r : reports)
        if (r.config_name == baseline_name)
            base = &r;
    if (!base)
        throw std::invalid_argument("baseline '" + baseline_name + "' not among the reports");
    std::vector<SpeedupRow> rows;
    for (const auto& r : reports)
        rows.push_back({r.config_name, r.mean_ms_per_frame, r.ci95_half_width_ms, r.memory_mb,
                        base->mean_ms_per_frame / r.mean_ms_per_frame, base->memory_mb / r.memory_mb});
    return rows;
}

inline std::string speedup_csv(const std::vector<SpeedupRow>& rows)
{
    std::ostringstream os;
    os << "config,mean_ms,ci95_ms,memory_mb,speedup\n";
    os << std::setprecision(6);
    for (const auto& r : rows)
        os << r.config << ',' << r.mean_ms << ',' << r.ci95_ms << ',' << r.memory_mb << ',' << r.speedup << '\n';
    return os.str();
}

} // namespace prunebench
