// prunebench command-line driver.

#include "prunebench/bench.hpp"
#include "prunebench/inference.hpp"
#include "prunebench/pruning.hpp"
#include "prunebench/reparam.hpp"
#include "prunebench/serialize.hpp"
#include "prunebench/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace prunebench;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct Globals {
    std::vector<std::string> argv;
    std::uint64_t seed = 42;
};

Globals g;

std::uint64_t default_seed()
{
    const char* env = std::getenv("PRUNEBENCH_SEED");
    if (!env || !*env)
        return 42;
    std::size_t used = 0;
    try {
        const auto v = std::stoull(env, &used);
        if (used == std::strlen(env))
            return v;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument(std::string("PRUNEBENCH_SEED is not an unsigned integer: '") + env + "'");
}

void write_text(const fs::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + p.string());
    out << text;
}

/// Records how an output directory was produced.
void write_run_manifest(const fs::path& dir, const std::string& command, const json& seeds,
                        const std::vector<std::string>& artifacts)
{
    json m = {{"command", command}, {"args", g.argv},           {"seeds", seeds},
              {"artifacts", artifacts}, {"tool_version", kToolVersion}};
    write_text(dir / "run_manifest.json", m.dump(2) + "\n");
}

fs::path prepare_dir(const std::string& dir)
{
    fs::path p(dir);
    fs::create_directories(p);
    return p;
}

std::string history_csv(const std::vector<std::pair<std::string, std::vector<double>>>& arms)
{
    std::ostringstream os;
    os << "epoch,arm,loss\n" << std::setprecision(9);
    for (const auto& [arm, hist] : arms)
        for (std::size_t e = 0; e < hist.size(); ++e)
            os << e + 1 << ',' << arm << ',' << hist[e] << '\n';
    return os.str();
}

std::vector<double> parse_list(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size())
            throw std::invalid_argument("not a number: '" + item + "' in '" + text + "'");
        out.push_back(v);
    }
    if (out.empty())
        throw std::invalid_argument("empty list");
    return out;
}

std::string fmt_param(const NetworkParam& p)
{
    return std::to_string(p[0]) + "," + std::to_string(p[1]) + "," + std::to_string(p[2]) + "," + std::to_string(p[3]);
}

struct DataOpts {
    std::size_t sequences = 32;
    std::size_t frames = 32;
    double snr_db = 0.0;

    void add(CLI::App* app)
    {
        app->add_option("--sequences", sequences, "synthetic sequences")->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--frames", frames, "frames per sequence")->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--snr-db", snr_db, "mean mixing SNR in dB")->capture_default_str();
    }

    std::vector<Example<float>> make(std::size_t bins, std::uint64_t seed) const
    {
        SynthConfig c;
        c.seed = seed;
        c.num_sequences = sequences;
        c.frames_per_sequence = frames;
        c.freq_bins = bins;
        c.snr_db = snr_db;
        return make_synth_dataset(c);
    }
};

// Held-out data uses a seed offset so it never coincides with training data.
constexpr std::uint64_t kEvalSeedOffset = 1000;

struct TrainOpts {
    TrainConfig cfg;

    void add(CLI::App* app, std::size_t default_epochs)
    {
        cfg.epochs = default_epochs;
        app->add_option("--epochs", cfg.epochs)->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--lr", cfg.learning_rate)->capture_default_str()->check(CLI::NonNegativeNumber);
        app->add_option("--batch-size", cfg.batch_size)->capture_default_str()->check(CLI::PositiveNumber);
    }
};

struct BenchOpts {
    BenchParams p;

    void add(CLI::App* app)
    {
        app->add_option("--frames-per-sample", p.frames_per_sample)->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--samples", p.samples)->capture_default_str()->check(CLI::Range(2, 1000000));
        app->add_option("--warmup", p.warmup)->capture_default_str();
    }
};

std::string reports_csv(const std::vector<BenchmarkReport>& reps)
{
    std::ostringstream os;
    os << "config,mean_ms,ci95_ms,samples,frames_per_sample,memory_mb\n" << std::setprecision(6);
    for (const auto& r : reps)
        os << r.config_name << ',' << r.mean_ms_per_frame << ',' << r.ci95_half_width_ms << ',' << r.samples << ','
           << r.frames_per_sample << ',' << r.memory_mb << '\n';
    return os.str();
}

void emit_reports(const std::vector<BenchmarkReport>& reps, const std::string& out, const std::string& command,
                  const BenchParams& p)
{
    std::cout << reports_csv(reps);
    if (out.empty())
        return;
    const auto dir = prepare_dir(out);
    write_text(dir / "benchmark.json", json(reps).dump(2) + "\n");
    write_text(dir / "benchmark.csv", reports_csv(reps));
    write_run_manifest(dir, command, {{"input", p.seed}}, {"benchmark.json", "benchmark.csv"});
}

/// Model from a directory, or a freshly initialized one from a config name.
ModelWeights<float> model_or_config(const std::string& model_dir, const std::string& config, std::size_t bins)
{
    if (!model_dir.empty())
        return load_model(model_dir);
    return build_model(ModelSpec{parse_network_param(config), bins}, g.seed);
}

std::string label_for(const std::string& model_dir, const ModelWeights<float>& w)
{
    if (model_dir.empty())
        return w.spec.params.to_string();
    for (const auto& c : standard_configs())
        if (c.params == w.spec.params)
            return c.name;
    return fs::path(model_dir).filename().string();
}

// ---------------------------------------------------------------------------

void cmd_derive(CLI::App& app)
{
    auto* sub = app.add_subcommand("derive-config", "derive a monotone network config from a pruning fraction");
    auto base = std::make_shared<std::string>("32,64,128,256");
    auto fraction = std::make_shared<double>(0.0);
    auto all = std::make_shared<bool>(false);
    sub->add_option("--base", *base, "base config name or c1,c2,c3,c4")->capture_default_str();
    auto* frac = sub->add_option("--fraction", *fraction, "pruning fraction in [0, 1)");
    sub->add_flag("--all", *all, "print the standard configuration table");
    sub->callback([=] {
        if (*all) {
            std::cout << "name,c1,c2,c3,c4,parameters,memory_mb\n";
            for (const auto& c : standard_configs()) {
                const ModelSpec spec{c.params, 16};
                std::cout << c.name << ',' << fmt_param(c.params) << ',' << parameter_count(spec) << ','
                          << 4.0 * static_cast<double>(parameter_count(spec)) / 1048576.0 << '\n';
            }
            return;
        }
        if (frac->count() == 0)
            throw CLI::RequiredError("--fraction");
        std::cout << fmt_param(derive_config(parse_network_param(*base), *fraction)) << '\n';
    });
}

void cmd_init(CLI::App& app)
{
    auto* sub = app.add_subcommand("init", "build a seeded model");
    auto config = std::make_shared<std::string>("CRUSE32");
    auto bins = std::make_shared<std::size_t>(16);
    auto out = std::make_shared<std::string>();
    sub->add_option("--config", *config, "config name or c1,c2,c3,c4")->capture_default_str();
    sub->add_option("--freq-bins", *bins)->capture_default_str();
    sub->add_option("--out", *out, "output model directory")->required();
    sub->callback([=] {
        const auto w = build_model(ModelSpec{parse_network_param(*config), *bins}, g.seed);
        const auto dir = prepare_dir(*out);
        save_model(w, dir);
        write_run_manifest(dir, "init", {{"init", g.seed}}, {kManifestFile, kWeightsFile});
        std::cout << "initialized [" << w.spec.params.to_string() << "] F=" << w.spec.freq_bins << " with "
                  << w.parameter_count() << " parameters -> " << dir.string() << '\n';
    });
}

void add_train_like(CLI::App& app, const std::string& name, const std::string& help, std::size_t epochs)
{
    auto* sub = app.add_subcommand(name, help);
    auto model = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto data = std::make_shared<DataOpts>();
    auto opts = std::make_shared<TrainOpts>();
    sub->add_option("--model", *model, "input model directory")->required();
    sub->add_option("--out", *out, "output model directory")->required();
    data->add(sub);
    opts->add(sub, epochs);
    sub->callback([=] {
        const auto w = load_model(*model);
        const auto set = data->make(w.spec.freq_bins, g.seed);
        TrainConfig cfg = opts->cfg;
        cfg.seed = g.seed;
        const auto r = train(w, set, cfg);
        const auto dir = prepare_dir(*out);
        save_model(r.weights, dir);
        write_text(dir / "history.csv", history_csv({{name, r.history}}));
        write_run_manifest(dir, name, {{"data", g.seed}, {"shuffle", cfg.seed}},
                           {kManifestFile, kWeightsFile, "history.csv"});
        std::cout << name << ": " << r.history.size() << " epochs, loss " << r.history.front() << " -> "
                  << r.history.back() << '\n';
    });
}

void cmd_prune(CLI::App& app)
{
    auto* sub = app.add_subcommand("prune", "structured or unstructured magnitude pruning");
    auto model = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto target = std::make_shared<std::string>();
    auto frac = std::make_shared<double>(0.0);
    sub->add_option("--model", *model)->required();
    sub->add_option("--out", *out)->required();
    auto* t = sub->add_option("--target", *target, "config name or c1,c2,c3,c4");
    auto* u = sub->add_option("--unstructured", *frac, "zero this fraction of each GRU weight matrix");
    t->excludes(u);
    sub->callback([=] {
        if (t->count() == 0 && u->count() == 0)
            throw CLI::ValidationError("prune", "one of --target or --unstructured is required");
        const auto w = load_model(*model);
        const auto p = t->count() ? prune_structured(w, parse_network_param(*target)) : prune_unstructured(w, *frac);
        const auto dir = prepare_dir(*out);
        save_model(p, dir);
        write_run_manifest(dir, "prune", json::object(), {kManifestFile, kWeightsFile});
        std::cout << "pruned [" << w.spec.params.to_string() << "] -> [" << p.spec.params.to_string() << "], "
                  << p.parameter_count() << " parameters\n";
    });
}

void cmd_eval(CLI::App& app)
{
    auto* sub = app.add_subcommand("eval", "proxy loss on a held-out synthetic set");
    auto model = std::make_shared<std::string>();
    auto data = std::make_shared<DataOpts>();
    sub->add_option("--model", *model)->required();
    data->add(sub);
    sub->callback([=] {
        const auto w = load_model(*model);
        const double l = evaluate(w, data->make(w.spec.freq_bins, g.seed + kEvalSeedOffset));
        std::cout << json({{"model", *model}, {"loss", l}, {"data_seed", g.seed + kEvalSeedOffset}}).dump() << '\n';
    });
}

void cmd_benchmark(CLI::App& app)
{
    auto* sub = app.add_subcommand("benchmark", "per-frame latency with 95% confidence intervals");
    auto models = std::make_shared<std::vector<std::string>>();
    auto configs = std::make_shared<std::vector<std::string>>();
    auto bins = std::make_shared<std::size_t>(16);
    auto out = std::make_shared<std::string>();
    auto bench = std::make_shared<BenchOpts>();
    sub->add_option("--model", *models, "model directories (interleaved when several)");
    sub->add_option("--config", *configs, "config names or vectors, freshly initialized");
    sub->add_option("--freq-bins", *bins, "bins for --config models")->capture_default_str();
    sub->add_option("--out", *out, "output directory for benchmark.json / benchmark.csv");
    bench->add(sub);
    sub->callback([=] {
        if (models->empty() && configs->empty())
            throw CLI::ValidationError("benchmark", "give at least one --model or --config");
        std::vector<ModelWeights<float>> ws;
        std::vector<std::string> names;
        for (const auto& m : *models) {
            ws.push_back(load_model(m));
            names.push_back(label_for(m, ws.back()));
        }
        for (const auto& c : *configs) {
            ws.push_back(build_model(ModelSpec{parse_network_param(c), *bins}, g.seed));
            names.push_back(c);
        }
        std::vector<const ModelWeights<float>*> ptrs;
        for (const auto& w : ws)
            ptrs.push_back(&w);
        BenchParams p = bench->p;
        p.seed = g.seed;
        emit_reports(benchmark_interleaved(ptrs, names, p), *out, "benchmark", p);
    });
}

void cmd_profile(CLI::App& app)
{
    auto* sub = app.add_subcommand("profile", "fraction of forward time per operator category");
    auto model = std::make_shared<std::string>();
    auto config = std::make_shared<std::string>("CRUSE32");
    auto bins = std::make_shared<std::size_t>(64);
    auto frames = std::make_shared<std::size_t>(200);
    auto out = std::make_shared<std::string>();
    sub->add_option("--model", *model);
    sub->add_option("--config", *config)->capture_default_str();
    sub->add_option("--freq-bins", *bins)->capture_default_str();
    sub->add_option("--frames", *frames)->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--out", *out);
    sub->callback([=] {
        const auto w = model_or_config(*model, *config, *bins);
        const auto x = bench_input(w.spec.freq_bins, *frames, g.seed);
        forward_profiled(w, x);
        const auto r = forward_profiled(w, x);
        const json j = {{"config", w.spec.params.to_string()},
                        {"freq_bins", w.spec.freq_bins},
                        {"frames", *frames},
                        {"recurrent", r.recurrent_fraction()},
                        {"conv_deconv", r.conv_deconv_fraction()},
                        {"other", r.other_fraction()},
                        {"total_ms_per_frame", 1e3 * r.total_s() / static_cast<double>(*frames)}};
        std::cout << "category,fraction\n"
                  << "recurrent," << r.recurrent_fraction() << "\nconv_deconv," << r.conv_deconv_fraction()
                  << "\nother," << r.other_fraction() << '\n';
        if (!out->empty()) {
            const auto dir = prepare_dir(*out);
            write_text(dir / "profile.json", j.dump(2) + "\n");
            write_run_manifest(dir, "profile", {{"input", g.seed}}, {"profile.json"});
        }
    });
}

void cmd_compare(CLI::App& app)
{
    auto* sub = app.add_subcommand("compare", "dense engine timing of GRU-sparsified models");
    auto model = std::make_shared<std::string>();
    auto config = std::make_shared<std::string>("CRUSE32");
    auto bins = std::make_shared<std::size_t>(16);
    auto fracs = std::make_shared<std::string>("0,0.25,0.5,0.75");
    auto sparse = std::make_shared<bool>(false);
    auto out = std::make_shared<std::string>();
    auto bench = std::make_shared<BenchOpts>();
    sub->add_flag("--sparse", *sparse, "compare unstructured GRU sparsity levels")->required();
    sub->add_option("--model", *model);
    sub->add_option("--config", *config)->capture_default_str();
    sub->add_option("--freq-bins", *bins)->capture_default_str();
    sub->add_option("--fracs", *fracs)->capture_default_str();
    sub->add_option("--out", *out);
    bench->add(sub);
    sub->callback([=] {
        const auto w = model_or_config(*model, *config, *bins);
        BenchParams p = bench->p;
        p.seed = g.seed;
        emit_reports(compare_sparse_dense(w, parse_list(*fracs), p), *out, "compare", p);
    });
}

void cmd_ablate(CLI::App& app)
{
    auto* sub = app.add_subcommand("ablate", "fine-tuning experiments");
    sub->require_subcommand(1);

    auto add_common = [](CLI::App* s, std::shared_ptr<std::string> model, std::shared_ptr<std::string> target,
                         std::shared_ptr<std::string> out, std::shared_ptr<DataOpts> data,
                         std::shared_ptr<TrainOpts> opts) {
        s->add_option("--model", *model, "trained base model directory")->required();
        s->add_option("--target", *target)->capture_default_str();
        s->add_option("--out", *out);
        data->add(s);
        opts->add(s, 5);
    };

    {
        auto* s = sub->add_subcommand("prune-vs-direct", "fine-tuned pruned model vs training the target from scratch");
        auto model = std::make_shared<std::string>(), target = std::make_shared<std::string>("P.500"),
             out = std::make_shared<std::string>();
        auto data = std::make_shared<DataOpts>();
        auto opts = std::make_shared<TrainOpts>();
        auto direct_epochs = std::make_shared<std::size_t>(0);
        add_common(s, model, target, out, data, opts);
        s->add_option("--direct-epochs", *direct_epochs, "epochs for the direct arm (required: base + fine-tune)")
            ->required()
            ->check(CLI::PositiveNumber);
        s->callback([=] {
            const auto base = load_model(*model);
            const auto tr = data->make(base.spec.freq_bins, g.seed);
            const auto ev = data->make(base.spec.freq_bins, g.seed + kEvalSeedOffset);
            TrainConfig cfg = opts->cfg;
            cfg.seed = g.seed;
            const auto r = experiment_prune_vs_direct(base, parse_network_param(*target), tr, ev, cfg,
                                                      *direct_epochs, g.seed + 1);
            const auto csv = history_csv({{"finetune", r.finetune_history}, {"direct", r.direct_history}});
            const json summary = {{"target", fmt_param(r.target)},
                                  {"pruned_loss", r.pruned_loss},
                                  {"finetuned_loss", r.finetuned_loss},
                                  {"direct_loss", r.direct_loss}};
            std::cout << csv << summary.dump() << '\n';
            if (!out->empty()) {
                const auto dir = prepare_dir(*out);
                write_text(dir / "history.csv", csv);
                write_text(dir / "summary.json", summary.dump(2) + "\n");
                write_run_manifest(dir, "ablate prune-vs-direct",
                                   {{"data", g.seed}, {"shuffle", cfg.seed}, {"direct_init", g.seed + 1}},
                                   {"history.csv", "summary.json"});
            }
        });
    }
    {
        auto* s = sub->add_subcommand("lr-sweep", "fine-tune the pruned model once per learning rate");
        auto model = std::make_shared<std::string>(), target = std::make_shared<std::string>("P.500"),
             out = std::make_shared<std::string>(), lrs = std::make_shared<std::string>("1e-3,1e-6");
        auto data = std::make_shared<DataOpts>();
        auto opts = std::make_shared<TrainOpts>();
        add_common(s, model, target, out, data, opts);
        s->add_option("--lrs", *lrs)->capture_default_str();
        s->callback([=] {
            const auto base = load_model(*model);
            const auto tr = data->make(base.spec.freq_bins, g.seed);
            const auto ev = data->make(base.spec.freq_bins, g.seed + kEvalSeedOffset);
            TrainConfig cfg = opts->cfg;
            cfg.seed = g.seed;
            const auto rows = experiment_lr_sweep(base, parse_network_param(*target), tr, ev, cfg, parse_list(*lrs));
            std::vector<std::pair<std::string, std::vector<double>>> arms;
            std::ostringstream finals;
            finals << "learning_rate,final_loss\n" << std::setprecision(9);
            for (const auto& r : rows) {
                std::ostringstream name;
                name << "lr=" << r.learning_rate;
                arms.emplace_back(name.str(), r.history);
                finals << r.learning_rate << ',' << r.final_loss << '\n';
            }
            const auto csv = history_csv(arms);
            std::cout << finals.str();
            if (!out->empty()) {
                const auto dir = prepare_dir(*out);
                write_text(dir / "history.csv", csv);
                write_text(dir / "final.csv", finals.str());
                write_run_manifest(dir, "ablate lr-sweep", {{"data", g.seed}, {"shuffle", cfg.seed}},
                                   {"history.csv", "final.csv"});
            }
        });
    }
}

void cmd_report(CLI::App& app)
{
    auto* sub = app.add_subcommand("report", "summaries of saved benchmark reports");
    sub->require_subcommand(1);
    auto* s = sub->add_subcommand("speedup", "speedup and memory table against a baseline row");
    auto inputs = std::make_shared<std::vector<std::string>>();
    auto baseline = std::make_shared<std::string>("CRUSE32");
    auto out = std::make_shared<std::string>();
    s->add_option("--reports", *inputs, "benchmark.json files or directories")->required();
    s->add_option("--baseline", *baseline)->capture_default_str();
    s->add_option("--out", *out);
    s->callback([=] {
        std::vector<BenchmarkReport> reps;
        for (const auto& in : *inputs) {
            fs::path p(in);
            if (fs::is_directory(p))
                p /= "benchmark.json";
            std::ifstream f(p);
            if (!f)
                throw std::invalid_argument("cannot read benchmark report " + p.string());
            json j;
            try {
                j = json::parse(f);
            } catch (const json::exception& e) {
                throw std::invalid_argument(p.string() + ": " + e.what());
            }
            if (j.is_array())
                for (const auto& r : j)
                    reps.push_back(r.get<BenchmarkReport>());
            else
                reps.push_back(j.get<BenchmarkReport>());
        }
        const auto csv = speedup_csv(speedup_table(reps, *baseline));
        std::cout << csv;
        if (!out->empty()) {
            const auto dir = prepare_dir(*out);
            write_text(dir / "speedup.csv", csv);
            write_run_manifest(dir, "report speedup", json::object(), {"speedup.csv"});
        }
    });
}

} // namespace

int main(int argc, char** argv)
{
    g.argv.assign(argv, argv + argc);
    CLI::App app{"structured pruning, streaming inference and latency benchmarks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    app.fallthrough();
    app.add_option("--seed", g.seed, "seed (default: PRUNEBENCH_SEED or 42)");

    cmd_derive(app);
    cmd_init(app);
    add_train_like(app, "train", "train on a generated synthetic dataset", 20);
    cmd_prune(app);
    add_train_like(app, "finetune", "continue training a pruned model", 5);
    cmd_eval(app);
    cmd_benchmark(app);
    cmd_profile(app);
    cmd_compare(app);
    cmd_ablate(app);
    cmd_report(app);

    try {
        g.seed = default_seed();
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
