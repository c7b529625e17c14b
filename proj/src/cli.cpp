#include "adamz/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "adamz/export.hpp"
#include "adamz/harness.hpp"
#include "adamz/selftest.hpp"

namespace adamz {

namespace {

using nlohmann::json;

json config_to_json(const RunConfig& cfg) {
    json j;
    j["experiment"] = cfg.experiment;
    j["optimizers"] = cfg.optimizers;
    j["sims"] = cfg.sims;
    j["seed"] = cfg.seed;
    j["epochs"] = cfg.resolved_epochs();
    j["batch"] = cfg.resolved_batch();
    j["workers"] = cfg.workers;
    j["out"] = cfg.out_dir;
    j["dataset"] = {{"n_samples", cfg.n_samples},
                    {"noise", cfg.noise},
                    {"factor", cfg.factor},
                    {"test_fraction", cfg.test_fraction}};
    j["mnist"] = {{"images", cfg.mnist_images},
                  {"labels", cfg.mnist_labels},
                  {"test_images", cfg.mnist_test_images},
                  {"test_labels", cfg.mnist_test_labels},
                  {"subset", cfg.subset}};
    j["overrides"] = json::object();
    for (const auto& [opt, kv] : cfg.overrides) {
        j["overrides"][opt] = json::object();
        for (const auto& [k, v] : kv) j["overrides"][opt][k] = v;
    }
    return j;
}

void config_from_json(const json& j, RunConfig& cfg) {
    if (j.contains("experiment")) cfg.experiment = j["experiment"].get<std::string>();
    if (j.contains("optimizers")) cfg.optimizers = j["optimizers"].get<std::vector<std::string>>();
    if (j.contains("sims")) cfg.sims = j["sims"].get<int>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
    if (j.contains("epochs")) cfg.epochs = j["epochs"].get<int>();
    if (j.contains("batch")) cfg.batch = j["batch"].get<int>();
    if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
    if (j.contains("out")) cfg.out_dir = j["out"].get<std::string>();
    if (j.contains("dataset")) {
        const auto& d = j["dataset"];
        if (d.contains("n_samples")) cfg.n_samples = d["n_samples"].get<int>();
        if (d.contains("noise")) cfg.noise = d["noise"].get<double>();
        if (d.contains("factor")) cfg.factor = d["factor"].get<double>();
        if (d.contains("test_fraction")) cfg.test_fraction = d["test_fraction"].get<double>();
    }
    if (j.contains("mnist")) {
        const auto& m = j["mnist"];
        if (m.contains("images")) cfg.mnist_images = m["images"].get<std::string>();
        if (m.contains("labels")) cfg.mnist_labels = m["labels"].get<std::string>();
        if (m.contains("test_images")) cfg.mnist_test_images = m["test_images"].get<std::string>();
        if (m.contains("test_labels")) cfg.mnist_test_labels = m["test_labels"].get<std::string>();
        if (m.contains("subset")) cfg.subset = m["subset"].get<int>();
    }
    if (j.contains("overrides")) {
        for (const auto& [opt, kv] : j["overrides"].items()) {
            for (const auto& [k, v] : kv.items()) cfg.overrides[opt][k] = v.get<double>();
        }
    }
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : csv) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// "key=value" applies to every selected optimizer accepting the key;
// "opt.key=value" targets one optimizer strictly.
void apply_set_overrides(RunConfig& cfg, const std::vector<std::string>& sets) {
    for (const std::string& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == s.size()) {
            throw ValidationError("--set expects key=value or optimizer.key=value, got '" + s + "'");
        }
        std::string key = s.substr(0, eq);
        const std::string value_str = s.substr(eq + 1);
        char* end = nullptr;
        const double value = std::strtod(value_str.c_str(), &end);
        if (end == value_str.c_str() || *end != '\0') {
            throw ValidationError("--set value for '" + key + "' is not a number: '" + value_str + "'");
        }
        const auto dot = key.find('.');
        if (dot != std::string::npos) {
            const std::string opt = key.substr(0, dot);
            key = key.substr(dot + 1);
            if (std::find(cfg.optimizers.begin(), cfg.optimizers.end(), opt) == cfg.optimizers.end()) {
                throw ValidationError("--set targets optimizer '" + opt + "' which is not selected");
            }
            cfg.overrides[opt][key] = value;
        } else {
            bool applied = false;
            for (const std::string& opt : cfg.optimizers) {
                if (optimizer_accepts_key(opt, key)) {
                    cfg.overrides[opt][key] = value;
                    applied = true;
                }
            }
            if (!applied) {
                throw ValidationError("--set key '" + key + "' is not accepted by any selected optimizer");
            }
        }
    }
}

void write_config(const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream out(std::filesystem::path(cfg.out_dir) / "config.json", std::ios::binary);
    if (!out) throw IoError("cannot write config.json in '" + cfg.out_dir + "'");
    out << config_to_json(cfg).dump(2) << "\n";
}

struct LoadedExperiment {
    DatasetSplit train;
    DatasetSplit test;
    ExperimentSetup setup;
};

LoadedExperiment load_experiment(const RunConfig& cfg) {
    LoadedExperiment ex;
    ex.setup.name = cfg.experiment;
    ex.setup.epochs = cfg.resolved_epochs();
    ex.setup.batch_size = cfg.resolved_batch();
    if (cfg.experiment == "circles") {
        CirclesConfig ccfg;
        ccfg.n_samples = cfg.n_samples;
        ccfg.noise = cfg.noise;
        ccfg.factor = cfg.factor;
        ccfg.seed = cfg.seed;
        const DatasetSplit all = make_circles(ccfg);
        auto [train, test] = train_test_split(all, cfg.test_fraction, cfg.seed);
        ex.train = std::move(train);
        ex.test = std::move(test);
        ex.setup.build_model = build_circles_mlp;
        ex.setup.loss = LossKind::bce;
    } else {
        ex.train = load_mnist_idx(cfg.mnist_images, cfg.mnist_labels);
        ex.test = load_mnist_idx(cfg.mnist_test_images, cfg.mnist_test_labels);
        if (cfg.subset > 0) ex.train = take_subset(ex.train, cfg.subset, cfg.seed);
        ex.setup.build_model = build_mnist_attention;
        ex.setup.loss = LossKind::nll;
    }
    ex.setup.train_data = &ex.train;
    ex.setup.test_data = &ex.test;
    return ex;
}

std::vector<OptimizerSpec> optimizer_specs(const RunConfig& cfg) {
    std::vector<OptimizerSpec> specs;
    for (const std::string& kind : cfg.optimizers) {
        OptimizerSpec spec;
        spec.kind = kind;
        auto it = cfg.overrides.find(kind);
        if (it != cfg.overrides.end()) spec.overrides = it->second;
        specs.push_back(std::move(spec));
    }
    return specs;
}

void print_summary(const RunConfig& cfg, const BenchmarkResult& result) {
    std::printf("experiment=%s sims=%d epochs=%d batch=%d seed=%llu\n", cfg.experiment.c_str(),
                cfg.sims, cfg.resolved_epochs(), cfg.resolved_batch(),
                static_cast<unsigned long long>(cfg.seed));
    std::printf("%-10s %28s %28s %8s\n", "optimizer", "accuracy q1/median/q3",
                "duration q1/median/q3", "failed");
    for (const auto& row : result.summary.rows) {
        std::printf("%-10s %8.2f /%8.2f /%8.2f %8.2f /%8.2f /%8.2f %4d/%d\n",
                    row.optimizer.c_str(), row.accuracy.q1, row.accuracy.median, row.accuracy.q3,
                    row.duration.q1, row.duration.median, row.duration.q3, row.n_failed,
                    row.n_runs);
    }
    std::printf("results written to %s\n", cfg.out_dir.c_str());
}

int cmd_benchmark(RunConfig& cfg) {
    if (cfg.experiment == "mnist") {
        if (cfg.mnist_images.empty()) throw ValidationError("--mnist-images is required");
        if (cfg.mnist_labels.empty()) throw ValidationError("--mnist-labels is required");
        if (cfg.mnist_test_images.empty()) throw ValidationError("--mnist-test-images is required");
        if (cfg.mnist_test_labels.empty()) throw ValidationError("--mnist-test-labels is required");
    }
    const LoadedExperiment ex = load_experiment(cfg);
    const auto specs = optimizer_specs(cfg);
    write_config(cfg);
    const BenchmarkResult result =
        run_benchmark(ex.setup, specs, cfg.sims, cfg.seed, cfg.workers);
    export_results(result.records, result.summary, cfg.out_dir);
    print_summary(cfg, result);
    return 0;
}

int cmd_trace(RunConfig& cfg) {
    if (cfg.experiment == "mnist") {
        if (cfg.mnist_images.empty()) throw ValidationError("--mnist-images is required");
        if (cfg.mnist_labels.empty()) throw ValidationError("--mnist-labels is required");
        if (cfg.mnist_test_images.empty()) throw ValidationError("--mnist-test-images is required");
        if (cfg.mnist_test_labels.empty()) throw ValidationError("--mnist-test-labels is required");
    }
    cfg.optimizers = {"adamz"};
    const LoadedExperiment ex = load_experiment(cfg);
    write_config(cfg);

    auto model = ex.setup.build_model(cfg.seed);
    std::map<std::string, double> ov;
    auto it = cfg.overrides.find("adamz");
    if (it != cfg.overrides.end()) ov = it->second;
    auto opt = make_optimizer("adamz", model->parameters(), ov);
    RunRecord rec = train(*model, *opt, ex.train, ex.setup.loss, ex.setup.epochs,
                          ex.setup.batch_size, cfg.seed);
    if (rec.failed) {
        std::fprintf(stderr, "trace run diverged: %s\n", rec.failure.c_str());
        return 1;
    }
    rec.accuracy = accuracy(*model, ex.test);

    const std::filesystem::path dir(cfg.out_dir);
    write_lr_trace_csv(rec, (dir / "lr_trace.csv").string());
    write_trace_svg(rec, (dir / "lr_trace.svg").string());

    int n_over = 0, n_stag = 0;
    for (const auto& ev : rec.adjustments) {
        (ev.tag == Adjustment::overshoot ? n_over : n_stag) += 1;
    }
    std::printf("adamz trace: %zu steps, %d overshoot / %d stagnation adjustments, "
                "final lr %.6g, test accuracy %.2f%%\n",
                rec.loss_series.size(), n_over, n_stag,
                rec.lr_series.empty() ? 0.0 : rec.lr_series.back(), rec.accuracy);
    std::printf("results written to %s\n", cfg.out_dir.c_str());
    return 0;
}

int cmd_selftest(bool inject_idx_fault) {
    const auto results = selftest::run_all(inject_idx_fault);
    bool all = true;
    for (const auto& r : results) {
        std::printf("[%s] %-18s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                    r.detail.c_str());
        all = all && r.passed;
    }
    return all ? 0 : 1;
}

void add_shared_flags(CLI::App* cmd, RunConfig& cfg, std::string& optimizers_csv,
                      std::vector<std::string>& sets, std::string& config_path) {
    cmd->add_option("--optimizers", optimizers_csv, "comma-separated optimizer list");
    cmd->add_option("--sims", cfg.sims, "simulations per optimizer")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", cfg.seed, "base seed; simulation i uses seed+i");
    cmd->add_option("--epochs", cfg.epochs, "training epochs")->check(CLI::PositiveNumber);
    cmd->add_option("--batch", cfg.batch, "batch size")->check(CLI::PositiveNumber);
    cmd->add_option("--out", cfg.out_dir, "output directory");
    cmd->add_option("--workers", cfg.workers, "worker threads (0 = all cores)");
    cmd->add_option("--set", sets, "hyperparameter override: key=value or optimizer.key=value");
    cmd->add_option("--config", config_path, "JSON config file (flags take precedence)");
}

void add_mnist_flags(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--mnist-images", cfg.mnist_images, "IDX training images");
    cmd->add_option("--mnist-labels", cfg.mnist_labels, "IDX training labels");
    cmd->add_option("--mnist-test-images", cfg.mnist_test_images, "IDX test images");
    cmd->add_option("--mnist-test-labels", cfg.mnist_test_labels, "IDX test labels");
    cmd->add_option("--subset", cfg.subset, "train on the first N shuffled examples")
        ->check(CLI::PositiveNumber);
}

}  // namespace

std::string RunConfig::to_json() const { return config_to_json(*this).dump(2); }

RunConfig RunConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file '" + path + "'");
    json j;
    in >> j;
    RunConfig cfg;
    config_from_json(j, cfg);
    return cfg;
}

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"AdamZ optimizer benchmark suite"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string optimizers_csv;
    std::vector<std::string> sets;
    std::string config_path;
    bool inject_idx_fault = false;

    CLI::App* circles = app.add_subcommand("circles", "two-circles classification benchmark");
    add_shared_flags(circles, cfg, optimizers_csv, sets, config_path);
    circles->add_option("--n-samples", cfg.n_samples, "dataset size")->check(CLI::PositiveNumber);
    circles->add_option("--noise", cfg.noise, "gaussian noise std");
    circles->add_option("--factor", cfg.factor, "inner/outer radius ratio");
    circles->add_option("--test-fraction", cfg.test_fraction, "held-out fraction");

    CLI::App* mnist = app.add_subcommand("mnist", "MNIST attention-classifier benchmark");
    add_shared_flags(mnist, cfg, optimizers_csv, sets, config_path);
    add_mnist_flags(mnist, cfg);

    CLI::App* trace = app.add_subcommand("trace", "single AdamZ run emitting the lr trace");
    add_shared_flags(trace, cfg, optimizers_csv, sets, config_path);
    trace->add_option("--experiment", cfg.experiment, "circles or mnist")
        ->check(CLI::IsMember({"circles", "mnist"}));
    trace->add_option("--n-samples", cfg.n_samples, "dataset size")->check(CLI::PositiveNumber);
    trace->add_option("--noise", cfg.noise, "gaussian noise std");
    trace->add_option("--factor", cfg.factor, "inner/outer radius ratio");
    trace->add_option("--test-fraction", cfg.test_fraction, "held-out fraction");
    add_mnist_flags(trace, cfg);

    CLI::App* selftest_cmd = app.add_subcommand("selftest", "run the embedded oracle suites");
    selftest_cmd->add_flag("--inject-idx-fault", inject_idx_fault,
                           "corrupt the IDX fixture (exercises the failure path)");

    // Pre-scan for --config so file values sit under the flag parse.
    for (size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config_path = args[i + 1];
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
            break;
        }
    }
    try {
        if (!config_path.empty()) cfg = RunConfig::from_json_file(config_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }

    // CLI11 wants argv in reverse order without the program name.
    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp") {
            std::cout << app.help();
            return 0;
        }
        std::fprintf(stderr, "error: %s\n", e.what());
        std::fprintf(stderr, "%s", app.help().c_str());
        return 2;
    }

    try {
        if (app.got_subcommand(selftest_cmd)) return cmd_selftest(inject_idx_fault);

        const bool is_trace = app.got_subcommand(trace);
        if (app.got_subcommand(circles)) cfg.experiment = "circles";
        if (app.got_subcommand(mnist)) cfg.experiment = "mnist";

        if (!optimizers_csv.empty()) cfg.optimizers = split_list(optimizers_csv);
        if (cfg.optimizers.empty()) cfg.optimizers = optimizer_kinds();
        if (is_trace) cfg.optimizers = {"adamz"};
        for (const std::string& kind : cfg.optimizers) {
            if (std::find(optimizer_kinds().begin(), optimizer_kinds().end(), kind) ==
                optimizer_kinds().end()) {
                throw ValidationError("unknown optimizer kind '" + kind + "'");
            }
        }
        apply_set_overrides(cfg, sets);
        if (cfg.out_dir.empty()) {
            cfg.out_dir = is_trace ? "runs/trace" : (cfg.experiment == "mnist" ? "runs/mnist" : "runs/circles");
        }

        // Surface bad hyperparameters before any training starts.
        for (const auto& spec : optimizer_specs(cfg)) {
            Parameter probe({1}, {0.0});
            make_optimizer(spec.kind, {&probe}, spec.overrides);
        }
        CirclesConfig{cfg.n_samples, cfg.noise, cfg.factor, cfg.seed}.validate();

        return is_trace ? cmd_trace(cfg) : cmd_benchmark(cfg);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace adamz
