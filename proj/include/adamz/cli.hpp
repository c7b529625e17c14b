#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace adamz {

// Fully resolved run configuration. Precedence: CLI flags over --config file
// values over built-in defaults; the resolved config is persisted next to the
// results as config.json.
struct RunConfig {
    std::string experiment = "circles";  // circles | mnist
    std::vector<std::string> optimizers;
    int sims = 20;
    uint64_t seed = 1;
    int epochs = 0;  // 0 = experiment default (circles 10, mnist 5)
    int batch = 0;   // 0 = experiment default (circles 100, mnist 64)
    int workers = 0; // 0 = available cores
    std::string out_dir;

    // circles dataset
    int n_samples = 10000;
    double noise = 0.05;
    double factor = 0.8;
    double test_fraction = 0.2;

    // mnist dataset
    std::string mnist_images, mnist_labels, mnist_test_images, mnist_test_labels;
    int subset = 0;  // 0 = full training set

    // resolved per-optimizer hyperparameter overrides
    std::map<std::string, std::map<std::string, double>> overrides;

    int resolved_epochs() const { return epochs > 0 ? epochs : (experiment == "mnist" ? 5 : 10); }
    int resolved_batch() const { return batch > 0 ? batch : (experiment == "mnist" ? 64 : 100); }

    std::string to_json() const;
    static RunConfig from_json_file(const std::string& path);
};

// Entry point behind main(); returns the process exit code (0 success,
// 1 runtime failure, 2 usage/validation error).
int run_cli(const std::vector<std::string>& args);

}  // namespace adamz
