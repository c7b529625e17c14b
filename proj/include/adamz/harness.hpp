#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "adamz/datasets.hpp"
#include "adamz/models.hpp"
#include "adamz/optim.hpp"

namespace adamz {

struct AdjustmentEvent {
    int step = 0;  // 1-based
    Adjustment tag = Adjustment::none;
};

// Per-simulation outcome. lr_series holds the post-adjustment rate per step
// (the value carried into the next step) and is only populated for AdamZ.
struct RunRecord {
    std::string optimizer;
    uint64_t seed = 0;
    double accuracy = std::numeric_limits<double>::quiet_NaN();  // percent
    double duration_seconds = 0.0;  // training loop only
    std::vector<double> loss_series;
    std::vector<double> lr_series;
    std::vector<AdjustmentEvent> adjustments;
    bool failed = false;
    std::string failure;
};

struct QuartileRow {
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
};

struct OptimizerSummary {
    std::string optimizer;
    QuartileRow accuracy;
    QuartileRow duration;
    int n_runs = 0;
    int n_failed = 0;
};

struct BenchmarkSummary {
    std::vector<OptimizerSummary> rows;
};

// Nearest-rank percentile: the value at 1-based index ceil(q * n) of the
// sorted sample.
double percentile_nearest_rank(std::vector<double> values, double q);
QuartileRow quartiles(const std::vector<double>& values);

// Strict per-spec summarize: throws ValidationError if any optimizer present
// in `order` has no successful record.
BenchmarkSummary summarize(const std::vector<RunRecord>& records,
                           const std::vector<std::string>& order);

// Tolerant variant used by run_benchmark: an all-failed optimizer yields NaN
// quartiles instead of an error.
BenchmarkSummary summarize_tolerant(const std::vector<RunRecord>& records,
                                    const std::vector<std::string>& order);

// One training run: per step - forward, loss, zero grads, backward, optimizer
// step (loss handed to the optimizer), record. Deterministic given seed; the
// batch order depends only on (data, seed, epoch), never on the optimizer.
// A non-finite loss marks the record failed and stops the run.
RunRecord train(Model& model, Optimizer& opt, const DatasetSplit& train_data, LossKind loss,
                int epochs, int batch_size, uint64_t seed);

struct OptimizerSpec {
    std::string kind;
    std::map<std::string, double> overrides;
};

struct ExperimentSetup {
    std::string name;  // circles | mnist
    const DatasetSplit* train_data = nullptr;
    const DatasetSplit* test_data = nullptr;
    std::function<std::unique_ptr<Model>(uint64_t)> build_model;
    LossKind loss = LossKind::bce;
    int epochs = 10;
    int batch_size = 100;
};

struct BenchmarkResult {
    std::vector<RunRecord> records;  // grouped by optimizer, then seed
    BenchmarkSummary summary;
};

// Runs n_sims simulations per optimizer; simulation i uses seed0+i, and every
// optimizer sees the same seed set (identical initial parameters and batch
// orders). Simulations fan out over `workers` threads; failures are recorded,
// not propagated.
BenchmarkResult run_benchmark(const ExperimentSetup& setup,
                              const std::vector<OptimizerSpec>& optimizers, int n_sims,
                              uint64_t seed0, int workers);

// Replays a record's loss series through a fresh controller and checks that
// the recorded adjustment events and lr series match the trigger rules.
bool validate_adjustments(const RunRecord& record, const AdamzConfig& cfg,
                          std::string* why = nullptr);

}  // namespace adamz
