#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "adamz/export.hpp"
#include "adamz/harness.hpp"
#include "adamz/rng.hpp"

using namespace adamz;

namespace {

struct Fixture {
    DatasetSplit train_d, test_d;
    ExperimentSetup setup;

    explicit Fixture(int n = 600, int epochs = 2, int batch = 100) {
        const DatasetSplit all = make_circles({n, 0.05, 0.8, 3});
        auto [tr, te] = train_test_split(all, 0.2, 3);
        train_d = std::move(tr);
        test_d = std::move(te);
        setup.name = "circles";
        setup.train_data = &train_d;
        setup.test_data = &test_d;
        setup.build_model = build_circles_mlp;
        setup.loss = LossKind::bce;
        setup.epochs = epochs;
        setup.batch_size = batch;
    }
};

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const char* tag) {
        path = std::filesystem::temp_directory_path() / (std::string("adamz-harness-") + tag);
        std::filesystem::remove_all(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("nearest-rank percentiles match the definition check") {
    const std::vector<double> v = {1, 2, 3, 4, 5};
    const QuartileRow q = quartiles(v);
    CHECK(q.q1 == 2);
    CHECK(q.median == 3);
    CHECK(q.q3 == 4);

    CHECK(quartiles({42.0}).q1 == 42.0);
    CHECK(quartiles({42.0}).median == 42.0);
    CHECK(quartiles({42.0}).q3 == 42.0);

    // symmetric data: median equals mean
    const std::vector<double> sym = {1, 2, 3, 4, 5, 6, 7};
    CHECK(quartiles(sym).median == 4.0);
}

TEST_CASE("quartiles of 100 random values match a sort-and-index oracle") {
    Rng rng(50);
    std::vector<double> v(100);
    for (double& x : v) x = rng.uniform(0.0, 100.0);
    const QuartileRow q = quartiles(v);
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    CHECK(q.q1 == sorted[24]);    // ceil(0.25*100) = 25 -> index 24
    CHECK(q.median == sorted[49]);
    CHECK(q.q3 == sorted[74]);
}

TEST_CASE("train: loss series length and bit-determinism") {
    Fixture fx(200, 1, 100);
    auto model = build_circles_mlp(4);
    auto opt = make_optimizer("adam", model->parameters());
    const RunRecord rec = train(*model, *opt, fx.train_d, LossKind::bce, 1, 100, 4);
    CHECK(rec.loss_series.size() == 2);  // ceil(160/100)
    CHECK(rec.duration_seconds > 0.0);

    auto model2 = build_circles_mlp(4);
    auto opt2 = make_optimizer("adam", model2->parameters());
    const RunRecord rec2 = train(*model2, *opt2, fx.train_d, LossKind::bce, 1, 100, 4);
    CHECK(rec.loss_series == rec2.loss_series);
}

TEST_CASE("adamz lr series stays within bounds and replays exactly") {
    Fixture fx(2000, 2, 100);
    auto model = build_circles_mlp(5);
    std::map<std::string, double> ov = {{"patience", 8}, {"stagnation_period", 3}};
    auto opt = make_optimizer("adamz", model->parameters(), ov);
    const RunRecord rec = train(*model, *opt, fx.train_d, LossKind::bce, 2, 100, 5);
    REQUIRE(rec.lr_series.size() == rec.loss_series.size());
    for (double lr : rec.lr_series) {
        CHECK(lr >= 1e-7);
        CHECK(lr <= 1.0);
    }
    AdamzConfig cfg;
    cfg.patience = 8;
    cfg.stagnation_period = 3;
    std::string why;
    CHECK(validate_adjustments(rec, cfg, &why));
    INFO(why);

    // a tampered record must fail the replay validator
    RunRecord bad = rec;
    REQUIRE(!bad.adjustments.empty());
    bad.adjustments.pop_back();
    CHECK_FALSE(validate_adjustments(bad, cfg));
}

TEST_CASE("run_benchmark: fairness, reproducibility, summary shape") {
    Fixture fx(600, 2, 100);
    const std::vector<OptimizerSpec> specs = {{"adamz", {}}, {"adam", {}}};
    const BenchmarkResult r1 = run_benchmark(fx.setup, specs, 3, 100, 2);
    REQUIRE(r1.records.size() == 6);
    CHECK(r1.summary.rows.size() == 2);
    CHECK(r1.summary.rows[0].optimizer == "adamz");
    CHECK(r1.summary.rows[0].n_runs == 3);
    CHECK(r1.summary.rows[0].n_failed == 0);

    // same seeds for both optimizers
    CHECK(r1.records[0].seed == 100);
    CHECK(r1.records[1].seed == 101);
    CHECK(r1.records[3].seed == 100);

    // workers=1 vs workers=2 and a rerun: identical loss series
    const BenchmarkResult r2 = run_benchmark(fx.setup, specs, 3, 100, 1);
    for (size_t i = 0; i < r1.records.size(); ++i) {
        CHECK(r1.records[i].loss_series == r2.records[i].loss_series);
        CHECK(r1.records[i].accuracy == r2.records[i].accuracy);
    }

    // quartile monotonicity
    for (const auto& row : r1.summary.rows) {
        CHECK(row.accuracy.q1 <= row.accuracy.median);
        CHECK(row.accuracy.median <= row.accuracy.q3);
        CHECK(row.duration.q1 <= row.duration.median);
        CHECK(row.duration.median <= row.duration.q3);
    }

    // n_sims=1: all quartiles equal the single run
    const BenchmarkResult r3 = run_benchmark(fx.setup, {{"adam", {}}}, 1, 7, 1);
    CHECK(r3.summary.rows[0].accuracy.q1 == r3.summary.rows[0].accuracy.median);
    CHECK(r3.summary.rows[0].accuracy.median == r3.summary.rows[0].accuracy.q3);
    CHECK(r3.summary.rows[0].accuracy.median == r3.records[0].accuracy);
}

namespace {

// small multiclass head whose logits genuinely overflow under an absurd
// learning rate (the relu(x*W1)*W2 product reaches inf with mixed signs)
class TwoLayerSoftmax : public Model {
public:
    explicit TwoLayerSoftmax(uint64_t seed) {
        Rng rng(seed);
        auto init = [&](int r, int c) {
            std::vector<double> v(static_cast<size_t>(r) * c);
            for (double& x : v) x = rng.uniform(-0.5, 0.5);
            return Parameter({r, c}, std::move(v));
        };
        params_.push_back(init(8, 16));
        params_.push_back(Parameter::zeros({16}));
        params_.push_back(init(16, 4));
        params_.push_back(Parameter::zeros({4}));
    }
    Tensor forward(Graph& g, const Tensor& x) override {
        Tensor h = relu(add_bias(matmul(x, g.param(params_[0])), g.param(params_[1])));
        return log_softmax(add_bias(matmul(h, g.param(params_[2])), g.param(params_[3])));
    }
    std::vector<int> input_shape(int b) const override { return {b, 8}; }
    int output_width() const override { return 4; }
    std::string_view kind() const override { return "two-layer"; }
};

}  // namespace

TEST_CASE("diverged runs are tolerated, excluded from quartiles, and counted") {
    // nll-path divergence: an absurd rate makes the logits overflow to inf,
    // so log-softmax produces NaN at the second step
    Rng rng(71);
    DatasetSplit train_d, test_d;
    train_d.n = 64;
    train_d.dim = 8;
    train_d.features.resize(64 * 8);
    for (double& v : train_d.features) v = rng.uniform(-1.0, 1.0);
    train_d.labels.resize(64);
    for (size_t i = 0; i < 64; ++i) train_d.labels[i] = static_cast<double>(i % 4);
    test_d = train_d;

    ExperimentSetup setup;
    setup.name = "synthetic";
    setup.train_data = &train_d;
    setup.test_data = &test_d;
    setup.build_model = [](uint64_t seed) -> std::unique_ptr<Model> {
        return std::make_unique<TwoLayerSoftmax>(seed);
    };
    setup.loss = LossKind::nll;
    setup.epochs = 1;
    setup.batch_size = 16;

    const std::vector<OptimizerSpec> specs = {{"sgd", {{"lr", 1e200}}}, {"adam", {}}};
    const BenchmarkResult res = run_benchmark(setup, specs, 2, 3, 1);
    const auto& sgd_row = res.summary.rows[0];
    CHECK(sgd_row.n_failed == 2);
    CHECK(std::isnan(sgd_row.accuracy.median));
    const auto& adam_row = res.summary.rows[1];
    CHECK(adam_row.n_failed == 0);
    for (const auto& rec : res.records) {
        if (rec.optimizer == "sgd") {
            CHECK(rec.failed);
            CHECK(!rec.failure.empty());
        }
    }

    // strict summarize refuses the all-failed group
    CHECK_THROWS_AS(summarize(res.records, {"sgd", "adam"}), ValidationError);
    // tolerant path is what run_benchmark used; spot-check it directly
    CHECK(std::isnan(summarize_tolerant(res.records, {"sgd"}).rows[0].accuracy.q1));
}

TEST_CASE("bce training cannot produce a non-finite loss (log clamp)") {
    // even a catastrophic rate keeps the clamped bce objective finite; the
    // run completes instead of diverging
    Fixture fx(300, 1, 100);
    auto model = build_circles_mlp(1);
    auto opt = make_optimizer("sgd", model->parameters(), {{"lr", 1e300}});
    const RunRecord rec = train(*model, *opt, fx.train_d, LossKind::bce, 1, 100, 1);
    CHECK_FALSE(rec.failed);
    for (double l : rec.loss_series) CHECK(std::isfinite(l));
}

TEST_CASE("export_results: file shapes, re-export byte-identity, loss round-trip") {
    Fixture fx(600, 2, 100);
    const std::vector<OptimizerSpec> specs = {{"adamz", {}}, {"adam", {}}};
    const BenchmarkResult res = run_benchmark(fx.setup, specs, 2, 5, 1);
    TempDir dir("export");
    export_results(res.records, res.summary, dir.path.string());

    const auto runs = read_csv((dir.path / "runs.csv").string());
    CHECK(runs.size() == 1 + res.records.size());
    CHECK(runs[0] == std::vector<std::string>{"optimizer", "seed", "status", "accuracy",
                                              "duration_seconds"});

    const auto summary = read_csv((dir.path / "summary.csv").string());
    CHECK(summary.size() == 1 + 2 * specs.size());
    CHECK(summary[1][0] == "adamz");
    CHECK(summary[1][1] == "accuracy");
    CHECK(summary[2][1] == "duration");

    // loss_curves round-trip: per-record series reconstruct at format precision
    const auto curves = read_csv((dir.path / "loss_curves.csv").string());
    size_t expected_rows = 1;
    for (const auto& r : res.records) expected_rows += r.loss_series.size();
    CHECK(curves.size() == expected_rows);
    size_t row = 1;
    for (const auto& rec : res.records) {
        for (size_t s = 0; s < rec.loss_series.size(); ++s, ++row) {
            CHECK(curves[row][0] == rec.optimizer);
            CHECK(std::stoull(curves[row][1]) == rec.seed);
            CHECK(std::stoul(curves[row][2]) == s + 1);
            CHECK(std::fabs(std::stod(curves[row][3]) - rec.loss_series[s]) <= 5e-7);
        }
    }

    // re-export into a second directory: byte-identical files
    TempDir dir2("export2");
    export_results(res.records, res.summary, dir2.path.string());
    for (const char* name : {"summary.csv", "runs.csv", "loss_curves.csv", "lr_trace.csv",
                             "boxplot.svg", "loss_curves.svg"}) {
        CHECK(slurp(dir.path / name) == slurp(dir2.path / name));
    }

    // lr_trace rows = steps of the first adamz record
    const auto trace = read_csv((dir.path / "lr_trace.csv").string());
    CHECK(trace.size() == 1 + res.records[0].loss_series.size());
    CHECK(trace[0] == std::vector<std::string>{"step", "lr", "adjustment"});
}

TEST_CASE("summarize rejects an unknown/empty optimizer group") {
    CHECK_THROWS_AS(summarize({}, {"adam"}), ValidationError);
}
