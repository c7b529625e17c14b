#include "adamz/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace adamz {

double percentile_nearest_rank(std::vector<double> values, double q) {
    if (values.empty()) throw ValidationError("percentile of an empty sample");
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    size_t rank = static_cast<size_t>(std::ceil(q * static_cast<double>(n)));
    if (rank < 1) rank = 1;
    if (rank > n) rank = n;
    return values[rank - 1];
}

QuartileRow quartiles(const std::vector<double>& values) {
    QuartileRow row;
    row.q1 = percentile_nearest_rank(values, 0.25);
    row.median = percentile_nearest_rank(values, 0.50);
    row.q3 = percentile_nearest_rank(values, 0.75);
    return row;
}

namespace {

BenchmarkSummary summarize_impl(const std::vector<RunRecord>& records,
                                const std::vector<std::string>& order, bool strict) {
    BenchmarkSummary summary;
    for (const std::string& name : order) {
        OptimizerSummary row;
        row.optimizer = name;
        std::vector<double> accs, durs;
        for (const RunRecord& r : records) {
            if (r.optimizer != name) continue;
            ++row.n_runs;
            if (r.failed) {
                ++row.n_failed;
                continue;
            }
            accs.push_back(r.accuracy);
            durs.push_back(r.duration_seconds);
        }
        if (accs.empty()) {
            if (strict) {
                throw ValidationError("summarize: no successful records for optimizer '" + name + "'");
            }
            const double nan = std::numeric_limits<double>::quiet_NaN();
            row.accuracy = {nan, nan, nan};
            row.duration = {nan, nan, nan};
        } else {
            row.accuracy = quartiles(accs);
            row.duration = quartiles(durs);
        }
        summary.rows.push_back(std::move(row));
    }
    return summary;
}

}  // namespace

BenchmarkSummary summarize(const std::vector<RunRecord>& records,
                           const std::vector<std::string>& order) {
    return summarize_impl(records, order, /*strict=*/true);
}

BenchmarkSummary summarize_tolerant(const std::vector<RunRecord>& records,
                                    const std::vector<std::string>& order) {
    return summarize_impl(records, order, /*strict=*/false);
}

RunRecord train(Model& model, Optimizer& opt, const DatasetSplit& train_data, LossKind loss,
                int epochs, int batch_size, uint64_t seed) {
    RunRecord rec;
    rec.optimizer = std::string(opt.name());
    rec.seed = seed;
    const bool trace_lr = opt.name() == "adamz";

    std::vector<double> feat, lab;
    std::vector<int> classes;
    int step = 0;
    const auto t0 = std::chrono::steady_clock::now();
    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (const auto& batch : batch_indices(train_data.n, batch_size, seed, epoch)) {
            gather(train_data, batch, feat, lab);
            Graph g;
            Tensor out = model.forward(g, g.constant(model.input_shape(static_cast<int>(batch.size())), feat));
            Tensor loss_t;
            if (loss == LossKind::bce) {
                loss_t = bce_loss(out, lab);
            } else {
                classes.resize(lab.size());
                for (size_t i = 0; i < lab.size(); ++i) classes[i] = static_cast<int>(lab[i]);
                loss_t = nll_loss(out, classes);
            }
            const double loss_v = loss_t.value();
            ++step;
            if (!std::isfinite(loss_v)) {
                rec.failed = true;
                rec.failure = "non-finite loss at step " + std::to_string(step);
                break;
            }
            opt.zero_grad();
            g.backward(loss_t);
            StepReport rep;
            try {
                rep = opt.step(loss_v);
            } catch (const DivergenceError& e) {
                rec.failed = true;
                rec.failure = std::string(e.what()) + " at step " + std::to_string(step);
                break;
            }
            rec.loss_series.push_back(loss_v);
            if (trace_lr) {
                rec.lr_series.push_back(rep.lr_after);
                if (rep.adjustment != Adjustment::none) {
                    rec.adjustments.push_back({step, rep.adjustment});
                }
            }
        }
        if (rec.failed) break;
    }
    rec.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

namespace {

RunRecord run_one(const ExperimentSetup& setup, const OptimizerSpec& spec, uint64_t seed) {
    auto model = setup.build_model(seed);
    auto opt = make_optimizer(spec.kind, model->parameters(), spec.overrides);
    RunRecord rec = train(*model, *opt, *setup.train_data, setup.loss, setup.epochs,
                          setup.batch_size, seed);
    if (!rec.failed) {
        if (opt->has_eval_parameters()) {
            // evaluate with the averaged iterates, then restore
            auto params = model->parameters();
            const auto averaged = opt->eval_parameters();
            std::vector<std::vector<double>> live(params.size());
            for (size_t i = 0; i < params.size(); ++i) {
                live[i] = params[i]->value;
                params[i]->value = averaged[i];
            }
            rec.accuracy = accuracy(*model, *setup.test_data);
            for (size_t i = 0; i < params.size(); ++i) params[i]->value = live[i];
        } else {
            rec.accuracy = accuracy(*model, *setup.test_data);
        }
    }
    return rec;
}

}  // namespace

BenchmarkResult run_benchmark(const ExperimentSetup& setup,
                              const std::vector<OptimizerSpec>& optimizers, int n_sims,
                              uint64_t seed0, int workers) {
    if (n_sims < 1) throw ValidationError("n_sims must be at least 1");
    if (optimizers.empty()) throw ValidationError("no optimizers selected");
    struct Job {
        const OptimizerSpec* spec;
        uint64_t seed;
        size_t slot;
    };
    std::vector<Job> jobs;
    jobs.reserve(optimizers.size() * static_cast<size_t>(n_sims));
    for (size_t oi = 0; oi < optimizers.size(); ++oi) {
        for (int s = 0; s < n_sims; ++s) {
            jobs.push_back({&optimizers[oi], seed0 + static_cast<uint64_t>(s),
                            oi * static_cast<size_t>(n_sims) + static_cast<size_t>(s)});
        }
    }

    BenchmarkResult result;
    result.records.resize(jobs.size());
    if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));

    std::atomic<size_t> next{0};
    auto worker_fn = [&](bool limit_kernel_threads) {
#ifdef _OPENMP
        // simulations are the unit of parallelism; keep kernels single-
        // threaded inside a multi-worker pool
        if (limit_kernel_threads) omp_set_num_threads(1);
#else
        (void)limit_kernel_threads;
#endif
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= jobs.size()) break;
            const Job& job = jobs[i];
            try {
                result.records[job.slot] = run_one(setup, *job.spec, job.seed);
            } catch (const std::exception& e) {
                RunRecord rec;
                rec.optimizer = job.spec->kind;
                rec.seed = job.seed;
                rec.failed = true;
                rec.failure = e.what();
                rec.duration_seconds = 0.0;
                result.records[job.slot] = rec;
            }
        }
    };

    if (workers == 1) {
        worker_fn(false);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker_fn, true);
        for (auto& th : pool) th.join();
    }

    std::vector<std::string> order;
    for (const auto& spec : optimizers) order.push_back(spec.kind);
    result.summary = summarize_tolerant(result.records, order);
    return result;
}

bool validate_adjustments(const RunRecord& record, const AdamzConfig& cfg, std::string* why) {
    AdamzController controller(cfg);
    std::vector<AdjustmentEvent> expected_events;
    auto fail = [&](const std::string& msg) {
        if (why != nullptr) *why = msg;
        return false;
    };
    if (record.lr_series.size() != record.loss_series.size()) {
        return fail("lr series length does not match loss series");
    }
    for (size_t i = 0; i < record.loss_series.size(); ++i) {
        controller.record_loss(record.loss_series[i]);
        const Adjustment tag = controller.adjust_learning_rate();
        const double lr = controller.learning_rate();
        if (lr < cfg.lr_min || lr > cfg.lr_max) {
            return fail("replay lr left [lr_min, lr_max] at step " + std::to_string(i + 1));
        }
        if (record.lr_series[i] != lr) {
            std::ostringstream os;
            os << "replay lr mismatch at step " << i + 1 << ": recorded " << record.lr_series[i]
               << ", replayed " << lr;
            return fail(os.str());
        }
        if (tag != Adjustment::none) {
            expected_events.push_back({static_cast<int>(i) + 1, tag});
        }
    }
    if (expected_events.size() != record.adjustments.size()) {
        return fail("replay produced " + std::to_string(expected_events.size()) +
                    " adjustment events, record holds " + std::to_string(record.adjustments.size()));
    }
    for (size_t i = 0; i < expected_events.size(); ++i) {
        if (expected_events[i].step != record.adjustments[i].step ||
            expected_events[i].tag != record.adjustments[i].tag) {
            return fail("replay event " + std::to_string(i) + " differs from record");
        }
    }
    return true;
}

}  // namespace adamz
