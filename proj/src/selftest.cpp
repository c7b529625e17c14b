#include "adamz/selftest.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "adamz/datasets.hpp"
#include "adamz/gradcheck.hpp"
#include "adamz/models.hpp"
#include "adamz/optim.hpp"
#include "adamz/reference_optimizers.hpp"
#include "adamz/rng.hpp"

namespace adamz::selftest {

namespace {

struct TrajectoryDraw {
    std::vector<double> theta0;
    reference::Trajectory grads;
    std::vector<double> losses;
};

TrajectoryDraw draw_trajectory(Rng& rng) {
    TrajectoryDraw d;
    const int n_params = 1 + static_cast<int>(rng.below(4));
    const int steps = 1 + static_cast<int>(rng.below(10));
    d.theta0.resize(static_cast<size_t>(n_params));
    for (double& v : d.theta0) v = rng.uniform(-1.0, 1.0);
    d.grads.resize(static_cast<size_t>(steps));
    for (auto& g : d.grads) {
        g.resize(static_cast<size_t>(n_params));
        for (double& v : g) v = rng.uniform(-2.0, 2.0);
    }
    d.losses.resize(static_cast<size_t>(steps));
    double level = rng.uniform(0.3, 2.0);
    for (double& l : d.losses) {
        if (rng.uniform() < 0.3) level = rng.uniform(0.05, 2.0);
        l = level + (rng.uniform() < 0.5 ? 0.0 : rng.uniform(-0.05, 0.05));
    }
    return d;
}

std::map<std::string, double> draw_overrides(const std::string& kind, Rng& rng) {
    std::map<std::string, double> ov;
    ov["lr"] = std::pow(10.0, rng.uniform(-4.0, -1.0));
    if (kind == "rmsprop") ov["rms_decay"] = rng.uniform(0.8, 0.999);
    if (kind == "adam" || kind == "adamax" || kind == "nadam" || kind == "adamw" || kind == "adamz") {
        ov["beta1"] = rng.uniform(0.5, 0.95);
        ov["beta2"] = rng.uniform(0.9, 0.9999);
    }
    if (kind == "adamw") ov["weight_decay"] = rng.uniform(0.0, 0.1);
    if (kind == "adamz") {
        ov["gamma_over"] = rng.uniform(0.3, 0.9);
        ov["gamma_stag"] = rng.uniform(1.05, 1.5);
        ov["sigma_stag"] = rng.uniform(0.05, 0.5);
        const int patience = 2 + static_cast<int>(rng.below(7));
        ov["patience"] = patience;
        ov["stagnation_period"] = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(patience)));
        ov["max_grad_norm"] = rng.uniform(0.5, 3.0);
    }
    return ov;
}

reference::Trajectory reference_for(const std::string& kind, const TrajectoryDraw& d,
                                    const std::map<std::string, double>& ov,
                                    reference::AsgdResult* asgd_out,
                                    reference::AdamzRefResult* adamz_out) {
    const double lr = ov.at("lr");
    auto get = [&](const char* k, double fb) {
        auto it = ov.find(k);
        return it == ov.end() ? fb : it->second;
    };
    if (kind == "sgd") return reference::sgd(d.theta0, d.grads, lr);
    if (kind == "asgd") {
        *asgd_out = reference::asgd(d.theta0, d.grads, lr);
        return asgd_out->live;
    }
    if (kind == "adagrad") return reference::adagrad(d.theta0, d.grads, lr, 1e-8);
    if (kind == "rmsprop") return reference::rmsprop(d.theta0, d.grads, lr, get("rms_decay", 0.99), 1e-8);
    if (kind == "adam") return reference::adam(d.theta0, d.grads, lr, ov.at("beta1"), ov.at("beta2"), 1e-8);
    if (kind == "adamax") return reference::adamax(d.theta0, d.grads, lr, ov.at("beta1"), ov.at("beta2"), 1e-8);
    if (kind == "nadam") return reference::nadam(d.theta0, d.grads, lr, ov.at("beta1"), ov.at("beta2"), 1e-8);
    if (kind == "adamw") {
        return reference::adamw(d.theta0, d.grads, lr, ov.at("beta1"), ov.at("beta2"), 1e-8,
                                ov.at("weight_decay"));
    }
    reference::AdamzRefConfig rc{lr,
                                 ov.at("beta1"),
                                 ov.at("beta2"),
                                 1e-8,
                                 ov.at("gamma_over"),
                                 ov.at("gamma_stag"),
                                 ov.at("sigma_stag"),
                                 static_cast<int>(ov.at("patience")),
                                 static_cast<int>(ov.at("stagnation_period")),
                                 ov.at("max_grad_norm"),
                                 1e-7,
                                 1.0};
    *adamz_out = reference::adamz(d.theta0, d.grads, d.losses, rc);
    return adamz_out->thetas;
}

}  // namespace

// Compares one optimizer against its scalar-loop reference over random
// (gradient sequence, hyperparameter) draws.
bool check_optimizer_against_reference(const std::string& kind, int n_trajectories, uint64_t seed,
                                       double tol, std::string* why) {
    Rng rng(Rng::derive(seed, std::hash<std::string>{}(kind)));
    for (int trial = 0; trial < n_trajectories; ++trial) {
        const TrajectoryDraw d = draw_trajectory(rng);
        const auto ov = draw_overrides(kind, rng);

        reference::AsgdResult asgd_ref;
        reference::AdamzRefResult adamz_ref;
        const auto expected = reference_for(kind, d, ov, &asgd_ref, &adamz_ref);

        std::vector<Parameter> params;
        params.reserve(d.theta0.size());
        for (double v : d.theta0) params.push_back(Parameter({1}, {v}));
        std::vector<Parameter*> ptrs;
        for (auto& p : params) ptrs.push_back(&p);
        auto opt = make_optimizer(kind, ptrs, ov);

        for (size_t t = 0; t < d.grads.size(); ++t) {
            for (size_t i = 0; i < ptrs.size(); ++i) ptrs[i]->grad = {d.grads[t][i]};
            const StepReport rep = opt->step(d.losses[t]);
            for (size_t i = 0; i < ptrs.size(); ++i) {
                if (std::fabs(ptrs[i]->value[0] - expected[t][i]) > tol) {
                    std::ostringstream os;
                    os << kind << " trial " << trial << " step " << t + 1 << " param " << i
                       << ": got " << ptrs[i]->value[0] << ", reference " << expected[t][i];
                    if (why != nullptr) *why = os.str();
                    return false;
                }
            }
            if (kind == "adamz") {
                const int want = adamz_ref.adjustments[t];
                const int got = rep.adjustment == Adjustment::none        ? 0
                                : rep.adjustment == Adjustment::overshoot ? 1
                                                                          : 2;
                if (want != got || std::fabs(rep.lr_after - adamz_ref.lr_after[t]) > tol ||
                    std::fabs(rep.pre_clip_norm - adamz_ref.pre_clip_norm[t]) > tol) {
                    if (why != nullptr) {
                        *why = kind + " trial " + std::to_string(trial) + " step " +
                               std::to_string(t + 1) + ": controller state diverged from reference";
                    }
                    return false;
                }
            }
        }
        if (kind == "asgd") {
            auto* a = dynamic_cast<Asgd*>(opt.get());
            const auto averaged = a->eval_parameters();
            const auto& want = asgd_ref.averaged.back();
            for (size_t i = 0; i < want.size(); ++i) {
                if (std::fabs(averaged[i][0] - want[i]) > tol) {
                    if (why != nullptr) {
                        *why = "asgd trial " + std::to_string(trial) + ": averaged iterate differs";
                    }
                    return false;
                }
            }
        }
    }
    return true;
}

namespace {

SuiteResult run_optimizer_suite() {
    SuiteResult res{"optimizer-oracles", true, ""};
    for (const auto& kind : optimizer_kinds()) {
        std::string why;
        if (!check_optimizer_against_reference(kind, 20, 0xA11CE, 1e-12, &why)) {
            res.passed = false;
            res.detail = why;
            return res;
        }
    }
    res.detail = "9 optimizers x 20 trajectories vs scalar references (1e-12)";
    return res;
}

SuiteResult run_gradient_suite() {
    SuiteResult res{"gradient-checks", true, ""};
    Rng rng(0x9fad);

    // circles MLP, every parameter component
    {
        auto model = build_circles_mlp(7);
        std::vector<double> feat(8);
        for (double& v : feat) v = rng.uniform(-1.0, 1.0);
        std::vector<double> target = {1.0, 0.0, 1.0, 0.0};
        auto loss_fn = [&]() {
            Graph g;
            return bce_loss(model->forward(g, g.constant({4, 2}, feat)), target).value();
        };
        auto params = model->parameters();
        Graph g;
        Tensor loss = bce_loss(model->forward(g, g.constant({4, 2}, feat)), target);
        for (Parameter* p : params) p->zero_grad();
        g.backward(loss);
        std::vector<std::vector<double>> analytic;
        for (Parameter* p : params) analytic.push_back(p->grad);
        const auto check = finite_difference_check(loss_fn, params, analytic);
        if (check.max_rel_error >= 1e-5) {
            res.passed = false;
            res.detail = "circles mlp max rel error " + std::to_string(check.max_rel_error);
            return res;
        }
    }

    // attention block, every parameter component
    {
        const int batch = 1, seq = 3, d = 4, heads = 2;
        Parameter x({batch, seq, d}, [&] {
            std::vector<double> v(static_cast<size_t>(batch) * seq * d);
            for (double& e : v) e = rng.uniform(-1.0, 1.0);
            return v;
        }());
        std::vector<Parameter> ws;
        for (int i = 0; i < 4; ++i) {
            std::vector<double> w(16);
            for (double& e : w) e = rng.uniform(-0.5, 0.5);
            ws.push_back(Parameter({4, 4}, std::move(w)));
            ws.push_back(Parameter::zeros({4}));
        }
        std::vector<double> probe(static_cast<size_t>(batch) * seq * d);
        for (double& e : probe) e = rng.uniform(-1.0, 1.0);

        std::vector<Parameter*> params = {&x};
        for (auto& w : ws) params.push_back(&w);
        auto loss_fn = [&]() {
            Graph g;
            AttentionParams ap{g.param(ws[0]), g.param(ws[1]), g.param(ws[2]), g.param(ws[3]),
                               g.param(ws[4]), g.param(ws[5]), g.param(ws[6]), g.param(ws[7])};
            Tensor out = multi_head_attention(g.param(x), heads, ap).out;
            return sum(mul(reshape(out, {seq, d}), g.constant({seq, d}, probe))).value();
        };
        Graph g;
        AttentionParams ap{g.param(ws[0]), g.param(ws[1]), g.param(ws[2]), g.param(ws[3]),
                           g.param(ws[4]), g.param(ws[5]), g.param(ws[6]), g.param(ws[7])};
        Tensor out = multi_head_attention(g.param(x), heads, ap).out;
        Tensor loss = sum(mul(reshape(out, {seq, d}), g.constant({seq, d}, probe)));
        for (Parameter* p : params) p->zero_grad();
        g.backward(loss);
        std::vector<std::vector<double>> analytic;
        for (Parameter* p : params) analytic.push_back(p->grad);
        const auto check = finite_difference_check(loss_fn, params, analytic);
        if (check.max_rel_error >= 1e-5) {
            res.passed = false;
            res.detail = "attention max rel error " + std::to_string(check.max_rel_error);
            return res;
        }
    }

    res.detail = "circles mlp + attention vs central differences (1e-5)";
    return res;
}

SuiteResult run_idx_suite(bool inject_fault) {
    SuiteResult res{"idx-roundtrip", true, ""};
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() /
                         ("adamz-selftest-" + std::to_string(static_cast<long>(::getpid())));
    fs::create_directories(dir);
    const std::string img = (dir / "images.idx").string();
    const std::string lab = (dir / "labels.idx").string();
    try {
        std::vector<uint8_t> pixels(2 * 4 * 4);
        for (size_t i = 0; i < pixels.size(); ++i) pixels[i] = static_cast<uint8_t>(i * 8);
        pixels[0] = 255;
        write_idx_images(img, pixels, 2, 4, 4);
        write_idx_labels(lab, {3, 9});
        if (inject_fault) {
            // flip a header byte so the loader must reject the file
            std::fstream f(img, std::ios::in | std::ios::out | std::ios::binary);
            f.seekp(0);
            f.put('\x42');
        }
        const DatasetSplit data = load_mnist_idx(img, lab);
        bool ok = data.n == 2 && data.dim == 16 && data.features[0] == 1.0 &&
                  data.labels[0] == 3.0 && data.labels[1] == 9.0;
        for (size_t i = 1; ok && i < pixels.size(); ++i) {
            ok = data.features[i] == static_cast<double>(pixels[i]) / 255.0;
        }
        if (!ok) {
            res.passed = false;
            res.detail = "loaded fixture does not match written bytes";
        } else {
            res.detail = "2-image fixture round-trips byte-exactly";
        }
    } catch (const std::exception& e) {
        res.passed = false;
        res.detail = e.what();
    }
    std::error_code ec;
    fs::remove_all(dir, ec);
    return res;
}

}  // namespace

std::vector<SuiteResult> run_all(bool inject_idx_fault) {
    return {run_optimizer_suite(), run_gradient_suite(), run_idx_suite(inject_idx_fault)};
}

}  // namespace adamz::selftest
