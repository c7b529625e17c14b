// Times the serial reference kernels against the OpenMP backend on the
// matrix shapes the two models actually produce, then one full training
// step of each model per backend.

#include <chrono>
#include <cstdio>
#include <vector>

#include "adamz/datasets.hpp"
#include "adamz/harness.hpp"
#include "adamz/kernels.hpp"
#include "adamz/models.hpp"
#include "adamz/rng.hpp"

using namespace adamz;

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm-up
    const auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r) fn();
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count() / reps;
}

std::vector<double> random_buffer(size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

void bench_matmul(const char* label, int groups, int m, int k, int n, int reps) {
    Rng rng(42);
    const auto a = random_buffer(static_cast<size_t>(groups) * m * k, rng);
    const auto b = random_buffer(static_cast<size_t>(groups) * k * n, rng);
    std::vector<double> out(static_cast<size_t>(groups) * m * n);
    const double serial_ms = time_ms(
        [&] { kernels::serial::batched_matmul_nn(a.data(), b.data(), out.data(), groups, m, k, n, false); },
        reps);
    double parallel_ms = serial_ms;
    if (kernels::parallel_available()) {
        parallel_ms = time_ms(
            [&] { kernels::parallel::batched_matmul_nn(a.data(), b.data(), out.data(), groups, m, k, n, false); },
            reps);
    }
    std::printf("%-34s %10.3f %10.3f %8.2fx\n", label, serial_ms, parallel_ms,
                serial_ms / parallel_ms);
}

double bench_train_step(const char* label, bool parallel) {
    kernels::set_backend(parallel ? kernels::Backend::parallel : kernels::Backend::serial);
    const bool mnist_like = std::string(label).find("attention") != std::string::npos;
    std::unique_ptr<Model> model;
    DatasetSplit data;
    LossKind loss;
    int batch;
    if (mnist_like) {
        model = build_mnist_attention(1);
        Rng rng(7);
        data.n = 256;
        data.dim = 784;
        data.features = random_buffer(static_cast<size_t>(data.n) * data.dim, rng);
        data.labels.resize(static_cast<size_t>(data.n));
        for (auto& l : data.labels) l = static_cast<double>(rng.below(10));
        loss = LossKind::nll;
        batch = 64;
    } else {
        model = build_circles_mlp(1);
        data = make_circles({10000, 0.05, 0.8, 3});
        loss = LossKind::bce;
        batch = 100;
    }
    auto opt = make_optimizer("adamz", model->parameters());
    const auto t0 = Clock::now();
    train(*model, *opt, data, loss, 1, batch, 5);
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    return ms;
}

}  // namespace

int main() {
    std::printf("kernel benchmark (%s OpenMP)\n\n",
                kernels::parallel_available() ? "with" : "WITHOUT");
    std::printf("%-34s %10s %10s %9s\n", "kernel", "serial ms", "omp ms", "speedup");
    bench_matmul("matmul 1792x28 * 28x28 (embed)", 1, 1792, 28, 28, 50);
    bench_matmul("matmul 64x784 * 784x128 (fc1)", 1, 64, 784, 128, 50);
    bench_matmul("batched 256 x (28x7 * 7x28)", 256, 28, 7, 28, 50);
    bench_matmul("matmul 100x2 * 2x10 (circles)", 1, 100, 2, 10, 200);

    std::printf("\n%-34s %10s\n", "one training epoch", "ms");
    const double mlp_serial = bench_train_step("circles mlp / serial", false);
    std::printf("%-34s %10.1f\n", "circles mlp / serial", mlp_serial);
    if (kernels::parallel_available()) {
        const double mlp_par = bench_train_step("circles mlp / omp", true);
        std::printf("%-34s %10.1f\n", "circles mlp / omp", mlp_par);
    }
    const double att_serial = bench_train_step("attention / serial", false);
    std::printf("%-34s %10.1f\n", "attention / serial", att_serial);
    if (kernels::parallel_available()) {
        const double att_par = bench_train_step("attention / omp", true);
        std::printf("%-34s %10.1f\n", "attention / omp", att_par);
    }
    kernels::set_backend(kernels::Backend::parallel);
    return 0;
}
