#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <vector>

#include "adamz/kernels.hpp"
#include "adamz/rng.hpp"

using namespace adamz;

namespace {

std::vector<double> random_buffer(size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-2.0, 2.0);
    return v;
}

// plain triple loop, no blocking, used as the shape oracle
std::vector<double> naive_nn(const std::vector<double>& a, const std::vector<double>& b, int m,
                             int k, int n) {
    std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int kk = 0; kk < k; ++kk) acc += a[i * k + kk] * b[kk * n + j];
            out[i * n + j] = acc;
        }
    }
    return out;
}

}  // namespace

TEST_CASE("matmul_nn matches naive oracle") {
    Rng rng(7);
    for (auto [m, k, n] : std::vector<std::array<int, 3>>{{1, 1, 1}, {3, 4, 5}, {17, 9, 13}}) {
        const auto a = random_buffer(static_cast<size_t>(m) * k, rng);
        const auto b = random_buffer(static_cast<size_t>(k) * n, rng);
        std::vector<double> out(static_cast<size_t>(m) * n);
        kernels::serial::batched_matmul_nn(a.data(), b.data(), out.data(), 1, m, k, n, false);
        const auto want = naive_nn(a, b, m, k, n);
        for (size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("nt and tn variants agree with explicit transposes") {
    Rng rng(11);
    const int m = 6, k = 5, n = 4;
    const auto a = random_buffer(static_cast<size_t>(m) * k, rng);
    const auto bt = random_buffer(static_cast<size_t>(n) * k, rng);  // b^T stored (n x k)
    std::vector<double> b(static_cast<size_t>(k) * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < k; ++j) b[j * n + i] = bt[i * k + j];
    }
    std::vector<double> out_nt(static_cast<size_t>(m) * n), want(static_cast<size_t>(m) * n);
    kernels::serial::batched_matmul_nt(a.data(), bt.data(), out_nt.data(), 1, m, k, n, false);
    kernels::serial::batched_matmul_nn(a.data(), b.data(), want.data(), 1, m, k, n, false);
    for (size_t i = 0; i < want.size(); ++i) CHECK(out_nt[i] == doctest::Approx(want[i]).epsilon(1e-12));

    const auto at = random_buffer(static_cast<size_t>(k) * m, rng);  // a^T stored (k x m)
    std::vector<double> a2(static_cast<size_t>(m) * k);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < k; ++j) a2[i * k + j] = at[j * m + i];
    }
    const auto b2 = random_buffer(static_cast<size_t>(k) * n, rng);
    std::vector<double> out_tn(static_cast<size_t>(m) * n), want2(static_cast<size_t>(m) * n);
    kernels::serial::batched_matmul_tn(at.data(), b2.data(), out_tn.data(), 1, m, k, n, false);
    kernels::serial::batched_matmul_nn(a2.data(), b2.data(), want2.data(), 1, m, k, n, false);
    for (size_t i = 0; i < want2.size(); ++i) CHECK(out_tn[i] == doctest::Approx(want2[i]).epsilon(1e-12));
}

TEST_CASE("serial and parallel backends are bit-identical") {
    if (!kernels::parallel_available()) return;
    Rng rng(3);
    const int G = 8, m = 14, k = 7, n = 9;
    const auto a = random_buffer(static_cast<size_t>(G) * m * k, rng);
    const auto b = random_buffer(static_cast<size_t>(G) * k * n, rng);
    const auto bt = random_buffer(static_cast<size_t>(G) * n * k, rng);
    const auto at = random_buffer(static_cast<size_t>(G) * k * m, rng);

    std::vector<double> s(static_cast<size_t>(G) * m * n), p(s.size());
    kernels::serial::batched_matmul_nn(a.data(), b.data(), s.data(), G, m, k, n, false);
    kernels::parallel::batched_matmul_nn(a.data(), b.data(), p.data(), G, m, k, n, false);
    for (size_t i = 0; i < s.size(); ++i) CHECK(s[i] == p[i]);

    kernels::serial::batched_matmul_nt(a.data(), bt.data(), s.data(), G, m, k, n, false);
    kernels::parallel::batched_matmul_nt(a.data(), bt.data(), p.data(), G, m, k, n, false);
    for (size_t i = 0; i < s.size(); ++i) CHECK(s[i] == p[i]);

    kernels::serial::batched_matmul_tn(at.data(), b.data(), s.data(), G, m, k, n, false);
    kernels::parallel::batched_matmul_tn(at.data(), b.data(), p.data(), G, m, k, n, false);
    for (size_t i = 0; i < s.size(); ++i) CHECK(s[i] == p[i]);

    const int rows = 33, cols = 12;
    const auto x = random_buffer(static_cast<size_t>(rows) * cols, rng);
    const auto dy = random_buffer(static_cast<size_t>(rows) * cols, rng);
    std::vector<double> ys(x.size()), yp(x.size());
    kernels::serial::softmax_rows(x.data(), ys.data(), rows, cols);
    kernels::parallel::softmax_rows(x.data(), yp.data(), rows, cols);
    for (size_t i = 0; i < ys.size(); ++i) CHECK(ys[i] == yp[i]);

    std::vector<double> dxs(x.size(), 0.0), dxp(x.size(), 0.0);
    kernels::serial::softmax_rows_backward(ys.data(), dy.data(), dxs.data(), rows, cols);
    kernels::parallel::softmax_rows_backward(yp.data(), dy.data(), dxp.data(), rows, cols);
    for (size_t i = 0; i < dxs.size(); ++i) CHECK(dxs[i] == dxp[i]);

    kernels::serial::log_softmax_rows(x.data(), ys.data(), rows, cols);
    kernels::parallel::log_softmax_rows(x.data(), yp.data(), rows, cols);
    for (size_t i = 0; i < ys.size(); ++i) CHECK(ys[i] == yp[i]);
}

TEST_CASE("accumulate flag adds instead of overwriting") {
    Rng rng(5);
    const int m = 3, k = 4, n = 2;
    const auto a = random_buffer(static_cast<size_t>(m) * k, rng);
    const auto b = random_buffer(static_cast<size_t>(k) * n, rng);
    std::vector<double> once(static_cast<size_t>(m) * n), twice(static_cast<size_t>(m) * n, 0.0);
    kernels::matmul_nn(a.data(), b.data(), once.data(), m, k, n, false);
    kernels::matmul_nn(a.data(), b.data(), twice.data(), m, k, n, true);
    kernels::matmul_nn(a.data(), b.data(), twice.data(), m, k, n, true);
    for (size_t i = 0; i < once.size(); ++i) CHECK(twice[i] == doctest::Approx(2.0 * once[i]).epsilon(1e-12));
}
