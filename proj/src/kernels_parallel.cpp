#include <atomic>

#include "adamz/kernels.hpp"
#include "kernel_rows.hpp"

// OpenMP backend plus the dispatch layer. Worksharing is over (group, row)
// pairs; each pair runs the same row primitive as the serial backend.

namespace adamz::kernels {

namespace parallel {

void batched_matmul_nn(const double* a, const double* b, double* out, int groups,
                       int m, int k, int n, bool accumulate) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int g = 0; g < groups; ++g) {
        for (int i = 0; i < m; ++i) {
            const double* ag = a + static_cast<long>(g) * m * k;
            const double* bg = b + static_cast<long>(g) * k * n;
            double* og = out + static_cast<long>(g) * m * n;
            detail::mm_nn_row(ag + static_cast<long>(i) * k, bg,
                              og + static_cast<long>(i) * n, k, n, accumulate);
        }
    }
}

void batched_matmul_nt(const double* a, const double* b, double* out, int groups,
                       int m, int k, int n, bool accumulate) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int g = 0; g < groups; ++g) {
        for (int i = 0; i < m; ++i) {
            const double* ag = a + static_cast<long>(g) * m * k;
            const double* bg = b + static_cast<long>(g) * n * k;
            double* og = out + static_cast<long>(g) * m * n;
            detail::mm_nt_row(ag + static_cast<long>(i) * k, bg,
                              og + static_cast<long>(i) * n, k, n, accumulate);
        }
    }
}

void batched_matmul_tn(const double* a, const double* b, double* out, int groups,
                       int m, int k, int n, bool accumulate) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int g = 0; g < groups; ++g) {
        for (int i = 0; i < m; ++i) {
            const double* ag = a + static_cast<long>(g) * k * m;
            const double* bg = b + static_cast<long>(g) * k * n;
            double* og = out + static_cast<long>(g) * m * n;
            detail::mm_tn_row(ag, bg, og + static_cast<long>(i) * n, i, m, k, n, accumulate);
        }
    }
}

void softmax_rows(const double* x, double* out, int rows, int cols) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < rows; ++i) {
        detail::softmax_row(x + static_cast<long>(i) * cols, out + static_cast<long>(i) * cols, cols);
    }
}

void log_softmax_rows(const double* x, double* out, int rows, int cols) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < rows; ++i) {
        detail::log_softmax_row(x + static_cast<long>(i) * cols, out + static_cast<long>(i) * cols, cols);
    }
}

void softmax_rows_backward(const double* y, const double* dy, double* dx, int rows, int cols) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < rows; ++i) {
        const long off = static_cast<long>(i) * cols;
        detail::softmax_backward_row(y + off, dy + off, dx + off, cols);
    }
}

void log_softmax_rows_backward(const double* y, const double* dy, double* dx, int rows, int cols) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < rows; ++i) {
        const long off = static_cast<long>(i) * cols;
        detail::log_softmax_backward_row(y + off, dy + off, dx + off, cols);
    }
}

}  // namespace parallel

namespace {

std::atomic<Backend> g_backend{
#ifdef _OPENMP
    Backend::parallel
#else
    Backend::serial
#endif
};

}  // namespace

bool parallel_available() {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }

void set_backend(Backend b) {
    if (b == Backend::parallel && !parallel_available()) b = Backend::serial;
    g_backend.store(b, std::memory_order_relaxed);
}

namespace {

// Ignore the parallel backend for workloads too small to amortize an OpenMP
// region. Both backends produce bit-identical outputs, so routing is purely
// a speed decision.
constexpr long kMatmulWorkThreshold = 1L << 17;   // multiply-adds
constexpr long kRowwiseWorkThreshold = 1L << 14;  // elements

bool go_parallel(long work, long threshold) {
    return active_backend() == Backend::parallel && work >= threshold;
}

}  // namespace

void batched_matmul_nn(const double* a, const double* b, double* out, int groups,
                       int m, int k, int n, bool accumulate) {
    if (go_parallel(static_cast<long>(groups) * m * k * n, kMatmulWorkThreshold)) {
        parallel::batched_matmul_nn(a, b, out, groups, m, k, n, accumulate);
    } else {
        serial::batched_matmul_nn(a, b, out, groups, m, k, n, accumulate);
    }
}

void batched_matmul_nt(const double* a, const double* b, double* out, int groups,
                       int m, int k, int n, bool accumulate) {
    if (go_parallel(static_cast<long>(groups) * m * k * n, kMatmulWorkThreshold)) {
        parallel::batched_matmul_nt(a, b, out, groups, m, k, n, accumulate);
    } else {
        serial::batched_matmul_nt(a, b, out, groups, m, k, n, accumulate);
    }
}

void batched_matmul_tn(const double* a, const double* b, double* out, int groups,
                       int m, int k, int n, bool accumulate) {
    if (go_parallel(static_cast<long>(groups) * m * k * n, kMatmulWorkThreshold)) {
        parallel::batched_matmul_tn(a, b, out, groups, m, k, n, accumulate);
    } else {
        serial::batched_matmul_tn(a, b, out, groups, m, k, n, accumulate);
    }
}

void matmul_nn(const double* a, const double* b, double* out, int m, int k, int n, bool accumulate) {
    batched_matmul_nn(a, b, out, 1, m, k, n, accumulate);
}

void matmul_nt(const double* a, const double* b, double* out, int m, int k, int n, bool accumulate) {
    batched_matmul_nt(a, b, out, 1, m, k, n, accumulate);
}

void matmul_tn(const double* a, const double* b, double* out, int m, int k, int n, bool accumulate) {
    batched_matmul_tn(a, b, out, 1, m, k, n, accumulate);
}

void softmax_rows(const double* x, double* out, int rows, int cols) {
    if (go_parallel(static_cast<long>(rows) * cols, kRowwiseWorkThreshold)) {
        parallel::softmax_rows(x, out, rows, cols);
    } else {
        serial::softmax_rows(x, out, rows, cols);
    }
}

void log_softmax_rows(const double* x, double* out, int rows, int cols) {
    if (go_parallel(static_cast<long>(rows) * cols, kRowwiseWorkThreshold)) {
        parallel::log_softmax_rows(x, out, rows, cols);
    } else {
        serial::log_softmax_rows(x, out, rows, cols);
    }
}

void softmax_rows_backward(const double* y, const double* dy, double* dx, int rows, int cols) {
    if (go_parallel(static_cast<long>(rows) * cols, kRowwiseWorkThreshold)) {
        parallel::softmax_rows_backward(y, dy, dx, rows, cols);
    } else {
        serial::softmax_rows_backward(y, dy, dx, rows, cols);
    }
}

void log_softmax_rows_backward(const double* y, const double* dy, double* dx, int rows, int cols) {
    if (go_parallel(static_cast<long>(rows) * cols, kRowwiseWorkThreshold)) {
        parallel::log_softmax_rows_backward(y, dy, dx, rows, cols);
    } else {
        serial::log_softmax_rows_backward(y, dy, dx, rows, cols);
    }
}

}  // namespace adamz::kernels
