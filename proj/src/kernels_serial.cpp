#include "adamz/kernels.hpp"

#include "kernel_rows.hpp"

namespace adamz::kernels::serial {

void batched_matmul_nn(const double* a, const double* b, double* out, int groups,
                       int m, int k, int n, bool accumulate) {
    for (int g = 0; g < groups; ++g) {
        const double* ag = a + static_cast<long>(g) * m * k;
        const double* bg = b + static_cast<long>(g) * k * n;
        double* og = out + static_cast<long>(g) * m * n;
        for (int i = 0; i < m; ++i) {
            detail::mm_nn_row(ag + static_cast<long>(i) * k, bg,
                              og + static_cast<long>(i) * n, k, n, accumulate);
        }
    }
}

void batched_matmul_nt(const double* a, const double* b, double* out, int groups,
                       int m, int k, int n, bool accumulate) {
    for (int g = 0; g < groups; ++g) {
        const double* ag = a + static_cast<long>(g) * m * k;
        const double* bg = b + static_cast<long>(g) * n * k;
        double* og = out + static_cast<long>(g) * m * n;
        for (int i = 0; i < m; ++i) {
            detail::mm_nt_row(ag + static_cast<long>(i) * k, bg,
                              og + static_cast<long>(i) * n, k, n, accumulate);
        }
    }
}

void batched_matmul_tn(const double* a, const double* b, double* out, int groups,
                       int m, int k, int n, bool accumulate) {
    for (int g = 0; g < groups; ++g) {
        const double* ag = a + static_cast<long>(g) * k * m;
        const double* bg = b + static_cast<long>(g) * k * n;
        double* og = out + static_cast<long>(g) * m * n;
        for (int i = 0; i < m; ++i) {
            detail::mm_tn_row(ag, bg, og + static_cast<long>(i) * n, i, m, k, n, accumulate);
        }
    }
}

void softmax_rows(const double* x, double* out, int rows, int cols) {
    for (int i = 0; i < rows; ++i) {
        detail::softmax_row(x + static_cast<long>(i) * cols, out + static_cast<long>(i) * cols, cols);
    }
}

void log_softmax_rows(const double* x, double* out, int rows, int cols) {
    for (int i = 0; i < rows; ++i) {
        detail::log_softmax_row(x + static_cast<long>(i) * cols, out + static_cast<long>(i) * cols, cols);
    }
}

void softmax_rows_backward(const double* y, const double* dy, double* dx, int rows, int cols) {
    for (int i = 0; i < rows; ++i) {
        const long off = static_cast<long>(i) * cols;
        detail::softmax_backward_row(y + off, dy + off, dx + off, cols);
    }
}

void log_softmax_rows_backward(const double* y, const double* dy, double* dx, int rows, int cols) {
    for (int i = 0; i < rows; ++i) {
        const long off = static_cast<long>(i) * cols;
        detail::log_softmax_backward_row(y + off, dy + off, dx + off, cols);
    }
}

}  // namespace adamz::kernels::serial
