#pragma once

#include <cmath>

// Row primitives shared by the serial and parallel backends. Both backends
// inline exactly this code per output row, which is what makes them
// bit-identical: parallelism only changes which thread owns a row, never the
// order of the floating-point accumulation inside it.

namespace adamz::kernels::detail {

// out_row[n] (+)= a_row[k] * b[k x n]
inline void mm_nn_row(const double* a_row, const double* b, double* out_row,
                      int k, int n, bool accumulate) {
    if (!accumulate) {
        for (int j = 0; j < n; ++j) out_row[j] = 0.0;
    }
    for (int kk = 0; kk < k; ++kk) {
        const double aik = a_row[kk];
        const double* b_row = b + static_cast<long>(kk) * n;
        for (int j = 0; j < n; ++j) out_row[j] += aik * b_row[j];
    }
}

// out_row[n] (+)= a_row[k] . b_rows, where b is (n x k): dot of two rows
inline void mm_nt_row(const double* a_row, const double* b, double* out_row,
                      int k, int n, bool accumulate) {
    for (int j = 0; j < n; ++j) {
        const double* b_row = b + static_cast<long>(j) * k;
        double acc = 0.0;
        for (int kk = 0; kk < k; ++kk) acc += a_row[kk] * b_row[kk];
        if (accumulate) {
            out_row[j] += acc;
        } else {
            out_row[j] = acc;
        }
    }
}

// out_row[n] (+)= column i of a (k x m) dotted against b (k x n)
inline void mm_tn_row(const double* a, const double* b, double* out_row,
                      int i, int m, int k, int n, bool accumulate) {
    if (!accumulate) {
        for (int j = 0; j < n; ++j) out_row[j] = 0.0;
    }
    for (int kk = 0; kk < k; ++kk) {
        const double aki = a[static_cast<long>(kk) * m + i];
        const double* b_row = b + static_cast<long>(kk) * n;
        for (int j = 0; j < n; ++j) out_row[j] += aki * b_row[j];
    }
}

inline void softmax_row(const double* x, double* out, int cols) {
    double mx = x[0];
    for (int j = 1; j < cols; ++j) mx = x[j] > mx ? x[j] : mx;
    double sum = 0.0;
    for (int j = 0; j < cols; ++j) {
        out[j] = std::exp(x[j] - mx);
        sum += out[j];
    }
    const double inv = 1.0 / sum;
    for (int j = 0; j < cols; ++j) out[j] *= inv;
}

inline void log_softmax_row(const double* x, double* out, int cols) {
    double mx = x[0];
    for (int j = 1; j < cols; ++j) mx = x[j] > mx ? x[j] : mx;
    double sum = 0.0;
    for (int j = 0; j < cols; ++j) sum += std::exp(x[j] - mx);
    const double lse = std::log(sum);
    for (int j = 0; j < cols; ++j) out[j] = x[j] - mx - lse;
}

// dx_row += y_row * (dy_row - <dy_row, y_row>)
inline void softmax_backward_row(const double* y, const double* dy, double* dx, int cols) {
    double dot = 0.0;
    for (int j = 0; j < cols; ++j) dot += dy[j] * y[j];
    for (int j = 0; j < cols; ++j) dx[j] += y[j] * (dy[j] - dot);
}

// dx_row += dy_row - exp(y_row) * sum(dy_row)
inline void log_softmax_backward_row(const double* y, const double* dy, double* dx, int cols) {
    double sum = 0.0;
    for (int j = 0; j < cols; ++j) sum += dy[j];
    for (int j = 0; j < cols; ++j) dx[j] += dy[j] - std::exp(y[j]) * sum;
}

}  // namespace adamz::kernels::detail
