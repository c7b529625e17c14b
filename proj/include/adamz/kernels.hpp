#pragma once

namespace adamz::kernels {

// Two interchangeable backends: `serial` is the reference, `parallel` adds
// OpenMP worksharing over rows/groups. Both are built from the same row
// primitives, so their outputs are bit-identical; tests assert this.
enum class Backend { serial, parallel };

Backend active_backend();
void set_backend(Backend b);
bool parallel_available();

// Grouped (batched) matrix products over row-major buffers. A group g
// occupies a contiguous block: a + g*m*k, b + g*k*n (or g*n*k for *_nt),
// out + g*m*n. `accumulate` adds into out instead of overwriting.
//
//   nn: out[g] = a[g] (m x k) * b[g] (k x n)
//   nt: out[g] = a[g] (m x k) * b[g]^T, b[g] stored (n x k)
//   tn: out[g] = a[g]^T * b[g], a[g] stored (k x m), b[g] (k x n)
void batched_matmul_nn(const double* a, const double* b, double* out, int groups,
                       int m, int k, int n, bool accumulate = false);
void batched_matmul_nt(const double* a, const double* b, double* out, int groups,
                       int m, int k, int n, bool accumulate = false);
void batched_matmul_tn(const double* a, const double* b, double* out, int groups,
                       int m, int k, int n, bool accumulate = false);

// Single-matrix convenience wrappers (groups = 1).
void matmul_nn(const double* a, const double* b, double* out, int m, int k, int n,
               bool accumulate = false);
void matmul_nt(const double* a, const double* b, double* out, int m, int k, int n,
               bool accumulate = false);
void matmul_tn(const double* a, const double* b, double* out, int m, int k, int n,
               bool accumulate = false);

// Rowwise softmax / log-softmax over [rows x cols], max-subtraction form.
void softmax_rows(const double* x, double* out, int rows, int cols);
void log_softmax_rows(const double* x, double* out, int rows, int cols);
// Backward passes accumulate into dx. `y` is the forward output.
void softmax_rows_backward(const double* y, const double* dy, double* dx, int rows, int cols);
void log_softmax_rows_backward(const double* y, const double* dy, double* dx, int rows, int cols);

namespace serial {
void batched_matmul_nn(const double* a, const double* b, double* out, int groups,
                       int m, int k, int n, bool accumulate);
void batched_matmul_nt(const double* a, const double* b, double* out, int groups,
                       int m, int k, int n, bool accumulate);
void batched_matmul_tn(const double* a, const double* b, double* out, int groups,
                       int m, int k, int n, bool accumulate);
void softmax_rows(const double* x, double* out, int rows, int cols);
void log_softmax_rows(const double* x, double* out, int rows, int cols);
void softmax_rows_backward(const double* y, const double* dy, double* dx, int rows, int cols);
void log_softmax_rows_backward(const double* y, const double* dy, double* dx, int rows, int cols);
}  // namespace serial

namespace parallel {
void batched_matmul_nn(const double* a, const double* b, double* out, int groups,
                       int m, int k, int n, bool accumulate);
void batched_matmul_nt(const double* a, const double* b, double* out, int groups,
                       int m, int k, int n, bool accumulate);
void batched_matmul_tn(const double* a, const double* b, double* out, int groups,
                       int m, int k, int n, bool accumulate);
void softmax_rows(const double* x, double* out, int rows, int cols);
void log_softmax_rows(const double* x, double* out, int rows, int cols);
void softmax_rows_backward(const double* y, const double* dy, double* dx, int rows, int cols);
void log_softmax_rows_backward(const double* y, const double* dy, double* dx, int rows, int cols);
}  // namespace parallel

}  // namespace adamz::kernels
