#pragma once

#include <cstddef>

namespace vw::diff::kernels {

// Runtime switch between the serial reference kernels and the OpenMP
// ones. Both produce bit-identical results (each output element is
// accumulated in the same order by exactly one thread); the serial
// path is kept as the reference for tests and the kernel benchmark.
void set_parallel(bool enabled);
bool parallel_enabled();

// C[m x n] = op(A) * op(B); op transposes when the flag is set.
// A is m x k after op, B is k x n after op.
void matmul_serial(const double* a, const double* b, double* c,
                   int m, int k, int n, bool ta, bool tb);
void matmul_omp(const double* a, const double* b, double* c,
                int m, int k, int n, bool ta, bool tb);
void matmul(const double* a, const double* b, double* c,
            int m, int k, int n, bool ta, bool tb);

// row-wise softmax, max-shifted
void softmax_rows_serial(const double* x, double* y, int rows, int cols);
void softmax_rows_omp(const double* x, double* y, int rows, int cols);
void softmax_rows(const double* x, double* y, int rows, int cols);

// row-wise layer normalization, eps inside the sqrt; constant rows
// normalize to zero
void layernorm_rows_serial(const double* x, double* y, int rows, int cols, double eps);
void layernorm_rows_omp(const double* x, double* y, int rows, int cols, double eps);
void layernorm_rows(const double* x, double* y, int rows, int cols, double eps);

}  // namespace vw::diff::kernels
