#include "vectorworld/diffcore/kernels.hpp"

#include <cmath>

namespace vw::diff::kernels {

namespace {
bool g_parallel = true;

// parallelism is only worth it above this many output elements
constexpr long kOmpThreshold = 4096;

inline double fetch(const double* p, int r, int c, int ld, bool t) {
    return t ? p[static_cast<size_t>(c) * ld + r] : p[static_cast<size_t>(r) * ld + c];
}

// One output row. Every variant accumulates over p in ascending order,
// so all paths (and the OpenMP split) are bit-identical; the loop
// nests just pick cache-friendly access patterns.
inline void matmul_row(const double* a, const double* b, double* c,
                       int i, int k, int n, bool ta, bool tb,
                       int lda, int ldb) {
    double* crow = c + static_cast<size_t>(i) * n;
    if (!tb) {
        // c[i,:] += a(i,p) * b[p,:], contiguous rows of B
        for (int j = 0; j < n; ++j) crow[j] = 0.0;
        for (int p = 0; p < k; ++p) {
            double av = ta ? a[static_cast<size_t>(p) * lda + i]
                           : a[static_cast<size_t>(i) * lda + p];
            const double* brow = b + static_cast<size_t>(p) * ldb;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    } else if (!ta) {
        // c[i,j] = dot(a[i,:], b[j,:]), both contiguous
        const double* arow = a + static_cast<size_t>(i) * lda;
        for (int j = 0; j < n; ++j) {
            const double* brow = b + static_cast<size_t>(j) * ldb;
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] = acc;
        }
    } else {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p)
                acc += fetch(a, i, p, lda, true) * fetch(b, p, j, ldb, true);
            crow[j] = acc;
        }
    }
}

inline void softmax_row(const double* x, double* y, int cols) {
    const double* xr = x;
    double m = xr[0];
    for (int j = 1; j < cols; ++j) m = xr[j] > m ? xr[j] : m;
    double z = 0.0;
    for (int j = 0; j < cols; ++j) {
        y[j] = std::exp(xr[j] - m);
        z += y[j];
    }
    for (int j = 0; j < cols; ++j) y[j] /= z;
}

inline void layernorm_row(const double* x, double* y, int cols, double eps) {
    double mu = 0.0;
    for (int j = 0; j < cols; ++j) mu += x[j];
    mu /= cols;
    double var = 0.0;
    for (int j = 0; j < cols; ++j) {
        double d = x[j] - mu;
        var += d * d;
    }
    var /= cols;
    double inv = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < cols; ++j) y[j] = (x[j] - mu) * inv;
}
}  // namespace

void set_parallel(bool enabled) { g_parallel = enabled; }
bool parallel_enabled() { return g_parallel; }

void matmul_serial(const double* a, const double* b, double* c,
                   int m, int k, int n, bool ta, bool tb) {
    int lda = ta ? m : k;
    int ldb = tb ? k : n;
    for (int i = 0; i < m; ++i) matmul_row(a, b, c, i, k, n, ta, tb, lda, ldb);
}

void matmul_omp(const double* a, const double* b, double* c,
                int m, int k, int n, bool ta, bool tb) {
    int lda = ta ? m : k;
    int ldb = tb ? k : n;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) matmul_row(a, b, c, i, k, n, ta, tb, lda, ldb);
}

void matmul(const double* a, const double* b, double* c,
            int m, int k, int n, bool ta, bool tb) {
    if (g_parallel && static_cast<long>(m) * n * k >= kOmpThreshold && m > 1) {
        matmul_omp(a, b, c, m, k, n, ta, tb);
    } else {
        matmul_serial(a, b, c, m, k, n, ta, tb);
    }
}

void softmax_rows_serial(const double* x, double* y, int rows, int cols) {
    for (int i = 0; i < rows; ++i)
        softmax_row(x + static_cast<size_t>(i) * cols, y + static_cast<size_t>(i) * cols, cols);
}

void softmax_rows_omp(const double* x, double* y, int rows, int cols) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < rows; ++i)
        softmax_row(x + static_cast<size_t>(i) * cols, y + static_cast<size_t>(i) * cols, cols);
}

void softmax_rows(const double* x, double* y, int rows, int cols) {
    if (g_parallel && static_cast<long>(rows) * cols >= kOmpThreshold && rows > 1) {
        softmax_rows_omp(x, y, rows, cols);
    } else {
        softmax_rows_serial(x, y, rows, cols);
    }
}

void layernorm_rows_serial(const double* x, double* y, int rows, int cols, double eps) {
    for (int i = 0; i < rows; ++i)
        layernorm_row(x + static_cast<size_t>(i) * cols, y + static_cast<size_t>(i) * cols, cols, eps);
}

void layernorm_rows_omp(const double* x, double* y, int rows, int cols, double eps) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < rows; ++i)
        layernorm_row(x + static_cast<size_t>(i) * cols, y + static_cast<size_t>(i) * cols, cols, eps);
}

void layernorm_rows(const double* x, double* y, int rows, int cols, double eps) {
    if (g_parallel && static_cast<long>(rows) * cols >= kOmpThreshold && rows > 1) {
        layernorm_rows_omp(x, y, rows, cols, eps);
    } else {
        layernorm_rows_serial(x, y, rows, cols, eps);
    }
}

}  // namespace vw::diff::kernels
