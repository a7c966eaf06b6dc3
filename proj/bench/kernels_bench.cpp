// Compares the serial reference kernels against the OpenMP ones at the
// matrix sizes the graph engine actually sees (token blocks and pair
// tables). Run: ./bench/kernels_bench
#include <benchmark/benchmark.h>

#include <vector>

#include "vectorworld/diffcore/kernels.hpp"
#include "vectorworld/util/rng.hpp"

namespace {

std::vector<double> random_mat(int r, int c, uint64_t seed) {
    vw::Rng rng(seed);
    std::vector<double> m(static_cast<size_t>(r) * c);
    for (auto& x : m) x = rng.normal();
    return m;
}

void bm_matmul_serial(benchmark::State& state) {
    int n = static_cast<int>(state.range(0));
    auto a = random_mat(n, n, 1);
    auto b = random_mat(n, n, 2);
    std::vector<double> c(static_cast<size_t>(n) * n);
    for (auto _ : state) {
        vw::diff::kernels::matmul_serial(a.data(), b.data(), c.data(), n, n, n, false, false);
        benchmark::ClobberMemory();
    }
}

void bm_matmul_omp(benchmark::State& state) {
    int n = static_cast<int>(state.range(0));
    auto a = random_mat(n, n, 1);
    auto b = random_mat(n, n, 2);
    std::vector<double> c(static_cast<size_t>(n) * n);
    for (auto _ : state) {
        vw::diff::kernels::matmul_omp(a.data(), b.data(), c.data(), n, n, n, false, false);
        benchmark::ClobberMemory();
    }
}

void bm_softmax_serial(benchmark::State& state) {
    int rows = static_cast<int>(state.range(0));
    auto x = random_mat(rows, 384, 3);
    std::vector<double> y(x.size());
    for (auto _ : state) {
        vw::diff::kernels::softmax_rows_serial(x.data(), y.data(), rows, 384);
        benchmark::ClobberMemory();
    }
}

void bm_softmax_omp(benchmark::State& state) {
    int rows = static_cast<int>(state.range(0));
    auto x = random_mat(rows, 384, 3);
    std::vector<double> y(x.size());
    for (auto _ : state) {
        vw::diff::kernels::softmax_rows_omp(x.data(), y.data(), rows, 384);
        benchmark::ClobberMemory();
    }
}

void bm_layernorm_serial(benchmark::State& state) {
    int rows = static_cast<int>(state.range(0));
    auto x = random_mat(rows, 64, 4);
    std::vector<double> y(x.size());
    for (auto _ : state) {
        vw::diff::kernels::layernorm_rows_serial(x.data(), y.data(), rows, 64, 1e-5);
        benchmark::ClobberMemory();
    }
}

void bm_layernorm_omp(benchmark::State& state) {
    int rows = static_cast<int>(state.range(0));
    auto x = random_mat(rows, 64, 4);
    std::vector<double> y(x.size());
    for (auto _ : state) {
        vw::diff::kernels::layernorm_rows_omp(x.data(), y.data(), rows, 64, 1e-5);
        benchmark::ClobberMemory();
    }
}

}  // namespace

BENCHMARK(bm_matmul_serial)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(bm_matmul_omp)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(bm_softmax_serial)->Arg(100)->Arg(400);
BENCHMARK(bm_softmax_omp)->Arg(100)->Arg(400);
BENCHMARK(bm_layernorm_serial)->Arg(100)->Arg(400);
BENCHMARK(bm_layernorm_omp)->Arg(100)->Arg(400);

BENCHMARK_MAIN();
