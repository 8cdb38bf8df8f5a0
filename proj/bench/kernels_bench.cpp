#include <benchmark/benchmark.h>

#include "fcdbn/kernels.hpp"
#include "fcdbn/numeric.hpp"

namespace {

using fcdbn::Mat;

Mat random_mat(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    fcdbn::RngStream rng(seed);
    Mat m(rows, cols);
    for (double& x : m.flat()) x = rng.gaussian();
    return m;
}

template <Mat (*Fn)(const Mat&, const Mat&)>
void bm_gemm(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Mat a = random_mat(64, n, 1);
    const Mat b = random_mat(n, n / 2, 2);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(a, b));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(64 * n * n / 2));
}

template <Mat (*Fn)(const Mat&, const Mat&)>
void bm_gemm_tn(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Mat a = random_mat(64, n, 1);
    const Mat b = random_mat(64, n / 2, 2);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(a, b));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(64 * n * n / 2));
}

template <Mat (*Fn)(const Mat&, const Mat&)>
void bm_gemm_nt(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Mat a = random_mat(16, n / 2, 1);
    const Mat b = random_mat(n, n / 2, 2);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(a, b));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(16 * n * n / 2));
}

// Shapes of one CD step on a 1024x512 layer with batch 16.
void bm_cd_shapes(benchmark::State& state) {
    const Mat v = random_mat(16, 1024, 1);
    const Mat w = random_mat(1024, 512, 2);
    const Mat h = random_mat(16, 512, 3);
    const Mat v2 = random_mat(32, 1024, 4);
    const Mat h2 = random_mat(32, 512, 5);
    const auto which = state.range(0);
    for (auto _ : state) {
        if (which == 0) benchmark::DoNotOptimize(fcdbn::kernels::gemm_nn(v, w));
        if (which == 1) benchmark::DoNotOptimize(fcdbn::kernels::gemm_nt(h, w));
        if (which == 2) benchmark::DoNotOptimize(fcdbn::kernels::gemm_tn(v2, h2));
    }
}

template <Mat (*Fn)(const Mat&, const Mat&)>
void bm_conv(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Mat img = random_mat(n, n, 3);
    const Mat k = random_mat(3, 3, 4);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(img, k));
}

}  // namespace

BENCHMARK(bm_gemm<fcdbn::kernels::serial::gemm_nn>)->Name("gemm_nn/serial")->Arg(256)->Arg(1024);
BENCHMARK(bm_gemm<fcdbn::kernels::omp::gemm_nn>)->Name("gemm_nn/omp")->Arg(256)->Arg(1024);
BENCHMARK(bm_gemm_tn<fcdbn::kernels::serial::gemm_tn>)->Name("gemm_tn/serial")->Arg(256);
BENCHMARK(bm_gemm_tn<fcdbn::kernels::omp::gemm_tn>)->Name("gemm_tn/omp")->Arg(256);
BENCHMARK(bm_gemm_nt<fcdbn::kernels::serial::gemm_nt>)->Name("gemm_nt/serial")->Arg(1024);
BENCHMARK(bm_gemm_nt<fcdbn::kernels::omp::gemm_nt>)->Name("gemm_nt/omp")->Arg(1024);
BENCHMARK(bm_cd_shapes)->Name("cd_step/nn")->Arg(0);
BENCHMARK(bm_cd_shapes)->Name("cd_step/nt")->Arg(1);
BENCHMARK(bm_cd_shapes)->Name("cd_step/tn")->Arg(2);
BENCHMARK(bm_conv<fcdbn::kernels::serial::conv2d_same>)->Name("conv2d_same/serial")->Arg(32)->Arg(64);
BENCHMARK(bm_conv<fcdbn::kernels::omp::conv2d_same>)->Name("conv2d_same/omp")->Arg(32)->Arg(64);

BENCHMARK_MAIN();
