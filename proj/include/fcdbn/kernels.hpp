#pragma once

// Dense kernels behind the RBM, DBN and MLP code.
//
// Every kernel exists twice: a plain serial loop nest kept as the reference,
// and an OpenMP version used by the library. The OpenMP versions partition
// output rows between threads and accumulate each output element in a fixed
// order, so results do not depend on the thread count.

#include <cstddef>
#include <span>

#include "fcdbn/numeric.hpp"

namespace fcdbn::kernels {

namespace serial {
// C = A * B
Mat gemm_nn(const Mat& a, const Mat& b);
// C = A^T * B
Mat gemm_tn(const Mat& a, const Mat& b);
// C = A * B^T
Mat gemm_nt(const Mat& a, const Mat& b);
Mat conv2d_same(const Mat& image, const Mat& kernel);
// g[p][q] = sum_{r,c} grad(r,c) * image(r - p + cr, c - q + cc); the
// derivative of sum(grad .* conv2d_same(image, k)) with respect to k.
Mat conv2d_kernel_grad(const Mat& image, const Mat& grad, std::size_t krows, std::size_t kcols);
}  // namespace serial

namespace omp {
Mat gemm_nn(const Mat& a, const Mat& b);
Mat gemm_tn(const Mat& a, const Mat& b);
Mat gemm_nt(const Mat& a, const Mat& b);
Mat conv2d_same(const Mat& image, const Mat& kernel);
Mat conv2d_kernel_grad(const Mat& image, const Mat& grad, std::size_t krows, std::size_t kcols);
}  // namespace omp

using omp::conv2d_kernel_grad;
using omp::conv2d_same;
using omp::gemm_nn;
using omp::gemm_nt;
using omp::gemm_tn;

/// Adds `bias` to every row of `m`.
void add_row_bias(Mat& m, std::span<const double> bias) noexcept;
/// Column sums of `m`.
Vec column_sums(const Mat& m);
/// dst += scale * src
void axpy(double scale, std::span<const double> src, std::span<double> dst) noexcept;

int max_threads() noexcept;

}  // namespace fcdbn::kernels
