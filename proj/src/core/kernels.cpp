#include "fcdbn/kernels.hpp"

#include <algorithm>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fcdbn::kernels {

namespace {

void check_kernel(const Mat& image, const Mat& kernel) {
    require(kernel.rows() % 2 == 1 && kernel.cols() % 2 == 1, Errc::invalid_kernel,
            "kernel dims must be odd, got " + std::to_string(kernel.rows()) + "x" + std::to_string(kernel.cols()));
    require(kernel.rows() <= image.rows() && kernel.cols() <= image.cols(), Errc::invalid_kernel,
            "kernel larger than image");
}

void check_inner(std::size_t lhs, std::size_t rhs, const char* op) {
    require(lhs == rhs, Errc::shape,
            std::string(op) + ": inner dimensions " + std::to_string(lhs) + " and " + std::to_string(rhs) + " differ");
}

constexpr std::size_t kRowBlock = 4;
constexpr std::size_t kColBlock = 256;

// Rows [i0, i1) of C += A * B, accumulating over k in ascending order.
inline void gemm_nn_rows(const Mat& a, const Mat& b, Mat& c, std::size_t i0, std::size_t i1) {
    const std::size_t k = a.cols();
    const std::size_t n = b.cols();
    for (std::size_t j0 = 0; j0 < n; j0 += kColBlock) {
        const std::size_t j1 = std::min(n, j0 + kColBlock);
        for (std::size_t p = 0; p < k; ++p) {
            const double* brow = b.data() + p * n;
            for (std::size_t i = i0; i < i1; ++i) {
                const double aip = a(i, p);
                if (aip == 0.0) continue;
                double* crow = c.data() + i * n;
                for (std::size_t j = j0; j < j1; ++j) crow[j] += aip * brow[j];
            }
        }
    }
}

}  // namespace

// --- serial reference -------------------------------------------------------

namespace serial {

Mat gemm_nn(const Mat& a, const Mat& b) {
    check_inner(a.cols(), b.rows(), "gemm_nn");
    Mat c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(p, j);
            c(i, j) = s;
        }
    return c;
}

Mat gemm_tn(const Mat& a, const Mat& b) {
    check_inner(a.rows(), b.rows(), "gemm_tn");
    Mat c(a.cols(), b.cols());
    for (std::size_t i = 0; i < a.cols(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < a.rows(); ++p) s += a(p, i) * b(p, j);
            c(i, j) = s;
        }
    return c;
}

Mat gemm_nt(const Mat& a, const Mat& b) {
    check_inner(a.cols(), b.cols(), "gemm_nt");
    Mat c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(j, p);
            c(i, j) = s;
        }
    return c;
}

Mat conv2d_same(const Mat& image, const Mat& kernel) {
    check_kernel(image, kernel);
    const auto rows = static_cast<long>(image.rows());
    const auto cols = static_cast<long>(image.cols());
    const auto cr = static_cast<long>(kernel.rows() / 2);
    const auto cc = static_cast<long>(kernel.cols() / 2);
    Mat out(image.rows(), image.cols());
    for (long r = 0; r < rows; ++r)
        for (long c = 0; c < cols; ++c) {
            double s = 0.0;
            for (long p = 0; p < static_cast<long>(kernel.rows()); ++p)
                for (long q = 0; q < static_cast<long>(kernel.cols()); ++q) {
                    const long ir = r - p + cr;
                    const long ic = c - q + cc;
                    if (ir < 0 || ir >= rows || ic < 0 || ic >= cols) continue;
                    s += kernel(p, q) * image(ir, ic);
                }
            out(r, c) = s;
        }
    return out;
}

Mat conv2d_kernel_grad(const Mat& image, const Mat& grad, std::size_t krows, std::size_t kcols) {
    require(image.rows() == grad.rows() && image.cols() == grad.cols(), Errc::shape, "grad/image shape mismatch");
    require(krows % 2 == 1 && kcols % 2 == 1, Errc::invalid_kernel, "kernel dims must be odd");
    const auto rows = static_cast<long>(image.rows());
    const auto cols = static_cast<long>(image.cols());
    const auto cr = static_cast<long>(krows / 2);
    const auto cc = static_cast<long>(kcols / 2);
    Mat g(krows, kcols);
    for (long p = 0; p < static_cast<long>(krows); ++p)
        for (long q = 0; q < static_cast<long>(kcols); ++q) {
            double s = 0.0;
            for (long r = 0; r < rows; ++r)
                for (long c = 0; c < cols; ++c) {
                    const long ir = r - p + cr;
                    const long ic = c - q + cc;
                    if (ir < 0 || ir >= rows || ic < 0 || ic >= cols) continue;
                    s += grad(r, c) * image(ir, ic);
                }
            g(p, q) = s;
        }
    return g;
}

}  // namespace serial

// --- OpenMP ---------------------------------------------------------------

namespace omp {

Mat gemm_nn(const Mat& a, const Mat& b) {
    check_inner(a.cols(), b.rows(), "gemm_nn");
    Mat c(a.rows(), b.cols());
    const auto blocks = static_cast<long>((a.rows() + kRowBlock - 1) / kRowBlock);
#pragma omp parallel for schedule(static)
    for (long blk = 0; blk < blocks; ++blk) {
        const std::size_t i0 = static_cast<std::size_t>(blk) * kRowBlock;
        gemm_nn_rows(a, b, c, i0, std::min(a.rows(), i0 + kRowBlock));
    }
    return c;
}

Mat gemm_tn(const Mat& a, const Mat& b) {
    check_inner(a.rows(), b.rows(), "gemm_tn");
    // C rows are columns of A; each thread owns a band of C rows.
    const std::size_t m = a.cols();
    const std::size_t k = a.rows();
    const std::size_t n = b.cols();
    Mat c(m, n);
    const auto blocks = static_cast<long>((m + kRowBlock - 1) / kRowBlock);
#pragma omp parallel for schedule(static)
    for (long blk = 0; blk < blocks; ++blk) {
        const std::size_t i0 = static_cast<std::size_t>(blk) * kRowBlock;
        const std::size_t i1 = std::min(m, i0 + kRowBlock);
        for (std::size_t j0 = 0; j0 < n; j0 += kColBlock) {
            const std::size_t j1 = std::min(n, j0 + kColBlock);
            for (std::size_t p = 0; p < k; ++p) {
                const double* brow = b.data() + p * n;
                const double* arow = a.data() + p * m;
                for (std::size_t i = i0; i < i1; ++i) {
                    const double api = arow[i];
                    if (api == 0.0) continue;
                    double* crow = c.data() + i * n;
                    for (std::size_t j = j0; j < j1; ++j) crow[j] += api * brow[j];
                }
            }
        }
    }
    return c;
}

Mat gemm_nt(const Mat& a, const Mat& b) {
    check_inner(a.cols(), b.cols(), "gemm_nt");
    // Tiles of B rows are transposed into a local buffer so the inner loop runs
    // along C columns; each sum still accumulates over p in order.
    constexpr std::size_t kTile = 32;
    const std::size_t m = a.rows();
    const std::size_t n = b.rows();
    const std::size_t k = a.cols();
    Mat c(m, n);
    const auto tiles = static_cast<long>((n + kTile - 1) / kTile);
#pragma omp parallel
    {
        std::vector<double> bt(k * kTile);
#pragma omp for schedule(static)
        for (long t = 0; t < tiles; ++t) {
            const std::size_t j0 = static_cast<std::size_t>(t) * kTile;
            const std::size_t w = std::min(kTile, n - j0);
            for (std::size_t y = 0; y < w; ++y) {
                const double* brow = b.data() + (j0 + y) * k;
                for (std::size_t p = 0; p < k; ++p) bt[p * kTile + y] = brow[p];
            }
            for (std::size_t i = 0; i < m; ++i) {
                double acc[kTile] = {};
                const double* arow = a.data() + i * k;
                for (std::size_t p = 0; p < k; ++p) {
                    const double aip = arow[p];
                    const double* bp = bt.data() + p * kTile;
                    for (std::size_t y = 0; y < kTile; ++y) acc[y] += aip * bp[y];
                }
                for (std::size_t y = 0; y < w; ++y) c(i, j0 + y) = acc[y];
            }
        }
    }
    return c;
}

Mat conv2d_same(const Mat& image, const Mat& kernel) {
    check_kernel(image, kernel);
    // Zero-padded copy so the tap loops need no bounds checks; the taps are
    // visited in the same order as the reference.
    const std::size_t rows = image.rows();
    const std::size_t cols = image.cols();
    const std::size_t kr = kernel.rows();
    const std::size_t kc = kernel.cols();
    const std::size_t pcols = cols + kc - 1;
    std::vector<double> pad((rows + kr - 1) * pcols, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        std::copy_n(image.data() + r * cols, cols, pad.data() + (r + kr / 2) * pcols + kc / 2);
    Mat out(rows, cols);
    const auto nrows = static_cast<long>(rows);
#pragma omp parallel for schedule(static) if (rows * cols * kr * kc > 200000)
    for (long rl = 0; rl < nrows; ++rl) {
        const auto r = static_cast<std::size_t>(rl);
        double* orow = out.data() + r * cols;
        for (std::size_t p = 0; p < kr; ++p) {
            // image(r - p + cr, c - q + cc) sits at pad(r + kr - 1 - p, c + kc - 1 - q)
            const double* prow = pad.data() + (r + kr - 1 - p) * pcols + kc - 1;
            for (std::size_t q = 0; q < kc; ++q) {
                const double w = kernel(p, q);
                const double* src = prow - q;
                for (std::size_t c = 0; c < cols; ++c) orow[c] += w * src[c];
            }
        }
    }
    return out;
}

Mat conv2d_kernel_grad(const Mat& image, const Mat& grad, std::size_t krows, std::size_t kcols) {
    require(image.rows() == grad.rows() && image.cols() == grad.cols(), Errc::shape, "grad/image shape mismatch");
    require(krows % 2 == 1 && kcols % 2 == 1, Errc::invalid_kernel, "kernel dims must be odd");
    const auto rows = static_cast<long>(image.rows());
    const auto cols = static_cast<long>(image.cols());
    const auto cr = static_cast<long>(krows / 2);
    const auto cc = static_cast<long>(kcols / 2);
    const auto taps = static_cast<long>(krows * kcols);
    Mat g(krows, kcols);
#pragma omp parallel for schedule(static)
    for (long t = 0; t < taps; ++t) {
        const long p = t / static_cast<long>(kcols);
        const long q = t % static_cast<long>(kcols);
        const long r0 = std::max(0L, p - cr);
        const long r1 = std::min(rows, rows + p - cr);
        const long c0 = std::max(0L, q - cc);
        const long c1 = std::min(cols, cols + q - cc);
        double s = 0.0;
        for (long r = r0; r < r1; ++r) {
            const double* grow = grad.data() + r * cols;
            const double* irow = image.data() + (r - p + cr) * cols;
            for (long c = c0; c < c1; ++c) s += grow[c] * irow[c - q + cc];
        }
        g.data()[t] = s;
    }
    return g;
}

}  // namespace omp

void add_row_bias(Mat& m, std::span<const double> bias) noexcept {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
    }
}

Vec column_sums(const Mat& m) {
    Vec s(m.cols(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) s[c] += row[c];
    }
    return s;
}

void axpy(double scale, std::span<const double> src, std::span<double> dst) noexcept {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

int max_threads() noexcept {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace fcdbn::kernels
