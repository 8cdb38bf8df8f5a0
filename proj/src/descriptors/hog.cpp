#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fcdbn/descriptors.hpp"

namespace fcdbn {

namespace {

double pixel(const Mat& m, long r, long c) {
    const long rr = std::clamp<long>(r, 0, static_cast<long>(m.rows()) - 1);
    const long cc = std::clamp<long>(c, 0, static_cast<long>(m.cols()) - 1);
    return m(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
}

}  // namespace

DescriptorVec hog_descriptor(const Mat& image) {
    require(image.rows() >= kMinDescriptorSide && image.cols() >= kMinDescriptorSide, Errc::shape,
            "HOG needs an image of at least 16x16, got " + std::to_string(image.rows()) + "x" +
                std::to_string(image.cols()));
    const std::size_t cr = image.rows() / kCellSize;
    const std::size_t cc = image.cols() / kCellSize;
    Vec cells(cr * cc * kHogBins, 0.0);
    const double bin_width = 180.0 / static_cast<double>(kHogBins);

    for (std::size_t r = 0; r < cr * kCellSize; ++r)
        for (std::size_t c = 0; c < cc * kCellSize; ++c) {
            const auto ri = static_cast<long>(r);
            const auto ci = static_cast<long>(c);
            const double gx = pixel(image, ri, ci + 1) - pixel(image, ri, ci - 1);
            const double gy = pixel(image, ri + 1, ci) - pixel(image, ri - 1, ci);
            const double mag = std::hypot(gx, gy);
            if (mag == 0.0) continue;
            double angle = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
            angle = std::fmod(angle + 180.0, 180.0);
            const double pos = angle / bin_width;
            const double lo = std::floor(pos);
            const double w_hi = pos - lo;
            const auto b0 = static_cast<std::size_t>(lo) % kHogBins;
            const std::size_t b1 = (b0 + 1) % kHogBins;
            double* h = cells.data() + ((r / kCellSize) * cc + c / kCellSize) * kHogBins;
            h[b0] += mag * (1.0 - w_hi);
            h[b1] += mag * w_hi;
        }

    DescriptorVec d;
    d.kind = DescriptorKind::hog;
    d.grid_rows = cr - 1;
    d.grid_cols = cc - 1;
    const std::size_t block_len = 4 * kHogBins;
    d.values.assign(d.grid_rows * d.grid_cols * block_len, 0.0);
    for (std::size_t br = 0; br < d.grid_rows; ++br)
        for (std::size_t bc = 0; bc < d.grid_cols; ++bc) {
            double* out = d.values.data() + (br * d.grid_cols + bc) * block_len;
            std::size_t k = 0;
            for (std::size_t dr = 0; dr < 2; ++dr)
                for (std::size_t dc = 0; dc < 2; ++dc) {
                    const double* h = cells.data() + ((br + dr) * cc + (bc + dc)) * kHogBins;
                    for (std::size_t b = 0; b < kHogBins; ++b) out[k++] = h[b];
                }
            double norm = 0.0;
            for (std::size_t i = 0; i < block_len; ++i) norm += out[i] * out[i];
            norm = std::sqrt(norm);
            for (std::size_t i = 0; i < block_len; ++i) out[i] = norm < 1e-12 ? 0.0 : out[i] / norm;
        }
    return d;
}

}  // namespace fcdbn
