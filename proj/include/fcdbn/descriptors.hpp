#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "fcdbn/numeric.hpp"

namespace fcdbn {

enum class DescriptorKind { lbp, hog };

struct DescriptorVec {
    DescriptorKind kind = DescriptorKind::lbp;
    Vec values;
    std::size_t grid_rows = 0;  // cells (lbp) or blocks (hog) down the image
    std::size_t grid_cols = 0;
};

inline constexpr std::size_t kCellSize = 8;
inline constexpr std::size_t kLbpBins = 59;
inline constexpr std::size_t kHogBins = 9;
inline constexpr std::size_t kMinDescriptorSide = 16;

/// 8-bit LBP code of pixel (r, c): bit k is set when neighbour k is strictly
/// brighter than the centre. Neighbours run clockwise from the right-hand
/// pixel; borders are clamped to the edge.
std::uint8_t lbp_code(const Mat& image, std::size_t r, std::size_t c);
/// Bin of each 8-bit code: the 58 uniform codes take bins 0..57 in ascending
/// code order, every other code bin 58.
const std::array<std::uint8_t, 256>& lbp_bin_table();

/// Uniform LBP(8,1) histograms (59 bins, raw counts) of 8x8-pixel cells,
/// concatenated in row-major cell order. Remainder pixels are ignored.
DescriptorVec lbp_descriptor(const Mat& image);

/// HOG: centred-difference gradients, 9 unsigned bins centred on 0, 20, ...,
/// 160 degrees with linear vote splitting, 8x8-pixel cells, 2x2-cell blocks at
/// a one-cell stride, each block L2-normalized (left zero when its norm is
/// below 1e-12).
DescriptorVec hog_descriptor(const Mat& image);

/// Chi-square distance sum (a - b)^2 / (a + b) over bins with a + b > 0.
double chi_square(std::span<const double> a, std::span<const double> b);

/// LBP: 1 / (1 + chi2) on count-normalized histograms.
/// HOG: (1 + cos) / 2; two zero vectors score 1, one zero vector 0.5.
double match_score(const DescriptorVec& d1, const DescriptorVec& d2);

}  // namespace fcdbn
