#include <bit>
#include <string>

#include "fcdbn/descriptors.hpp"

namespace fcdbn {

namespace {

constexpr int kNeighbours[8][2] = {{0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}};

std::array<std::uint8_t, 256> build_table() {
    std::array<std::uint8_t, 256> t{};
    std::uint8_t next = 0;
    for (unsigned code = 0; code < 256; ++code) {
        const auto c = static_cast<std::uint8_t>(code);
        const auto rotated = static_cast<std::uint8_t>((c >> 1) | (c << 7));
        const bool uniform = std::popcount(static_cast<unsigned>(c ^ rotated)) <= 2;
        t[code] = uniform ? next++ : static_cast<std::uint8_t>(kLbpBins - 1);
    }
    return t;
}

long clamp_index(long v, std::size_t n) { return v < 0 ? 0 : (v >= static_cast<long>(n) ? static_cast<long>(n) - 1 : v); }

}  // namespace

const std::array<std::uint8_t, 256>& lbp_bin_table() {
    static const std::array<std::uint8_t, 256> table = build_table();
    return table;
}

std::uint8_t lbp_code(const Mat& image, std::size_t r, std::size_t c) {
    const double centre = image(r, c);
    unsigned code = 0;
    for (unsigned k = 0; k < 8; ++k) {
        const long rr = clamp_index(static_cast<long>(r) + kNeighbours[k][0], image.rows());
        const long cc = clamp_index(static_cast<long>(c) + kNeighbours[k][1], image.cols());
        if (image(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc)) > centre) code |= 1u << k;
    }
    return static_cast<std::uint8_t>(code);
}

DescriptorVec lbp_descriptor(const Mat& image) {
    require(image.rows() >= kMinDescriptorSide && image.cols() >= kMinDescriptorSide, Errc::shape,
            "LBP needs an image of at least 16x16, got " + std::to_string(image.rows()) + "x" +
                std::to_string(image.cols()));
    const auto& table = lbp_bin_table();
    DescriptorVec d;
    d.kind = DescriptorKind::lbp;
    d.grid_rows = image.rows() / kCellSize;
    d.grid_cols = image.cols() / kCellSize;
    d.values.assign(d.grid_rows * d.grid_cols * kLbpBins, 0.0);
    for (std::size_t r = 0; r < d.grid_rows * kCellSize; ++r)
        for (std::size_t c = 0; c < d.grid_cols * kCellSize; ++c) {
            const std::size_t cell = (r / kCellSize) * d.grid_cols + c / kCellSize;
            d.values[cell * kLbpBins + table[lbp_code(image, r, c)]] += 1.0;
        }
    return d;
}

}  // namespace fcdbn
