#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fcdbn/error.hpp"

namespace fcdbn {

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Mat(std::size_t rows, std::size_t cols, Vec data);

    static Mat row_vector(std::span<const double> v);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::span<double> flat() noexcept { return data_; }
    std::span<const double> flat() const noexcept { return data_; }
    const Vec& values() const noexcept { return data_; }

    bool all_finite() const noexcept;
    Mat transposed() const;
    Mat reshaped(std::size_t rows, std::size_t cols) const;

    friend bool operator==(const Mat& a, const Mat& b) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vec data_;
};

// Elementwise helpers used across modules.
Mat operator+(const Mat& a, const Mat& b);
Mat operator-(const Mat& a, const Mat& b);
Mat operator*(double s, const Mat& a);
double sum_squares(std::span<const double> v) noexcept;
double dot(std::span<const double> a, std::span<const double> b) noexcept;
double max_abs_diff(std::span<const double> a, std::span<const double> b);

double sigmoid(double x) noexcept;
Mat sigmoid(const Mat& x);
void sigmoid_inplace(std::span<double> x) noexcept;
double softplus(double x) noexcept;

/// 2-D convolution with zero padding; output has the image's shape.
/// The kernel is flipped (true convolution) and centred on its middle tap.
Mat conv2d_same(const Mat& image, const Mat& kernel);

/// Counter-based random stream.
///
/// Draw i of a stream is mix64(seed + (counter + i) * 0x9E3779B97F4A7C15), where
/// mix64 is the SplitMix64 finaliser. A uniform draw consumes one counter value
/// and uses the top 53 bits; a Gaussian draw consumes two (Box-Muller, cosine
/// branch); a Bernoulli draw consumes one uniform. Streams are single-owner.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t counter = 0) noexcept
        : seed_(seed), counter_(counter) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t next_u64() noexcept;
    double uniform() noexcept;  // [0, 1)
    double gaussian(double mean = 0.0, double stddev = 1.0) noexcept;
    bool bernoulli(double p) noexcept;
    /// Uniform integer in [0, n).
    std::size_t below(std::size_t n) noexcept;

    /// Independent stream keyed by (seed, tag); does not advance this stream.
    RngStream derive(std::uint64_t tag) const noexcept;

private:
    std::uint64_t seed_;
    std::uint64_t counter_;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

struct Uniform01 {};
struct Gaussian {
    double mean = 0.0;
    double stddev = 1.0;
};
struct Bernoulli {
    double p = 0.5;
};

/// n draws as a 1 x n matrix. Throws invalid_parameter for p outside [0,1] or
/// negative stddev.
Mat draw(RngStream& stream, Uniform01, std::size_t n);
Mat draw(RngStream& stream, Gaussian dist, std::size_t n);
Mat draw(RngStream& stream, Bernoulli dist, std::size_t n);

template <typename T>
void shuffle(std::vector<T>& items, RngStream& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = rng.below(i);
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace fcdbn
