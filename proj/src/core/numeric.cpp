#include "fcdbn/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fcdbn/kernels.hpp"

namespace fcdbn {

const char* to_string(Errc code) noexcept {
    switch (code) {
        case Errc::shape: return "shape error";
        case Errc::invalid_kernel: return "invalid kernel";
        case Errc::invalid_parameter: return "invalid parameter";
        case Errc::empty_batch: return "empty batch";
        case Errc::divergence: return "divergence";
        case Errc::not_filtered_layer: return "not a filtered layer";
        case Errc::degenerate_rate: return "degenerate dropout rate";
        case Errc::degenerate_labels: return "degenerate labels";
        case Errc::model_state: return "model state";
        case Errc::empty_input: return "empty input";
        case Errc::insufficient_data: return "insufficient data";
        case Errc::incompatible_descriptor: return "incompatible descriptor";
        case Errc::config: return "config error";
        case Errc::invalid_rate: return "invalid rate";
        case Errc::invalid_sample: return "invalid sample";
        case Errc::degenerate: return "degenerate input";
        case Errc::insufficient_pairs: return "insufficient pairs";
        case Errc::matching: return "matching error";
        case Errc::parse: return "parse error";
        case Errc::load: return "load error";
        case Errc::io: return "io error";
        case Errc::usage: return "usage";
    }
    return "error";
}

Mat::Mat(std::size_t rows, std::size_t cols, Vec data) : rows_(rows), cols_(cols), data_(std::move(data)) {
    require(data_.size() == rows_ * cols_, Errc::shape,
            "matrix data length " + std::to_string(data_.size()) + " != " + std::to_string(rows_) + "x" +
                std::to_string(cols_));
}

Mat Mat::row_vector(std::span<const double> v) { return Mat(1, v.size(), Vec(v.begin(), v.end())); }

bool Mat::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Mat Mat::transposed() const {
    Mat t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

Mat Mat::reshaped(std::size_t rows, std::size_t cols) const { return Mat(rows, cols, data_); }

namespace {
void require_same_shape(const Mat& a, const Mat& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), Errc::shape, "operand shapes differ");
}
}  // namespace

Mat operator+(const Mat& a, const Mat& b) {
    require_same_shape(a, b);
    Mat out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
    return out;
}

Mat operator-(const Mat& a, const Mat& b) {
    require_same_shape(a, b);
    Mat out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
    return out;
}

Mat operator*(double s, const Mat& a) {
    Mat out = a;
    for (double& x : out.flat()) x *= s;
    return out;
}

double sum_squares(std::span<const double> v) noexcept {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), Errc::shape, "max_abs_diff length mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double sigmoid(double x) noexcept {
    x = std::clamp(x, -500.0, 500.0);
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Mat sigmoid(const Mat& x) {
    Mat out = x;
    sigmoid_inplace(out.flat());
    return out;
}

void sigmoid_inplace(std::span<double> x) noexcept {
    for (double& v : x) v = sigmoid(v);
}

double softplus(double x) noexcept {
    if (x > 30.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

Mat conv2d_same(const Mat& image, const Mat& kernel) { return kernels::conv2d_same(image, kernel); }

// --- random streams -------------------------------------------------------

std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t RngStream::next_u64() noexcept {
    const std::uint64_t x = mix64(seed_ + counter_ * 0x9E3779B97F4A7C15ULL);
    ++counter_;
    return x;
}

double RngStream::uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RngStream::gaussian(double mean, double stddev) noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
}

bool RngStream::bernoulli(double p) noexcept { return uniform() < p; }

std::size_t RngStream::below(std::size_t n) noexcept {
    if (n <= 1) {
        next_u64();
        return 0;
    }
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
}

RngStream RngStream::derive(std::uint64_t tag) const noexcept {
    return RngStream(mix64(seed_ ^ mix64(tag + 0x632BE59BD9B4E019ULL)));
}

Mat draw(RngStream& stream, Uniform01, std::size_t n) {
    Mat out(1, n);
    for (double& x : out.flat()) x = stream.uniform();
    return out;
}

Mat draw(RngStream& stream, Gaussian dist, std::size_t n) {
    require(dist.stddev >= 0.0 && std::isfinite(dist.stddev) && std::isfinite(dist.mean), Errc::invalid_parameter,
            "gaussian stddev must be finite and >= 0");
    Mat out(1, n);
    for (double& x : out.flat()) x = stream.gaussian(dist.mean, dist.stddev);
    return out;
}

Mat draw(RngStream& stream, Bernoulli dist, std::size_t n) {
    require(dist.p >= 0.0 && dist.p <= 1.0, Errc::invalid_parameter, "bernoulli p outside [0,1]");
    Mat out(1, n);
    for (double& x : out.flat()) x = stream.bernoulli(dist.p) ? 1.0 : 0.0;
    return out;
}

}  // namespace fcdbn
