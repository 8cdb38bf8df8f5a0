#include "fcdbn/rbm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fcdbn/kernels.hpp"

namespace fcdbn {

namespace {

bool finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

void check_dims(std::span<const double> v, std::span<const double> h, const RbmLayer& layer) {
    require(v.size() == layer.visible_size(), Errc::shape,
            "visible length " + std::to_string(v.size()) + " != " + std::to_string(layer.visible_size()));
    require(h.size() == layer.hidden_size(), Errc::shape,
            "hidden length " + std::to_string(h.size()) + " != " + std::to_string(layer.hidden_size()));
}

// z_j = a_j + sum_i W_ij v_i / sigma_i
Vec hidden_input(std::span<const double> v, const RbmLayer& layer) {
    const std::size_t d = layer.visible_size();
    const std::size_t f = layer.hidden_size();
    Vec z(layer.hidden_bias);
    const bool scaled = layer.unit_kind == UnitKind::gaussian;
    for (std::size_t i = 0; i < d; ++i) {
        const double vi = scaled ? v[i] / layer.sigma[i] : v[i];
        if (vi == 0.0) continue;
        const double* wrow = layer.weights.data() + i * f;
        for (std::size_t j = 0; j < f; ++j) z[j] += wrow[j] * vi;
    }
    return z;
}

}  // namespace

void RbmLayer::validate() const {
    const std::size_t d = visible_size();
    const std::size_t f = hidden_size();
    require(d > 0 && f > 0, Errc::shape, "layer needs nonzero visible and hidden sizes");
    require(hidden_bias.size() == f, Errc::shape, "hidden bias length mismatch");
    require(visible_bias.size() == d, Errc::shape, "visible bias length mismatch");
    require(sigma.size() == d, Errc::shape, "sigma length mismatch");
    require(weights.all_finite() && finite(hidden_bias) && finite(visible_bias) && finite(sigma),
            Errc::invalid_parameter, "non-finite layer parameter");
    require(std::isfinite(alpha) && std::isfinite(beta) && alpha >= 0.0 && beta >= 0.0, Errc::invalid_parameter,
            "alpha and beta must be finite and >= 0");
    if (unit_kind == UnitKind::gaussian)
        for (double s : sigma) require(s > 0.0, Errc::invalid_parameter, "gaussian sigma must be > 0");
    if (filtered()) {
        require(image_rows * image_cols == d, Errc::shape, "filtered layer image dims do not match D");
        for (const Mat& k : filters) {
            require(k.rows() % 2 == 1 && k.cols() % 2 == 1, Errc::invalid_kernel, "filter dims must be odd");
            require(k.rows() == filters.front().rows() && k.cols() == filters.front().cols(), Errc::invalid_kernel,
                    "filters must share one size");
            require(k.all_finite(), Errc::invalid_parameter, "non-finite filter tap");
        }
    }
}

RbmLayer make_layer(const LayerInit& init, RngStream& rng) {
    require(init.visible > 0 && init.hidden > 0, Errc::invalid_parameter, "layer sizes must be positive");
    RbmLayer layer = zero_layer(init.visible, init.hidden, init.units);
    layer.alpha = init.alpha;
    layer.beta = init.beta;
    for (double& w : layer.weights.flat()) w = rng.gaussian(0.0, init.weight_std);
    if (init.filters > 0) {
        require(init.filter_size % 2 == 1, Errc::invalid_kernel, "filter size must be odd");
        require(init.image_rows * init.image_cols == init.visible, Errc::shape,
                "filtered layer needs image dims matching the visible size");
        layer.image_rows = init.image_rows;
        layer.image_cols = init.image_cols;
        const std::size_t c = init.filter_size / 2;
        for (std::size_t k = 0; k < init.filters; ++k) {
            Mat f(init.filter_size, init.filter_size);
            for (double& x : f.flat()) x = rng.gaussian(0.0, init.filter_noise);
            f(c, c) += 1.0 / static_cast<double>(init.filters);
            layer.filters.push_back(std::move(f));
        }
    }
    layer.validate();
    return layer;
}

RbmLayer zero_layer(std::size_t visible, std::size_t hidden, UnitKind units) {
    RbmLayer layer;
    layer.weights = Mat(visible, hidden);
    layer.hidden_bias.assign(hidden, 0.0);
    layer.visible_bias.assign(visible, 0.0);
    layer.sigma.assign(visible, 1.0);
    layer.unit_kind = units;
    return layer;
}

double energy_bernoulli(std::span<const double> v, std::span<const double> h, const RbmLayer& layer) {
    require(layer.unit_kind == UnitKind::bernoulli, Errc::invalid_parameter, "energy_bernoulli on a gaussian layer");
    check_dims(v, h, layer);
    const std::size_t f = layer.hidden_size();
    double e = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        double wh = 0.0;
        for (std::size_t j = 0; j < f; ++j) wh += layer.weights(i, j) * h[j];
        e -= v[i] * wh + layer.visible_bias[i] * v[i];
    }
    for (std::size_t j = 0; j < f; ++j) e -= layer.hidden_bias[j] * h[j];
    return e;
}

double energy_gaussian(std::span<const double> v, std::span<const double> h, const RbmLayer& layer) {
    require(layer.unit_kind == UnitKind::gaussian, Errc::invalid_parameter, "energy_gaussian on a bernoulli layer");
    check_dims(v, h, layer);
    for (double s : layer.sigma) require(s > 0.0, Errc::invalid_parameter, "sigma must be > 0");
    const std::size_t f = layer.hidden_size();
    double e = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double s = layer.sigma[i];
        double wh = 0.0;
        for (std::size_t j = 0; j < f; ++j) wh += layer.weights(i, j) * h[j];
        const double dv = v[i] - layer.visible_bias[i];
        e += -(v[i] / s) * wh + dv * dv / (2.0 * s * s);
    }
    for (std::size_t j = 0; j < f; ++j) e -= layer.hidden_bias[j] * h[j];
    return e;
}

double free_energy(std::span<const double> v, const RbmLayer& layer) {
    require(v.size() == layer.visible_size(), Errc::shape, "visible length mismatch");
    double fe = 0.0;
    if (layer.unit_kind == UnitKind::gaussian) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double dv = v[i] - layer.visible_bias[i];
            fe += dv * dv / (2.0 * layer.sigma[i] * layer.sigma[i]);
        }
    } else {
        for (std::size_t i = 0; i < v.size(); ++i) fe -= layer.visible_bias[i] * v[i];
    }
    for (double z : hidden_input(v, layer)) fe -= softplus(z);
    return fe;
}

Vec hidden_given_visible(std::span<const double> v, const RbmLayer& layer) {
    require(v.size() == layer.visible_size(), Errc::shape,
            "visible length " + std::to_string(v.size()) + " != " + std::to_string(layer.visible_size()));
    Vec p = hidden_input(v, layer);
    sigmoid_inplace(p);
    return p;
}

Mat hidden_probs(const Mat& visible, const RbmLayer& layer) {
    require(visible.cols() == layer.visible_size(), Errc::shape, "batch width does not match visible size");
    Mat p;
    if (layer.unit_kind == UnitKind::gaussian) {
        Mat scaled = visible;
        for (std::size_t r = 0; r < scaled.rows(); ++r) {
            auto row = scaled.row(r);
            for (std::size_t i = 0; i < row.size(); ++i) row[i] /= layer.sigma[i];
        }
        p = kernels::gemm_nn(scaled, layer.weights);
    } else {
        p = kernels::gemm_nn(visible, layer.weights);
    }
    kernels::add_row_bias(p, layer.hidden_bias);
    sigmoid_inplace(p.flat());
    return p;
}

VisibleConditional visible_given_hidden(std::span<const double> h, const RbmLayer& layer) {
    require(h.size() == layer.hidden_size(), Errc::shape, "hidden length mismatch");
    const std::size_t d = layer.visible_size();
    VisibleConditional out;
    out.mean.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        double wh = 0.0;
        for (std::size_t j = 0; j < h.size(); ++j) wh += layer.weights(i, j) * h[j];
        if (layer.unit_kind == UnitKind::gaussian)
            out.mean[i] = layer.visible_bias[i] + layer.sigma[i] * wh;
        else
            out.mean[i] = sigmoid(wh + layer.visible_bias[i]);
    }
    if (layer.unit_kind == UnitKind::gaussian) out.stddev = layer.sigma;
    return out;
}

Mat visible_means(const Mat& hidden, const RbmLayer& layer) {
    require(hidden.cols() == layer.hidden_size(), Errc::shape, "hidden batch width mismatch");
    Mat v = kernels::gemm_nt(hidden, layer.weights);
    const std::size_t d = layer.visible_size();
    for (std::size_t r = 0; r < v.rows(); ++r) {
        auto row = v.row(r);
        if (layer.unit_kind == UnitKind::gaussian) {
            for (std::size_t i = 0; i < d; ++i) row[i] = layer.visible_bias[i] + layer.sigma[i] * row[i];
        } else {
            for (std::size_t i = 0; i < d; ++i) row[i] = sigmoid(row[i] + layer.visible_bias[i]);
        }
    }
    return v;
}

std::vector<Mat> filter_responses(const Mat& image, const RbmLayer& layer) {
    require(layer.filtered(), Errc::not_filtered_layer, "layer has no filters");
    require(image.size() == layer.visible_size(), Errc::shape, "image does not match the visible size");
    const Mat img = image.reshaped(layer.image_rows, layer.image_cols);
    std::vector<Mat> out;
    out.reserve(layer.filters.size());
    for (const Mat& k : layer.filters) out.push_back(kernels::conv2d_same(img, k));
    return out;
}

Vec apply_filters(const Mat& image, const RbmLayer& layer) {
    const auto responses = filter_responses(image, layer);
    Vec sum(layer.visible_size(), 0.0);
    for (const Mat& r : responses) kernels::axpy(1.0, r.flat(), sum);
    return sum;
}

Mat aggregate_visible(const Mat& batch, const RbmLayer& layer) {
    require(batch.cols() == layer.visible_size(), Errc::shape, "batch width does not match visible size");
    if (!layer.filtered()) return batch;
    // Convolution is linear in the kernel, so the K responses sum to one
    // convolution with the summed kernel.
    Mat g(layer.filters.front().rows(), layer.filters.front().cols());
    for (const Mat& k : layer.filters) kernels::axpy(1.0, k.flat(), g.flat());
    Mat out(batch.rows(), batch.cols());
    const auto rows = static_cast<long>(batch.rows());
#pragma omp parallel for schedule(static)
    for (long r = 0; r < rows; ++r) {
        const auto n = static_cast<std::size_t>(r);
        const Mat img(layer.image_rows, layer.image_cols, Vec(batch.row(n).begin(), batch.row(n).end()));
        const Mat agg = kernels::conv2d_same(img, g);
        std::copy(agg.flat().begin(), agg.flat().end(), out.row(n).begin());
    }
    return out;
}

Mat unfilter(const Mat& aggregated, const RbmLayer& layer) {
    require(layer.filtered(), Errc::not_filtered_layer, "layer has no filters");
    require(aggregated.cols() == layer.visible_size(), Errc::shape, "batch width does not match visible size");
    constexpr int kMaxIterations = 50;
    constexpr double kTolerance = 1e-8;
    const std::size_t kr = layer.filters.front().rows();
    const std::size_t kc = layer.filters.front().cols();
    Mat g(kr, kc);
    for (const Mat& k : layer.filters) kernels::axpy(1.0, k.flat(), g.flat());
    Mat gt(kr, kc);  // adjoint of a zero-padded convolution: the flipped kernel
    for (std::size_t p = 0; p < kr; ++p)
        for (std::size_t q = 0; q < kc; ++q) gt(p, q) = g(kr - 1 - p, kc - 1 - q);
    const std::size_t rows = layer.image_rows;
    const std::size_t cols = layer.image_cols;
    auto dot = [](const Mat& a, const Mat& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
        return s;
    };

    Mat out(aggregated.rows(), aggregated.cols());
    const auto n = static_cast<long>(aggregated.rows());
#pragma omp parallel for schedule(static)
    for (long r = 0; r < n; ++r) {
        const auto row = static_cast<std::size_t>(r);
        const Mat y(rows, cols, Vec(aggregated.row(row).begin(), aggregated.row(row).end()));
        Mat x(rows, cols);
        Mat res = kernels::omp::conv2d_same(y, gt);  // T^T (y - T x) at x = 0
        Mat dir = res;
        double rr = dot(res, res);
        const double stop = kTolerance * kTolerance * std::max(rr, 1e-300);
        for (int it = 0; it < kMaxIterations && rr > stop; ++it) {
            const Mat td = kernels::omp::conv2d_same(dir, g);
            const double denom = dot(td, td);
            if (!(denom > 0.0)) break;
            const double step = rr / denom;
            kernels::axpy(step, dir.flat(), x.flat());
            const Mat ttd = kernels::omp::conv2d_same(td, gt);
            kernels::axpy(-step, ttd.flat(), res.flat());
            const double rr_next = dot(res, res);
            const double beta = rr_next / rr;
            for (std::size_t i = 0; i < dir.size(); ++i) dir.data()[i] = res.data()[i] + beta * dir.data()[i];
            rr = rr_next;
        }
        std::copy(x.flat().begin(), x.flat().end(), out.row(row).begin());
    }
    return out;
}

Mat filter_gradient(const RbmLayer& layer, const Mat& raw_batch, const Mat& grad_visible) {
    require(layer.filtered(), Errc::not_filtered_layer, "layer has no filters");
    require(raw_batch.rows() == grad_visible.rows() && raw_batch.cols() == grad_visible.cols(), Errc::shape,
            "filter_gradient operand mismatch");
    const std::size_t kr = layer.filters.front().rows();
    const std::size_t kc = layer.filters.front().cols();
    Mat total(kr, kc);
    for (std::size_t n = 0; n < raw_batch.rows(); ++n) {
        const Mat img(layer.image_rows, layer.image_cols, Vec(raw_batch.row(n).begin(), raw_batch.row(n).end()));
        const Mat g(layer.image_rows, layer.image_cols, Vec(grad_visible.row(n).begin(), grad_visible.row(n).end()));
        kernels::axpy(1.0, kernels::conv2d_kernel_grad(img, g, kr, kc).flat(), total.flat());
    }
    return total;
}

}  // namespace fcdbn
