#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fcdbn/deep_net.hpp"
#include "fcdbn/kernels.hpp"

namespace fcdbn {

namespace {

double activate(Activation a, double z) noexcept {
    switch (a) {
        case Activation::sigmoid: return sigmoid(z);
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::linear: return z;
    }
    return z;
}

// Derivative expressed through the pre-activation z and output y.
double activate_grad(Activation a, double z, double y) noexcept {
    switch (a) {
        case Activation::sigmoid: return y * (1.0 - y);
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::linear: return 1.0;
    }
    return 1.0;
}

void check_rate(double r) {
    require(std::isfinite(r) && r >= 0.0 && r < 1.0, Errc::degenerate_rate,
            "dropout rate must be in [0, 1), got " + std::to_string(r));
}

double layer_rate(const MlpModel& m, std::size_t layer) { return layer == 0 ? m.dropout_input : m.dropout_hidden; }

Mat standardized(const MlpModel& model, const Mat& x) {
    Mat out = x;
    if (model.input_shift.empty()) return out;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - model.input_shift[c]) * model.input_scale[c];
    }
    return out;
}

// Keep-mask matrices scaled by 1/(1-r), one per layer input; empty when r = 0.
std::vector<Mat> sample_masks(const MlpModel& model, std::size_t rows, RngStream& rng) {
    std::vector<Mat> masks;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const double r = layer_rate(model, l);
        if (r == 0.0) {
            masks.emplace_back();
            continue;
        }
        Mat m(rows, model.layers[l].weights.rows());
        const double keep_scale = 1.0 / (1.0 - r);
        for (double& x : m.flat()) x = rng.uniform() < (1.0 - r) ? keep_scale : 0.0;
        masks.push_back(std::move(m));
    }
    return masks;
}

void check_labels(std::span<const int> labels) {
    for (int y : labels) require(y == 0 || y == 1, Errc::invalid_parameter, "labels must be 0 or 1");
}

// Batched forward/backward with optional pre-scaled masks.
MlpGradient loss_gradient(const MlpModel& model, const Mat& x_std, std::span<const int> labels,
                          const std::vector<Mat>* masks) {
    const std::size_t b = x_std.rows();
    const std::size_t nl = model.layers.size();
    std::vector<Mat> inputs(nl);  // masked inputs to each layer
    std::vector<Mat> pre(nl);
    std::vector<Mat> out(nl);
    Mat cur = x_std;
    for (std::size_t l = 0; l < nl; ++l) {
        if (masks && !(*masks)[l].empty())
            for (std::size_t i = 0; i < cur.size(); ++i) cur.data()[i] *= (*masks)[l].data()[i];
        inputs[l] = cur;
        pre[l] = kernels::gemm_nn(cur, model.layers[l].weights);
        kernels::add_row_bias(pre[l], model.layers[l].bias);
        out[l] = pre[l];
        for (double& v : out[l].flat()) v = activate(model.layers[l].activation, v);
        cur = out[l];
    }

    MlpGradient g;
    g.weights.resize(nl);
    g.biases.resize(nl);
    const double inv_b = 1.0 / static_cast<double>(b);
    Mat delta(b, 1);
    double loss = 0.0;
    for (std::size_t r = 0; r < b; ++r) {
        const double z = pre[nl - 1](r, 0);
        const double y = labels[r];
        loss += softplus(z) - y * z;
        delta(r, 0) = inv_b * (sigmoid(z) - y);
    }
    g.loss = loss * inv_b;

    for (std::size_t l = nl; l-- > 0;) {
        g.weights[l] = kernels::gemm_tn(inputs[l], delta);
        g.biases[l] = kernels::column_sums(delta);
        if (l == 0) break;
        Mat back = kernels::gemm_nt(delta, model.layers[l].weights);
        if (masks && !(*masks)[l].empty())
            for (std::size_t i = 0; i < back.size(); ++i) back.data()[i] *= (*masks)[l].data()[i];
        const Activation act = model.layers[l - 1].activation;
        for (std::size_t i = 0; i < back.size(); ++i)
            back.data()[i] *= activate_grad(act, pre[l - 1].data()[i], out[l - 1].data()[i]);
        delta = std::move(back);
    }
    return g;
}

}  // namespace

std::size_t MlpModel::input_size() const { return layers.empty() ? 0 : layers.front().weights.rows(); }

void MlpModel::validate() const {
    require(!layers.empty(), Errc::shape, "model has no layers");
    check_rate(dropout_input);
    check_rate(dropout_hidden);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const DenseLayer& d = layers[l];
        require(d.bias.size() == d.weights.cols(), Errc::shape, "bias length mismatch in layer " + std::to_string(l));
        require(d.weights.all_finite(), Errc::invalid_parameter, "non-finite weights in layer " + std::to_string(l));
        if (l > 0)
            require(layers[l - 1].weights.cols() == d.weights.rows(), Errc::shape,
                    "layer " + std::to_string(l) + " width mismatch");
    }
    require(layers.back().weights.cols() == 1 && layers.back().activation == Activation::sigmoid, Errc::shape,
            "final layer must be a single sigmoid unit");
    if (!input_shift.empty())
        require(input_shift.size() == input_size() && input_scale.size() == input_size(), Errc::shape,
                "input standardisation length mismatch");
}

Vec dropout_layer_forward(const DenseLayer& layer, std::span<const double> x, double rate, RngStream& stream,
                          bool train) {
    check_rate(rate);
    require(x.size() == layer.weights.rows(), Errc::shape, "layer input width mismatch");
    Vec in(x.begin(), x.end());
    if (train && rate > 0.0) {
        const double keep_scale = 1.0 / (1.0 - rate);
        for (double& v : in) v = stream.uniform() < (1.0 - rate) ? v * keep_scale : 0.0;
    }
    Vec y(layer.bias);
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (in[i] == 0.0) continue;
        const double* wrow = layer.weights.data() + i * y.size();
        for (std::size_t j = 0; j < y.size(); ++j) y[j] += in[i] * wrow[j];
    }
    for (double& v : y) v = activate(layer.activation, v);
    return y;
}

Vec dropout_forward(const MlpModel& model, std::span<const double> x, RngStream& stream, bool train) {
    model.validate();
    require(x.size() == model.input_size(), Errc::shape, "input width mismatch");
    Vec cur(x.begin(), x.end());
    if (!model.input_shift.empty())
        for (std::size_t i = 0; i < cur.size(); ++i)
            cur[i] = (cur[i] - model.input_shift[i]) * model.input_scale[i];
    for (std::size_t l = 0; l < model.layers.size(); ++l)
        cur = dropout_layer_forward(model.layers[l], cur, layer_rate(model, l), stream, train);
    return cur;
}

Vec mlp_predict(const MlpModel& model, const Mat& features) {
    model.validate();
    require(features.cols() == model.input_size(), Errc::shape, "feature width mismatch");
    Mat cur = standardized(model, features);
    for (const DenseLayer& d : model.layers) {
        Mat z = kernels::gemm_nn(cur, d.weights);
        kernels::add_row_bias(z, d.bias);
        for (double& v : z.flat()) v = activate(d.activation, v);
        cur = std::move(z);
    }
    return Vec(cur.flat().begin(), cur.flat().end());
}

double binary_cross_entropy(std::span<const double> probs, std::span<const int> labels) {
    require(probs.size() == labels.size() && !probs.empty(), Errc::shape, "cross-entropy length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = std::clamp(probs[i], 1e-15, 1.0 - 1e-15);
        s -= labels[i] ? std::log(p) : std::log1p(-p);
    }
    return s / static_cast<double>(probs.size());
}

void MlpTrainConfig::validate() const {
    require(std::isfinite(learning_rate) && learning_rate >= 0.0, Errc::invalid_parameter, "bad learning rate");
    require(batch_size >= 1, Errc::invalid_parameter, "batch_size must be >= 1");
    require(momentum >= 0.0 && momentum < 1.0, Errc::invalid_parameter, "momentum must be in [0, 1)");
    require(weight_decay >= 0.0, Errc::invalid_parameter, "weight_decay must be >= 0");
    check_rate(dropout_input);
    check_rate(dropout_hidden);
}

MlpModel init_mlp(std::span<const std::size_t> arch, const MlpTrainConfig& cfg, RngStream& rng) {
    require(arch.size() >= 2, Errc::shape, "architecture needs an input and an output width");
    require(arch.back() == 1, Errc::shape, "final layer must have one unit");
    MlpModel m;
    m.dropout_input = cfg.dropout_input;
    m.dropout_hidden = cfg.dropout_hidden;
    for (std::size_t l = 0; l + 1 < arch.size(); ++l) {
        require(arch[l] > 0 && arch[l + 1] > 0, Errc::shape, "layer widths must be positive");
        DenseLayer d;
        d.weights = Mat(arch[l], arch[l + 1]);
        d.bias.assign(arch[l + 1], 0.0);
        const bool last = l + 2 == arch.size();
        d.activation = last ? Activation::sigmoid : cfg.hidden_activation;
        // Zero output weights: an untrained head scores every input 0.5.
        const double limit = last ? 0.0 : std::sqrt(6.0 / static_cast<double>(arch[l] + arch[l + 1]));
        for (double& w : d.weights.flat()) w = (2.0 * rng.uniform() - 1.0) * limit;
        m.layers.push_back(std::move(d));
    }
    m.validate();
    return m;
}

MlpGradient mlp_loss_gradient(const MlpModel& model, const Mat& features, std::span<const int> labels,
                              const std::vector<DropoutMasks>* masks) {
    model.validate();
    require(features.rows() == labels.size() && features.rows() > 0, Errc::shape, "features/labels mismatch");
    require(features.cols() == model.input_size(), Errc::shape, "feature width mismatch");
    check_labels(labels);
    const Mat x = standardized(model, features);
    if (!masks) return loss_gradient(model, x, labels, nullptr);

    require(masks->size() == features.rows(), Errc::shape, "one mask set per row required");
    std::vector<Mat> scaled;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const double r = layer_rate(model, l);
        Mat m(features.rows(), model.layers[l].weights.rows());
        for (std::size_t n = 0; n < features.rows(); ++n) {
            const Vec& keep = (*masks)[n].at(l);
            require(keep.size() == m.cols(), Errc::shape, "mask width mismatch");
            for (std::size_t i = 0; i < keep.size(); ++i) m(n, i) = keep[i] / (1.0 - r);
        }
        scaled.push_back(std::move(m));
    }
    return loss_gradient(model, x, labels, &scaled);
}

MlpTrainResult mlp_train(const Mat& features, std::span<const int> labels, std::span<const std::size_t> arch,
                         const MlpTrainConfig& cfg) {
    cfg.validate();
    require(features.rows() == labels.size(), Errc::shape, "features and labels differ in length");
    require(features.rows() > 0, Errc::empty_input, "no training rows");
    require(!arch.empty() && arch.front() == features.cols(), Errc::shape, "arch[0] must equal the feature width");
    check_labels(labels);
    const auto positives = std::count(labels.begin(), labels.end(), 1);
    require(positives > 0 && positives < static_cast<long>(labels.size()), Errc::degenerate_labels,
            "training labels contain a single class");

    RngStream rng(cfg.seed);
    RngStream init_rng = rng.derive(1);
    MlpModel model = init_mlp(arch, cfg, init_rng);
    if (cfg.standardize_inputs) {
        const std::size_t n = features.rows();
        model.input_shift.assign(features.cols(), 0.0);
        model.input_scale.assign(features.cols(), 1.0);
        for (std::size_t c = 0; c < features.cols(); ++c) {
            double mean = 0.0;
            for (std::size_t r = 0; r < n; ++r) mean += features(r, c);
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t r = 0; r < n; ++r) var += (features(r, c) - mean) * (features(r, c) - mean);
            var /= static_cast<double>(n);
            model.input_shift[c] = mean;
            model.input_scale[c] = var > 1e-24 ? 1.0 / std::sqrt(var) : 1.0;
        }
    }
    const Mat x = standardized(model, features);

    std::vector<Mat> vel_w;
    std::vector<Vec> vel_b;
    for (const DenseLayer& d : model.layers) {
        vel_w.emplace_back(d.weights.rows(), d.weights.cols());
        vel_b.emplace_back(d.bias.size(), 0.0);
    }

    MlpTrainResult result{};
    std::vector<std::size_t> order(features.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle(order, rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t bsz = std::min(cfg.batch_size, order.size() - start);
            Mat xb(bsz, x.cols());
            std::vector<int> yb(bsz);
            for (std::size_t r = 0; r < bsz; ++r) {
                std::ranges::copy(x.row(order[start + r]), xb.row(r).begin());
                yb[r] = labels[order[start + r]];
            }
            const std::vector<Mat> masks = sample_masks(model, bsz, rng);
            const MlpGradient g = loss_gradient(model, xb, yb, &masks);
            epoch_loss += g.loss * static_cast<double>(bsz);
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                DenseLayer& d = model.layers[l];
                auto w = d.weights.flat();
                auto vw = vel_w[l].flat();
                auto gw = g.weights[l].flat();
                for (std::size_t i = 0; i < w.size(); ++i) {
                    vw[i] = cfg.momentum * vw[i] - cfg.learning_rate * (gw[i] + cfg.weight_decay * w[i]);
                    w[i] += vw[i];
                }
                for (std::size_t i = 0; i < d.bias.size(); ++i) {
                    vel_b[l][i] = cfg.momentum * vel_b[l][i] - cfg.learning_rate * g.biases[l][i];
                    d.bias[i] += vel_b[l][i];
                }
            }
        }
        epoch_loss /= static_cast<double>(order.size());
        if (!std::isfinite(epoch_loss))
            fail(Errc::divergence, "non-finite classifier loss in epoch " + std::to_string(epoch));
        result.loss_history.push_back(epoch_loss);
    }
    model.trained = true;
    result.final_loss = binary_cross_entropy(mlp_predict(model, features), labels);
    result.model = std::move(model);
    return result;
}

}  // namespace fcdbn
