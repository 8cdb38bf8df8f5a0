#include <string>

#include "fcdbn/deep_net.hpp"

namespace fcdbn {

std::vector<std::size_t> DbnStack::dims() const {
    std::vector<std::size_t> d;
    if (layers.empty()) return d;
    d.push_back(layers.front().visible_size());
    for (const RbmLayer& l : layers) d.push_back(l.hidden_size());
    return d;
}

std::size_t DbnStack::input_size() const { return layers.empty() ? 0 : layers.front().visible_size(); }

std::size_t DbnStack::output_size() const { return layers.empty() ? 0 : layers.back().hidden_size(); }

void DbnStack::validate() const {
    require(!layers.empty(), Errc::shape, "stack has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        layers[i].validate();
        if (i > 0) {
            require(layers[i - 1].hidden_size() == layers[i].visible_size(), Errc::shape,
                    "layer " + std::to_string(i) + " input width does not match the previous output");
            require(!layers[i].filtered() && layers[i].unit_kind == UnitKind::bernoulli, Errc::invalid_parameter,
                    "only the first layer may be filtered or gaussian");
        }
    }
}

DbnStack greedy_pretrain(std::span<const std::size_t> dims, const Mat& data, const TrainConfig& cfg,
                         const FcOptions& fc) {
    require(dims.size() >= 2, Errc::shape, "need at least an input and one hidden width");
    require(dims[0] == data.cols(), Errc::shape,
            "dims[0] = " + std::to_string(dims[0]) + " but data width is " + std::to_string(data.cols()));
    require(data.rows() > 0, Errc::empty_input, "no pretraining data");
    cfg.validate();

    DbnStack stack;
    Mat input = data;
    const RngStream root(cfg.seed);
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        LayerInit init;
        init.visible = dims[i];
        init.hidden = dims[i + 1];
        init.alpha = fc.alpha;
        init.weight_std = fc.weight_std;
        if (i == 0) {
            init.units = fc.first_layer_units;
            init.filters = fc.filters;
            init.filter_size = fc.filter_size;
            init.image_rows = fc.image_rows;
            init.image_cols = fc.image_cols;
            init.beta = fc.beta;
            init.filter_noise = fc.filter_noise;
        }
        RngStream init_rng = root.derive(i);
        TrainConfig layer_cfg = cfg;
        layer_cfg.seed = cfg.seed + i;
        try {
            TrainResult trained = cd_train(make_layer(init, init_rng), input, layer_cfg);
            stack.layers.push_back(std::move(trained.layer));
        } catch (const Error& e) {
            throw Error(e.code(), "layer " + std::to_string(i) + ": " + e.what());
        }
        if (i + 2 < dims.size()) {
            const RbmLayer& l = stack.layers.back();
            input = hidden_probs(aggregate_visible(input, l), l);
        }
    }
    return stack;
}

Vec encode(const DbnStack& stack, std::span<const double> v) {
    require(!stack.layers.empty(), Errc::shape, "empty stack");
    require(v.size() == stack.input_size(), Errc::shape,
            "input width " + std::to_string(v.size()) + " != " + std::to_string(stack.input_size()));
    Vec x(v.begin(), v.end());
    for (const RbmLayer& l : stack.layers) {
        if (l.filtered()) x = apply_filters(Mat(l.image_rows, l.image_cols, x), l);
        x = hidden_given_visible(x, l);
    }
    return x;
}

Mat encode_batch(const DbnStack& stack, const Mat& batch) {
    require(!stack.layers.empty(), Errc::shape, "empty stack");
    require(batch.cols() == stack.input_size(), Errc::shape, "batch width does not match the stack input");
    Mat x = batch;
    for (const RbmLayer& l : stack.layers) x = hidden_probs(aggregate_visible(x, l), l);
    return x;
}

}  // namespace fcdbn
