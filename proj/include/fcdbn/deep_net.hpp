#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fcdbn/numeric.hpp"
#include "fcdbn/rbm.hpp"

namespace fcdbn {

// -- deep belief network ------------------------------------------------------

struct DbnStack {
    std::vector<RbmLayer> layers;

    /// dims[0] is the input width, dims[i] the hidden width of layer i.
    std::vector<std::size_t> dims() const;
    std::size_t input_size() const;
    std::size_t output_size() const;
    /// Adjacent widths agree; only the first layer is gaussian or filtered.
    void validate() const;
};

/// Per-stack regularisation and first-layer options.
struct FcOptions {
    std::size_t filters = 0;      // K on the first layer; 0 disables filtering
    std::size_t filter_size = 3;
    std::size_t image_rows = 0;   // first-layer image layout when filtered
    std::size_t image_cols = 0;
    double alpha = 0.0;           // contractive weight on every layer
    double beta = 0.0;            // filter decay on the first layer
    UnitKind first_layer_units = UnitKind::bernoulli;
    double weight_std = 0.01;
    double filter_noise = 0.01;
};

/// Greedy layer-wise CD training; layer i is trained on the hidden
/// probabilities of layer i-1. Layer i uses seed cfg.seed + i.
DbnStack greedy_pretrain(std::span<const std::size_t> dims, const Mat& data, const TrainConfig& cfg,
                         const FcOptions& fc);

/// Deterministic mean-field pass through every layer.
Vec encode(const DbnStack& stack, std::span<const double> v);
Mat encode_batch(const DbnStack& stack, const Mat& batch);

// -- feed-forward classifier ----------------------------------------------------

enum class Activation { sigmoid, relu, linear };

struct DenseLayer {
    Mat weights;  // in x out
    Vec bias;
    Activation activation = Activation::sigmoid;
};

/// Feed-forward net with inverted dropout: rate `dropout_input` on the input
/// vector and `dropout_hidden` on every hidden activation.
struct MlpModel {
    std::vector<DenseLayer> layers;
    double dropout_input = 0.0;
    double dropout_hidden = 0.0;
    Vec input_shift;  // x -> (x - shift) * scale before the first layer
    Vec input_scale;
    bool trained = false;

    std::size_t input_size() const;
    void validate() const;
};

/// Fixed Bernoulli(1 - r) keep-masks for one forward pass, one per layer input.
using DropoutMasks = std::vector<Vec>;

/// One layer of the dropout forward pass:
///   train: y = f((1/(1-r)) (x .* m) W + b),  m ~ Bernoulli(1 - r)
///   eval:  y = f(x W + b)
/// Throws degenerate_rate for r outside [0, 1).
Vec dropout_layer_forward(const DenseLayer& layer, std::span<const double> x, double rate, RngStream& stream,
                          bool train);

/// Whole-network pass; output is the final sigmoid unit(s).
Vec dropout_forward(const MlpModel& model, std::span<const double> x, RngStream& stream, bool train);
/// Eval-mode batch prediction (probability of the positive class per row).
Vec mlp_predict(const MlpModel& model, const Mat& features);

struct MlpTrainConfig {
    double learning_rate = 0.01;
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    double momentum = 0.9;
    double weight_decay = 0.0;
    double dropout_input = 0.2;
    double dropout_hidden = 0.5;
    Activation hidden_activation = Activation::relu;
    bool standardize_inputs = true;
    std::uint64_t seed = 0;

    void validate() const;
};

struct MlpTrainResult {
    MlpModel model;
    Vec loss_history;   // mean training cross-entropy per epoch (dropout active)
    double final_loss;  // eval-mode cross-entropy on the training set
};

/// Random hidden layers and a zero output layer for arch {in, h1, ..., 1}.
MlpModel init_mlp(std::span<const std::size_t> arch, const MlpTrainConfig& cfg, RngStream& rng);

/// Mini-batch SGD with momentum on binary cross-entropy.
MlpTrainResult mlp_train(const Mat& features, std::span<const int> labels, std::span<const std::size_t> arch,
                         const MlpTrainConfig& cfg);

struct MlpGradient {
    double loss = 0.0;
    std::vector<Mat> weights;
    std::vector<Vec> biases;
};

/// Mean cross-entropy over the rows and its exact gradient. When `masks` is
/// given (one mask set per row) the dropout pass uses them; otherwise eval mode.
MlpGradient mlp_loss_gradient(const MlpModel& model, const Mat& features, std::span<const int> labels,
                              const std::vector<DropoutMasks>* masks = nullptr);

double binary_cross_entropy(std::span<const double> probs, std::span<const int> labels);

}  // namespace fcdbn
