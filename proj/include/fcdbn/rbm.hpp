#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fcdbn/numeric.hpp"

namespace fcdbn {

enum class UnitKind { bernoulli, gaussian };

/// One (filtered, contractive) RBM layer.
///
/// Weights are D x F (visible x hidden). When `filters` is non-empty the layer
/// sees the visible vector as an image_rows x image_cols image and works on the
/// aggregated response sum_k conv2d_same(v, f_k); energies and conditionals then
/// take that aggregated vector as their visible input.
struct RbmLayer {
    Mat weights;
    Vec hidden_bias;
    Vec visible_bias;
    Vec sigma;  // visible noise scales; all ones for bernoulli units
    std::vector<Mat> filters;
    std::size_t image_rows = 0;
    std::size_t image_cols = 0;
    double alpha = 0.0;  // contractive weight
    double beta = 0.0;   // filter decay weight
    UnitKind unit_kind = UnitKind::bernoulli;

    std::size_t visible_size() const noexcept { return weights.rows(); }
    std::size_t hidden_size() const noexcept { return weights.cols(); }
    bool filtered() const noexcept { return !filters.empty(); }

    /// Throws on inconsistent dimensions or non-finite / invalid parameters.
    void validate() const;
};

struct LayerInit {
    std::size_t visible = 0;
    std::size_t hidden = 0;
    UnitKind units = UnitKind::bernoulli;
    std::size_t filters = 0;
    std::size_t filter_size = 3;
    std::size_t image_rows = 0;
    std::size_t image_cols = 0;
    double alpha = 0.0;
    double beta = 0.0;
    double weight_std = 0.01;
    double filter_noise = 0.01;
};

/// Gaussian weights, zero biases, unit sigma. Filters start at identity/K plus
/// Gaussian noise so the aggregate initially reproduces the input.
RbmLayer make_layer(const LayerInit& init, RngStream& rng);
/// All-zero parameters (sigma = 1), no filters.
RbmLayer zero_layer(std::size_t visible, std::size_t hidden, UnitKind units = UnitKind::bernoulli);

// -- energies ---------------------------------------------------------------

double energy_bernoulli(std::span<const double> v, std::span<const double> h, const RbmLayer& layer);
/// Uses +sum (v_i - b_i)^2 / (2 sigma_i^2), the bounded Gaussian-Bernoulli form.
double energy_gaussian(std::span<const double> v, std::span<const double> h, const RbmLayer& layer);
/// -log sum_h exp(-E(v, h)) for either unit kind.
double free_energy(std::span<const double> v, const RbmLayer& layer);

// -- conditionals -------------------------------------------------------------

Vec hidden_given_visible(std::span<const double> v, const RbmLayer& layer);
/// Batched p(h = 1 | v) for rows of already-aggregated visibles.
Mat hidden_probs(const Mat& visible, const RbmLayer& layer);

struct VisibleConditional {
    Vec mean;    // p(v_i = 1 | h) for bernoulli units
    Vec stddev;  // sigma for gaussian units; empty for bernoulli
};
VisibleConditional visible_given_hidden(std::span<const double> h, const RbmLayer& layer);
/// Batched conditional means of the visible units.
Mat visible_means(const Mat& hidden, const RbmLayer& layer);

// -- filtering ----------------------------------------------------------------

/// Flattened sum_k conv2d_same(image, f_k). Throws not_filtered_layer for K = 0.
Vec apply_filters(const Mat& image, const RbmLayer& layer);
/// The individual responses V_k.
std::vector<Mat> filter_responses(const Mat& image, const RbmLayer& layer);
/// Rows of raw visibles to rows of aggregated visibles (a copy when unfiltered).
Mat aggregate_visible(const Mat& batch, const RbmLayer& layer);
/// Least-squares inverse of aggregate_visible: rows x with sum_k f_k * x
/// closest to the given aggregated rows, by conjugate gradients on the normal
/// equations. Throws not_filtered_layer for K = 0.
Mat unfilter(const Mat& aggregated, const RbmLayer& layer);
/// sum_n d/dk <grad_n, conv2d_same(image_n, k)>: the derivative of a loss with
/// visible-gradient rows `grad_visible` with respect to any one filter.
Mat filter_gradient(const RbmLayer& layer, const Mat& raw_batch, const Mat& grad_visible);

// -- regularisers and objectives ----------------------------------------------

enum class PenaltyActivation { sigmoid, linear };

struct ContractivePenalty {
    double value = 0.0;   // batch mean of ||J||_F^2
    Vec per_row;          // ||J||_F^2 per batch row
    Mat grad_weights;     // d value / d W
    Vec grad_hidden_bias; // d value / d a
    Mat grad_visible;     // d value / d V, one row per batch row
};

/// Frobenius norm of the hidden-activation Jacobian, averaged over the rows of
/// `visible` (aggregated visibles). With the linear activation the Jacobian is
/// W itself and the value is the plain weight-decay sum.
ContractivePenalty contractive_penalty(const RbmLayer& layer, const Mat& visible,
                                       PenaltyActivation activation = PenaltyActivation::sigmoid);
/// Sigmoid case with the hidden probabilities of `visible` already computed.
ContractivePenalty contractive_penalty(const RbmLayer& layer, const Mat& visible, const Mat& hidden);

/// The parts of the sigmoid penalty that do not involve the visibles.
struct ContractiveFactors {
    double value = 0.0;
    Vec per_row;
    Mat grad_preactivation;  // d value / d z, one row per batch row
    Vec saturation_mean;     // batch mean of (h (1 - h))^2 per hidden unit
};
ContractiveFactors contractive_factors(const RbmLayer& layer, const Mat& hidden);

double filter_decay(const RbmLayer& layer) noexcept;

struct FcLossTerms {
    double reconstruction = 0.0;  // mean squared one-step mean-field reconstruction error
    double contractive = 0.0;     // alpha * penalty
    double filter_decay = 0.0;    // beta * sum_k ||f_k||^2
    double total = 0.0;
};

/// Monitoring loss; `batch` holds raw visibles (images when filtered).
FcLossTerms fc_loss_terms(const RbmLayer& layer, const Mat& batch);
double fc_loss(const RbmLayer& layer, const Mat& batch);

struct LayerGradient {
    Mat weights;
    Vec hidden_bias;
    Vec visible_bias;
    std::vector<Mat> filters;
};

struct ObjectiveValue {
    double value = 0.0;
    LayerGradient grad;
};

/// The differentiable part of the fcRBM training objective:
///   mean_n F(V_n) + alpha * penalty(V) + beta * sum_k ||f_k||^2
/// where F is the free energy (the data term of -log P(v) up to log Z) and
/// V_n the aggregated visibles. Returns the value and its exact gradient.
ObjectiveValue fc_objective(const RbmLayer& layer, const Mat& batch);

// -- training -----------------------------------------------------------------

struct TrainConfig {
    double learning_rate = 0.05;
    std::size_t epochs = 10;
    std::size_t batch_size = 64;
    std::size_t cd_steps = 1;
    double momentum = 0.5;
    std::uint64_t seed = 0;
    /// Multiplier on the learning rate for filter taps; each tap is shared by
    /// every pixel, so the default is 1 / D.
    std::optional<double> filter_lr_scale;

    void validate() const;
};

struct TrainResult {
    RbmLayer layer;
    Vec loss_history;            // per-epoch fc loss (reconstruction + regularisers)
    Vec reconstruction_history;  // per-epoch mean squared reconstruction error
};

/// CD-k training. W, a, b follow the CD-k gradient plus the analytic
/// contractive-penalty gradient; filters follow the chain rule of the CD visible
/// gradient through the convolution plus the penalty and decay gradients.
/// Deterministic in cfg.seed. Throws divergence naming the epoch on NaN/Inf.
TrainResult cd_train(RbmLayer layer, const Mat& data, const TrainConfig& cfg);

}  // namespace fcdbn
