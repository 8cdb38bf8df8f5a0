#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fcdbn/kernels.hpp"
#include "fcdbn/rbm.hpp"

namespace fcdbn {

void TrainConfig::validate() const {
    require(std::isfinite(learning_rate) && learning_rate >= 0.0, Errc::invalid_parameter,
            "learning_rate must be finite and >= 0");
    require(epochs >= 1, Errc::invalid_parameter, "epochs must be >= 1");
    require(batch_size >= 1, Errc::invalid_parameter, "batch_size must be >= 1");
    require(cd_steps >= 1, Errc::invalid_parameter, "cd_steps must be >= 1");
    require(std::isfinite(momentum) && momentum >= 0.0 && momentum < 1.0, Errc::invalid_parameter,
            "momentum must be in [0, 1)");
    if (filter_lr_scale)
        require(std::isfinite(*filter_lr_scale) && *filter_lr_scale >= 0.0, Errc::invalid_parameter,
                "filter_lr_scale must be finite and >= 0");
}

namespace {

struct Velocity {
    Mat weights;
    Vec hidden_bias;
    Vec visible_bias;
    std::vector<Mat> filters;
};

void sample_bernoulli(Mat& probs_to_states, RngStream& rng) {
    for (double& x : probs_to_states.flat()) x = rng.uniform() < x ? 1.0 : 0.0;
}

bool layer_finite(const RbmLayer& layer) {
    auto ok = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    if (!ok(layer.weights.flat()) || !ok(layer.hidden_bias) || !ok(layer.visible_bias)) return false;
    for (const Mat& k : layer.filters)
        if (!ok(k.flat())) return false;
    return true;
}

// v <- momentum * v + lr * g ; p += v
void step(std::span<double> param, std::span<double> vel, std::span<const double> ascent, double momentum,
          double lr) {
    for (std::size_t i = 0; i < param.size(); ++i) {
        vel[i] = momentum * vel[i] + lr * ascent[i];
        param[i] += vel[i];
    }
}

// -dF/dV at aggregated visibles v with hidden probabilities p.
Mat neg_free_energy_grad(const Mat& v, const Mat& p, const RbmLayer& layer) {
    Mat g = kernels::gemm_nt(p, layer.weights);
    for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t i = 0; i < g.cols(); ++i) {
            if (layer.unit_kind == UnitKind::gaussian) {
                const double s = layer.sigma[i];
                g(r, i) = g(r, i) / s - (v(r, i) - layer.visible_bias[i]) / (s * s);
            } else {
                g(r, i) += layer.visible_bias[i];
            }
        }
    return g;
}

// Conditional mean of visible unit i from its weighted hidden input x = (h W^T)_i.
double visible_mean(double x, std::size_t i, const RbmLayer& layer) {
    if (layer.unit_kind == UnitKind::gaussian) return layer.visible_bias[i] + layer.sigma[i] * x;
    return sigmoid(x + layer.visible_bias[i]);
}

}  // namespace

TrainResult cd_train(RbmLayer layer, const Mat& data, const TrainConfig& cfg) {
    cfg.validate();
    layer.validate();
    require(data.rows() > 0, Errc::empty_batch, "training data is empty");
    require(data.cols() == layer.visible_size(), Errc::shape,
            "data width " + std::to_string(data.cols()) + " != visible size " +
                std::to_string(layer.visible_size()));

    const std::size_t n = data.rows();
    const std::size_t d = layer.visible_size();
    const std::size_t f = layer.hidden_size();
    const bool gaussian = layer.unit_kind == UnitKind::gaussian;
    const double filter_scale = cfg.filter_lr_scale.value_or(1.0 / static_cast<double>(d));

    Velocity vel{Mat(d, f), Vec(f, 0.0), Vec(d, 0.0), {}};
    for (const Mat& k : layer.filters) vel.filters.emplace_back(k.rows(), k.cols());

    RngStream rng(cfg.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    Vec recon_per_row(n, 0.0);
    Vec penalty_per_row(n, 0.0);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle(order, rng);
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t bsz = std::min(cfg.batch_size, n - start);
            const double inv_b = 1.0 / static_cast<double>(bsz);
            Mat raw(bsz, d);
            for (std::size_t r = 0; r < bsz; ++r) std::ranges::copy(data.row(order[start + r]), raw.row(r).begin());

            const Mat v0 = aggregate_visible(raw, layer);
            const Mat p0 = hidden_probs(v0, layer);
            Mat h = p0;
            sample_bernoulli(h, rng);

            const bool contractive = layer.alpha > 0.0;
            ContractiveFactors pen;
            if (contractive) {
                pen = contractive_factors(layer, p0);
                for (std::size_t r = 0; r < bsz; ++r) penalty_per_row[order[start + r]] = pen.per_row[r];
            }

            // One pass over W for [p0; h; dpen/dz] W^T.
            const std::size_t blocks = contractive && layer.filtered() ? 3 : 2;
            Mat lhs(blocks * bsz, f);
            for (std::size_t r = 0; r < bsz; ++r) {
                std::ranges::copy(p0.row(r), lhs.row(r).begin());
                std::ranges::copy(h.row(r), lhs.row(bsz + r).begin());
                if (blocks == 3) std::ranges::copy(pen.grad_preactivation.row(r), lhs.row(2 * bsz + r).begin());
            }
            const Mat prod = kernels::gemm_nt(lhs, layer.weights);

            // Monitor: mean-field one-step reconstruction at the pre-update parameters.
            for (std::size_t r = 0; r < bsz; ++r) {
                double se = 0.0;
                for (std::size_t i = 0; i < d; ++i) {
                    const double e = visible_mean(prod(r, i), i, layer) - v0(r, i);
                    se += e * e;
                }
                recon_per_row[order[start + r]] = se / static_cast<double>(d);
            }

            // CD-k chain: hidden states sampled, visible units at their conditional means.
            Mat vk(bsz, d);
            for (std::size_t r = 0; r < bsz; ++r)
                for (std::size_t i = 0; i < d; ++i) vk(r, i) = visible_mean(prod(bsz + r, i), i, layer);
            Mat pk = hidden_probs(vk, layer);
            for (std::size_t k = 1; k < cfg.cd_steps; ++k) {
                h = pk;
                sample_bernoulli(h, rng);
                vk = visible_means(h, layer);
                pk = hidden_probs(vk, layer);
            }

            // Ascent directions (negative gradient of the CD objective). Both
            // phases and the penalty in one product: [s0; sk]^T [p0 - alpha g; -pk].
            Mat stacked_v(2 * bsz, d);
            Mat stacked_h(2 * bsz, f);
            for (std::size_t r = 0; r < bsz; ++r) {
                for (std::size_t i = 0; i < d; ++i) {
                    const double scale = gaussian ? 1.0 / layer.sigma[i] : 1.0;
                    stacked_v(r, i) = v0(r, i) * scale;
                    stacked_v(bsz + r, i) = vk(r, i) * scale;
                }
                for (std::size_t j = 0; j < f; ++j) {
                    stacked_h(r, j) = p0(r, j) * inv_b;
                    if (contractive) stacked_h(r, j) -= layer.alpha * pen.grad_preactivation(r, j);
                    stacked_h(bsz + r, j) = -pk(r, j) * inv_b;
                }
            }
            Mat grad_w = kernels::gemm_tn(stacked_v, stacked_h);
            Vec grad_a(f, 0.0);
            Vec grad_b(d, 0.0);
            for (std::size_t r = 0; r < bsz; ++r) {
                for (std::size_t j = 0; j < f; ++j) grad_a[j] += inv_b * (p0(r, j) - pk(r, j));
                for (std::size_t i = 0; i < d; ++i) {
                    const double diff = v0(r, i) - vk(r, i);
                    grad_b[i] += inv_b * (gaussian ? diff / (layer.sigma[i] * layer.sigma[i]) : diff);
                }
            }
            if (contractive) {
                kernels::axpy(-layer.alpha, kernels::column_sums(pen.grad_preactivation), grad_a);
                for (std::size_t i = 0; i < d; ++i) {
                    const double w = -2.0 * layer.alpha * (gaussian ? 1.0 / (layer.sigma[i] * layer.sigma[i]) : 1.0);
                    for (std::size_t j = 0; j < f; ++j) grad_w(i, j) += w * layer.weights(i, j) * pen.saturation_mean[j];
                }
            }

            // Filters: the data term is chained through the raw batch and the
            // reconstruction term through the raw image that the filters map
            // onto the reconstruction.
            std::vector<Mat> grad_f;
            if (layer.filtered()) {
                Mat ascent_data(bsz, d);
                for (std::size_t r = 0; r < bsz; ++r)
                    for (std::size_t i = 0; i < d; ++i) {
                        const double s = gaussian ? layer.sigma[i] : 1.0;
                        double g = gaussian ? prod(r, i) / s - (v0(r, i) - layer.visible_bias[i]) / (s * s)
                                            : prod(r, i) + layer.visible_bias[i];
                        g *= inv_b;
                        if (blocks == 3) g -= layer.alpha * prod(2 * bsz + r, i) / s;
                        ascent_data(r, i) = g;
                    }
                Mat ascent_recon = neg_free_energy_grad(vk, pk, layer);
                for (double& x : ascent_recon.flat()) x *= inv_b;

                Mat shared = filter_gradient(layer, raw, ascent_data);
                const Mat recon_raw = unfilter(vk, layer);
                kernels::axpy(-1.0, filter_gradient(layer, recon_raw, ascent_recon).flat(), shared.flat());
                for (const Mat& k : layer.filters) {
                    Mat g = shared;
                    kernels::axpy(-2.0 * layer.beta, k.flat(), g.flat());
                    grad_f.push_back(std::move(g));
                }
            }

            const double lr = cfg.learning_rate;
            step(layer.weights.flat(), vel.weights.flat(), grad_w.flat(), cfg.momentum, lr);
            step(layer.hidden_bias, vel.hidden_bias, grad_a, cfg.momentum, lr);
            step(layer.visible_bias, vel.visible_bias, grad_b, cfg.momentum, lr);
            for (std::size_t k = 0; k < grad_f.size(); ++k)
                step(layer.filters[k].flat(), vel.filters[k].flat(), grad_f[k].flat(), cfg.momentum,
                     lr * filter_scale);
        }

        if (!layer_finite(layer))
            fail(Errc::divergence, "non-finite parameters after epoch " + std::to_string(epoch));

        double recon = 0.0;
        double pen = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            recon += recon_per_row[r];
            pen += penalty_per_row[r];
        }
        recon /= static_cast<double>(n);
        pen /= static_cast<double>(n);
        if (!std::isfinite(recon))
            fail(Errc::divergence, "non-finite reconstruction error in epoch " + std::to_string(epoch));
        result.reconstruction_history.push_back(recon);
        result.loss_history.push_back(recon + layer.alpha * pen + layer.beta * filter_decay(layer));
    }
    result.layer = std::move(layer);
    return result;
}

}  // namespace fcdbn
