#include <cmath>

#include "fcdbn/kernels.hpp"
#include "fcdbn/rbm.hpp"

namespace fcdbn {

namespace {

// Rows of V divided by sigma when the visible units are gaussian.
Mat scaled_visible(const Mat& visible, const RbmLayer& layer) {
    if (layer.unit_kind != UnitKind::gaussian) return visible;
    Mat s = visible;
    for (std::size_t r = 0; r < s.rows(); ++r) {
        auto row = s.row(r);
        for (std::size_t i = 0; i < row.size(); ++i) row[i] /= layer.sigma[i];
    }
    return s;
}

Mat hidden_preactivation(const Mat& scaled, const RbmLayer& layer) {
    Mat z = kernels::gemm_nn(scaled, layer.weights);
    kernels::add_row_bias(z, layer.hidden_bias);
    return z;
}

double inv_sigma_sq(const RbmLayer& layer, std::size_t i) {
    if (layer.unit_kind != UnitKind::gaussian) return 1.0;
    return 1.0 / (layer.sigma[i] * layer.sigma[i]);
}

}  // namespace

ContractivePenalty contractive_penalty(const RbmLayer& layer, const Mat& visible, PenaltyActivation activation) {
    require(visible.rows() > 0, Errc::empty_batch, "contractive penalty needs at least one row");
    require(visible.cols() == layer.visible_size(), Errc::shape, "batch width does not match visible size");
    const std::size_t b = visible.rows();
    const std::size_t d = layer.visible_size();
    const std::size_t f = layer.hidden_size();

    // Column norms of the Jacobian factor: c_j = sum_i W_ij^2 / sigma_i^2.
    Vec col(f, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        const double w = inv_sigma_sq(layer, i);
        for (std::size_t j = 0; j < f; ++j) col[j] += layer.weights(i, j) * layer.weights(i, j) * w;
    }

    ContractivePenalty out;
    out.per_row.assign(b, 0.0);
    out.grad_hidden_bias.assign(f, 0.0);
    out.grad_visible = Mat(b, d);

    if (activation == PenaltyActivation::linear) {
        double total = 0.0;
        for (double c : col) total += c;
        out.per_row.assign(b, total);
        out.value = total;
        out.grad_weights = Mat(d, f);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < f; ++j)
                out.grad_weights(i, j) = 2.0 * layer.weights(i, j) * inv_sigma_sq(layer, i);
        return out;
    }

    Mat h = hidden_preactivation(scaled_visible(visible, layer), layer);
    sigmoid_inplace(h.flat());
    return contractive_penalty(layer, visible, h);
}

ContractiveFactors contractive_factors(const RbmLayer& layer, const Mat& h) {
    require(h.rows() > 0, Errc::empty_batch, "contractive penalty needs at least one row");
    require(h.cols() == layer.hidden_size(), Errc::shape, "hidden batch width mismatch");
    const std::size_t b = h.rows();
    const std::size_t d = layer.visible_size();
    const std::size_t f = layer.hidden_size();
    Vec col(f, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        const double w = inv_sigma_sq(layer, i);
        for (std::size_t j = 0; j < f; ++j) col[j] += layer.weights(i, j) * layer.weights(i, j) * w;
    }
    ContractiveFactors out;
    out.per_row.assign(b, 0.0);
    out.grad_preactivation = Mat(b, f);
    out.saturation_mean.assign(f, 0.0);
    const double inv_b = 1.0 / static_cast<double>(b);
    for (std::size_t n = 0; n < b; ++n) {
        double row_total = 0.0;
        for (std::size_t j = 0; j < f; ++j) {
            const double hj = h(n, j);
            const double s = hj * (1.0 - hj);
            const double s2 = s * s;
            row_total += s2 * col[j];
            out.saturation_mean[j] += s2 * inv_b;
            out.grad_preactivation(n, j) = inv_b * 2.0 * s2 * (1.0 - 2.0 * hj) * col[j];
        }
        out.per_row[n] = row_total;
    }
    double total = 0.0;
    for (double v : out.per_row) total += v;
    out.value = total * inv_b;
    return out;
}

ContractivePenalty contractive_penalty(const RbmLayer& layer, const Mat& visible, const Mat& h) {
    require(visible.rows() > 0, Errc::empty_batch, "contractive penalty needs at least one row");
    require(visible.cols() == layer.visible_size(), Errc::shape, "batch width does not match visible size");
    require(h.rows() == visible.rows() && h.cols() == layer.hidden_size(), Errc::shape,
            "hidden probabilities do not match the batch");
    const std::size_t b = visible.rows();
    const std::size_t d = layer.visible_size();
    const std::size_t f = layer.hidden_size();
    ContractiveFactors fac = contractive_factors(layer, h);
    const Mat& g = fac.grad_preactivation;

    ContractivePenalty out;
    out.value = fac.value;
    out.per_row = std::move(fac.per_row);
    out.grad_hidden_bias = kernels::column_sums(g);
    out.grad_weights = kernels::gemm_tn(scaled_visible(visible, layer), g);
    for (std::size_t i = 0; i < d; ++i) {
        const double w = 2.0 * inv_sigma_sq(layer, i);
        for (std::size_t j = 0; j < f; ++j) out.grad_weights(i, j) += w * layer.weights(i, j) * fac.saturation_mean[j];
    }
    out.grad_visible = kernels::gemm_nt(g, layer.weights);
    if (layer.unit_kind == UnitKind::gaussian) {
        for (std::size_t n = 0; n < b; ++n) {
            auto row = out.grad_visible.row(n);
            for (std::size_t i = 0; i < d; ++i) row[i] /= layer.sigma[i];
        }
    }
    return out;
}

double filter_decay(const RbmLayer& layer) noexcept {
    double s = 0.0;
    for (const Mat& k : layer.filters) s += sum_squares(k.flat());
    return s;
}

FcLossTerms fc_loss_terms(const RbmLayer& layer, const Mat& batch) {
    require(batch.rows() > 0, Errc::empty_batch, "fc_loss needs at least one row");
    const Mat v = aggregate_visible(batch, layer);
    const Mat recon = visible_means(hidden_probs(v, layer), layer);
    FcLossTerms t;
    double se = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double e = recon.data()[i] - v.data()[i];
        se += e * e;
    }
    t.reconstruction = se / static_cast<double>(v.size());
    if (layer.alpha > 0.0) t.contractive = layer.alpha * contractive_penalty(layer, v).value;
    if (layer.beta > 0.0) t.filter_decay = layer.beta * filter_decay(layer);
    t.total = t.reconstruction + t.contractive + t.filter_decay;
    return t;
}

double fc_loss(const RbmLayer& layer, const Mat& batch) { return fc_loss_terms(layer, batch).total; }

ObjectiveValue fc_objective(const RbmLayer& layer, const Mat& batch) {
    require(batch.rows() > 0, Errc::empty_batch, "objective needs at least one row");
    const std::size_t b = batch.rows();
    const std::size_t d = layer.visible_size();
    const std::size_t f = layer.hidden_size();
    const double inv_b = 1.0 / static_cast<double>(b);
    const bool gaussian = layer.unit_kind == UnitKind::gaussian;

    const Mat v = aggregate_visible(batch, layer);
    const Mat scaled = scaled_visible(v, layer);
    const Mat z = hidden_preactivation(scaled, layer);
    const Mat p = sigmoid(z);

    ObjectiveValue out;
    double fe = 0.0;
    for (std::size_t n = 0; n < b; ++n) {
        for (std::size_t i = 0; i < d; ++i) {
            if (gaussian) {
                const double dv = v(n, i) - layer.visible_bias[i];
                fe += dv * dv * 0.5 * inv_sigma_sq(layer, i);
            } else {
                fe -= layer.visible_bias[i] * v(n, i);
            }
        }
        for (std::size_t j = 0; j < f; ++j) fe -= softplus(z(n, j));
    }
    out.value = fe * inv_b;

    LayerGradient& g = out.grad;
    g.weights = kernels::gemm_tn(scaled, p);
    for (double& x : g.weights.flat()) x *= -inv_b;
    g.hidden_bias = kernels::column_sums(p);
    for (double& x : g.hidden_bias) x *= -inv_b;
    g.visible_bias.assign(d, 0.0);
    for (std::size_t n = 0; n < b; ++n)
        for (std::size_t i = 0; i < d; ++i)
            g.visible_bias[i] -= inv_b * (gaussian ? (v(n, i) - layer.visible_bias[i]) * inv_sigma_sq(layer, i)
                                                   : v(n, i));

    // d(mean F)/dV, needed only for the filters.
    Mat grad_v;
    if (layer.filtered()) {
        grad_v = kernels::gemm_nt(p, layer.weights);
        for (std::size_t n = 0; n < b; ++n) {
            auto row = grad_v.row(n);
            for (std::size_t i = 0; i < d; ++i) {
                if (gaussian)
                    row[i] = inv_b * ((v(n, i) - layer.visible_bias[i]) * inv_sigma_sq(layer, i) -
                                      row[i] / layer.sigma[i]);
                else
                    row[i] = -inv_b * (layer.visible_bias[i] + row[i]);
            }
        }
    }

    if (layer.alpha > 0.0) {
        const ContractivePenalty pen = contractive_penalty(layer, v);
        out.value += layer.alpha * pen.value;
        kernels::axpy(layer.alpha, pen.grad_weights.flat(), g.weights.flat());
        kernels::axpy(layer.alpha, pen.grad_hidden_bias, g.hidden_bias);
        if (layer.filtered()) kernels::axpy(layer.alpha, pen.grad_visible.flat(), grad_v.flat());
    }

    if (layer.filtered()) {
        out.value += layer.beta * filter_decay(layer);
        const Mat shared = filter_gradient(layer, batch, grad_v);
        for (const Mat& k : layer.filters) {
            Mat gk = shared;
            kernels::axpy(2.0 * layer.beta, k.flat(), gk.flat());
            g.filters.push_back(std::move(gk));
        }
    }
    return out;
}

}  // namespace fcdbn
