#include <algorithm>
#include <cmath>
#include <string>

#include "fcdbn/fusion.hpp"

namespace fcdbn {

void SvmConfig::validate() const {
    require(std::isfinite(lambda) && lambda > 0.0, Errc::config, "svm lambda must be > 0");
    require(std::isfinite(learning_rate) && learning_rate > 0.0, Errc::config, "svm learning rate must be > 0");
    require(iterations >= 1, Errc::config, "svm iterations must be >= 1");
}

Vec svm_features(const ScoreRecord& rec, std::size_t width) {
    switch (width) {
        case 1: return {rec.s};
        case 2:
            require(rec.k.size() == 1, Errc::shape, "two-feature layout needs exactly one kin score");
            return {rec.s, rec.k[0]};
        case 3: {
            require(!rec.k.empty(), Errc::shape, "record has no kin scores");
            double sum = 0.0;
            double mx = rec.k[0];
            for (double k : rec.k) {
                sum += k;
                mx = std::max(mx, k);
            }
            return {rec.s, sum / static_cast<double>(rec.k.size()), mx};
        }
        default: fail(Errc::shape, "feature width must be 1, 2 or 3");
    }
}

namespace {

double raw_decision(const SvmModel& m, std::span<const double> x) {
    double d = m.bias;
    for (std::size_t j = 0; j < x.size(); ++j) d += m.weights[j] * (x[j] - m.shift[j]) * m.scale[j];
    return d;
}

}  // namespace

SvmModel svm_fit(std::span<const ScoreRecord> records, const SvmConfig& cfg) {
    cfg.validate();
    require(!records.empty(), Errc::insufficient_data, "no score records");
    std::size_t max_k = 0;
    std::size_t positives = 0;
    for (const ScoreRecord& r : records) {
        r.validate();
        max_k = std::max(max_k, r.k.size());
        positives += static_cast<std::size_t>(r.genuine);
    }
    const std::size_t n = records.size();
    require(positives > 0 && positives < n, Errc::degenerate_labels, "svm training needs both classes");

    SvmModel m;
    m.feature_width = max_k == 0 ? 1 : (max_k == 1 ? 2 : 3);
    const std::size_t w = m.feature_width;
    Mat x(n, w);
    Vec y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec f = svm_features(records[i], w);
        std::ranges::copy(f, x.row(i).begin());
        y[i] = records[i].genuine ? 1.0 : -1.0;
    }

    m.shift.assign(w, 0.0);
    m.scale.assign(w, 1.0);
    bool any_varying = false;
    for (std::size_t j = 0; j < w; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) var += (x(i, j) - mean) * (x(i, j) - mean);
        const double sd = std::sqrt(var / static_cast<double>(n));
        m.shift[j] = mean;
        if (sd > 1e-12) {
            m.scale[j] = 1.0 / sd;
            any_varying = true;
        }
    }
    m.weights.assign(w, 0.0);
    m.majority = 2 * positives >= n ? 1 : 0;
    if (!any_varying) {
        m.degenerate = true;
        m.bias = m.majority ? 1.0 : -1.0;
        m.training_accuracy = static_cast<double>(m.majority ? positives : n - positives) / static_cast<double>(n);
        return m;
    }

    Mat z(n, w);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < w; ++j) z(i, j) = (x(i, j) - m.shift[j]) * m.scale[j];
    const double c_pos = static_cast<double>(n) / (2.0 * static_cast<double>(positives));
    const double c_neg = static_cast<double>(n) / (2.0 * static_cast<double>(n - positives));
    const double inv_n = 1.0 / static_cast<double>(n);

    Vec wt(w, 0.0);
    double b = 0.0;
    auto objective = [&](const Vec& wv, double bv) {
        double hinge = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = bv;
            for (std::size_t j = 0; j < w; ++j) d += wv[j] * z(i, j);
            hinge += (y[i] > 0 ? c_pos : c_neg) * std::max(0.0, 1.0 - y[i] * d);
        }
        return 0.5 * cfg.lambda * sum_squares(wv) + hinge * inv_n;
    };
    Vec best_w = wt;
    double best_b = b;
    double best_obj = objective(wt, b);
    Vec gw(w);
    for (std::size_t t = 1; t <= cfg.iterations; ++t) {
        for (std::size_t j = 0; j < w; ++j) gw[j] = cfg.lambda * wt[j];
        double gb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = b;
            for (std::size_t j = 0; j < w; ++j) d += wt[j] * z(i, j);
            if (y[i] * d < 1.0) {
                const double c = (y[i] > 0 ? c_pos : c_neg) * y[i] * inv_n;
                for (std::size_t j = 0; j < w; ++j) gw[j] -= c * z(i, j);
                gb -= c;
            }
        }
        const double eta = cfg.learning_rate / std::sqrt(static_cast<double>(t));
        for (std::size_t j = 0; j < w; ++j) wt[j] -= eta * gw[j];
        b -= eta * gb;
        const double obj = objective(wt, b);
        if (obj < best_obj) {
            best_obj = obj;
            best_w = wt;
            best_b = b;
        }
    }
    m.weights = best_w;
    m.bias = best_b;
    m.objective = best_obj;
    const double norm = std::sqrt(sum_squares(m.weights));
    m.margin = norm > 0.0 ? 1.0 / norm : 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i)
        if ((raw_decision(m, x.row(i)) >= 0.0) == (y[i] > 0)) ++correct;
    m.training_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    return m;
}

double svm_decision(const SvmModel& model, const ScoreRecord& rec) {
    require(model.feature_width >= 1 && model.weights.size() == model.feature_width, Errc::model_state,
            "svm model is not trained");
    rec.validate();
    if (model.degenerate) return model.bias;
    const Vec f = svm_features(rec, model.feature_width);
    return raw_decision(model, f);
}

}  // namespace fcdbn
