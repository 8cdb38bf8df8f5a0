#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fcdbn/fusion.hpp"

namespace fcdbn {

namespace {

constexpr double kTolerance = 1e-8;
constexpr std::size_t kMaxIterations = 500;

double log_normal(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

double log_sum_exp(std::span<const double> v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

Vec kmeanspp_seeds(std::span<const double> x, std::size_t k, RngStream& rng) {
    Vec centres{x[rng.below(x.size())]};
    Vec d2(x.size());
    while (centres.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (double c : centres) best = std::min(best, (x[i] - c) * (x[i] - c));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            centres.push_back(x[rng.below(x.size())]);
            continue;
        }
        const double target = rng.uniform() * total;
        double acc = 0.0;
        std::size_t pick = x.size() - 1;
        for (std::size_t i = 0; i < x.size(); ++i) {
            acc += d2[i];
            if (acc > target) {
                pick = i;
                break;
            }
        }
        centres.push_back(x[pick]);
    }
    return centres;
}

}  // namespace

void GaussianMixture::validate() const {
    require(!weights.empty() && weights.size() == means.size() && weights.size() == variances.size(), Errc::shape,
            "mixture parameter lengths differ");
    double total = 0.0;
    for (std::size_t c = 0; c < weights.size(); ++c) {
        require(std::isfinite(weights[c]) && weights[c] >= 0.0 && std::isfinite(means[c]) &&
                    std::isfinite(variances[c]) && variances[c] >= kVarianceFloor,
                Errc::invalid_parameter, "invalid mixture component " + std::to_string(c));
        total += weights[c];
    }
    require(std::abs(total - 1.0) <= 1e-12, Errc::invalid_parameter, "mixture weights must sum to 1");
}

double GaussianMixture::log_density(double x) const {
    Vec terms(weights.size());
    for (std::size_t c = 0; c < weights.size(); ++c)
        terms[c] = std::log(weights[c]) + log_normal(x, means[c], variances[c]);
    return log_sum_exp(terms);
}

double GaussianMixture::density(double x) const { return std::exp(log_density(x)); }

GmmFit fit_gmm_traced(std::span<const double> samples, std::size_t components, std::uint64_t seed) {
    require(components >= 1, Errc::invalid_parameter, "a mixture needs at least one component");
    require(samples.size() >= 2 * components, Errc::insufficient_data,
            "need at least " + std::to_string(2 * components) + " samples, got " + std::to_string(samples.size()));
    for (double x : samples) require(std::isfinite(x), Errc::invalid_parameter, "samples must be finite");

    const std::size_t n = samples.size();
    const std::size_t k = components;
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : samples) var += (x - mean) * (x - mean);
    var = std::max(var / static_cast<double>(n), kVarianceFloor);

    RngStream rng(seed);
    GaussianMixture g;
    g.means = kmeanspp_seeds(samples, k, rng);
    g.weights.assign(k, 1.0 / static_cast<double>(k));
    g.variances.assign(k, var);

    GmmFit fit;
    Mat resp(n, k);
    Vec terms(k);
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= kMaxIterations; ++it) {
        // E step
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < k; ++c)
                terms[c] = std::log(g.weights[c]) + log_normal(samples[i], g.means[c], g.variances[c]);
            const double lse = log_sum_exp(terms);
            for (std::size_t c = 0; c < k; ++c) resp(i, c) = std::exp(terms[c] - lse);
        }
        // M step
        for (std::size_t c = 0; c < k; ++c) {
            double nk = 0.0;
            double sx = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                nk += resp(i, c);
                sx += resp(i, c) * samples[i];
            }
            if (nk < 1e-300) {
                g.weights[c] = 1e-300;
                continue;
            }
            const double mu = sx / nk;
            double sv = 0.0;
            for (std::size_t i = 0; i < n; ++i) sv += resp(i, c) * (samples[i] - mu) * (samples[i] - mu);
            g.weights[c] = nk / static_cast<double>(n);
            g.means[c] = mu;
            g.variances[c] = std::max(sv / nk, kVarianceFloor);
        }
        double wsum = 0.0;
        for (double w : g.weights) wsum += w;
        for (double& w : g.weights) w /= wsum;

        double ll = 0.0;
        for (double x : samples) ll += g.log_density(x);
        ll /= static_cast<double>(n);
        fit.log_likelihood.push_back(ll);
        fit.iterations = it;
        if (ll - prev < kTolerance) {
            fit.converged = true;
            break;
        }
        prev = ll;
    }
    fit.model = std::move(g);
    return fit;
}

GaussianMixture fit_gmm(std::span<const double> samples, std::size_t components, std::uint64_t seed) {
    return fit_gmm_traced(samples, components, seed).model;
}

}  // namespace fcdbn
