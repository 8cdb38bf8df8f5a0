#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fcdbn/evaluation.hpp"

namespace fcdbn {

std::uint64_t ConfusionCounts::total() const noexcept {
    return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
}

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double inverse_normal_cdf(double p) {
    require(p > 0.0 && p < 1.0, Errc::invalid_rate, "inverse normal needs p in (0, 1)");
    // Rational approximation (Acklam) followed by one Halley refinement step.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

double dprime(double hit_rate, double fa_rate, std::size_t n_signal, std::size_t n_noise) {
    auto clamp_rate = [](double r, std::size_t n, const char* name) {
        require(std::isfinite(r) && r >= 0.0 && r <= 1.0, Errc::invalid_rate,
                std::string(name) + " must lie in [0, 1], got " + std::to_string(r));
        const double lo = n > 0 ? 1.0 / (2.0 * static_cast<double>(n)) : 1e-9;
        return std::clamp(r, lo, 1.0 - lo);
    };
    return inverse_normal_cdf(clamp_rate(hit_rate, n_signal, "hit rate")) -
           inverse_normal_cdf(clamp_rate(fa_rate, n_noise, "false-alarm rate"));
}

namespace {

double plogp(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

double checked_total(const ConfusionCounts& c) {
    const std::uint64_t t = c.total();
    require(t > 0, Errc::empty_input, "confusion counts are all zero");
    return static_cast<double>(t);
}

}  // namespace

double stimulus_entropy(const ConfusionCounts& c) {
    const double t = checked_total(c);
    double h = 0.0;
    for (const auto& row : c.counts) h -= plogp(static_cast<double>(row[0] + row[1]) / t);
    return h / std::numbers::ln2;
}

double equivocation(const ConfusionCounts& c) {
    const double t = checked_total(c);
    double h = 0.0;
    for (std::size_t j = 0; j < 2; ++j) {
        const double col = static_cast<double>(c.counts[0][j] + c.counts[1][j]);
        if (col == 0.0) continue;
        for (std::size_t i = 0; i < 2; ++i) {
            const double n = static_cast<double>(c.counts[i][j]);
            if (n > 0.0) h -= (n / t) * std::log(n / col);
        }
    }
    return h / std::numbers::ln2;
}

double information_entropy(const ConfusionCounts& c) {
    const double hs = stimulus_entropy(c);
    return std::clamp(hs - equivocation(c), 0.0, hs);
}

ZTest ztest_proportions(double p1, std::size_t n1, double p2, std::size_t n2) {
    require(n1 >= 1 && n2 >= 1, Errc::invalid_sample, "both groups need at least one sample");
    for (double p : {p1, p2})
        require(std::isfinite(p) && p >= 0.0 && p <= 1.0, Errc::invalid_rate, "proportions must lie in [0, 1]");
    const double a = static_cast<double>(n1);
    const double b = static_cast<double>(n2);
    const double pooled = (p1 * a + p2 * b) / (a + b);
    const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / a + 1.0 / b));
    ZTest out;
    if (se > 0.0) out.z = (p1 - p2) / se;
    out.significant_95 = std::abs(out.z) > 1.96;
    return out;
}

}  // namespace fcdbn
