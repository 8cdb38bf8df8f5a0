#include <algorithm>
#include <cmath>

#include "fcdbn/descriptors.hpp"

namespace fcdbn {

double chi_square(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), Errc::incompatible_descriptor, "histogram lengths differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double den = a[i] + b[i];
        if (den > 0.0) s += (a[i] - b[i]) * (a[i] - b[i]) / den;
    }
    return s;
}

namespace {

Vec normalized(const Vec& v) {
    double total = 0.0;
    for (double x : v) total += x;
    Vec out(v);
    if (total > 0.0)
        for (double& x : out) x /= total;
    return out;
}

}  // namespace

double match_score(const DescriptorVec& d1, const DescriptorVec& d2) {
    require(d1.kind == d2.kind, Errc::incompatible_descriptor, "descriptor kinds differ");
    require(d1.values.size() == d2.values.size() && d1.grid_rows == d2.grid_rows && d1.grid_cols == d2.grid_cols,
            Errc::incompatible_descriptor, "descriptor layouts differ");
    if (d1.values == d2.values) return 1.0;
    if (d1.kind == DescriptorKind::lbp) return 1.0 / (1.0 + chi_square(normalized(d1.values), normalized(d2.values)));

    const double n1 = std::sqrt(sum_squares(d1.values));
    const double n2 = std::sqrt(sum_squares(d2.values));
    if (n1 == 0.0 && n2 == 0.0) return 1.0;
    if (n1 == 0.0 || n2 == 0.0) return 0.5;
    const double cosine = std::clamp(dot(d1.values, d2.values) / (n1 * n2), -1.0, 1.0);
    return (1.0 + cosine) / 2.0;
}

}  // namespace fcdbn
