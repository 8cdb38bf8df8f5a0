#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fcdbn/evaluation.hpp"

namespace fcdbn {

RocResult roc(std::span<const double> scores, std::span<const int> labels) {
    require(scores.size() == labels.size(), Errc::shape, "scores and labels differ in length");
    std::size_t pos = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        require(std::isfinite(scores[i]), Errc::invalid_parameter, "scores must be finite");
        require(labels[i] == 0 || labels[i] == 1, Errc::invalid_parameter, "labels must be 0 or 1");
        pos += static_cast<std::size_t>(labels[i]);
    }
    const std::size_t neg = scores.size() - pos;
    require(pos > 0 && neg > 0, Errc::degenerate, "ROC needs both positive and negative labels");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocResult r;
    r.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double t = scores[order[i]];
        while (i < order.size() && scores[order[i]] == t) {
            if (labels[order[i]]) ++tp; else ++fp;
            ++i;
        }
        r.points.push_back({t, static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos)});
    }
    for (std::size_t i = 1; i < r.points.size(); ++i) {
        const RocPoint& a = r.points[i - 1];
        const RocPoint& b = r.points[i];
        r.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    for (std::size_t k = 0; k < kReportFprs.size(); ++k) r.tpr_at[k] = tpr_at_fpr(r, kReportFprs[k]);
    return r;
}

double tpr_at_fpr(const RocResult& r, double fpr) {
    double best = 0.0;
    for (const RocPoint& p : r.points)
        if (p.fpr <= fpr) best = std::max(best, p.tpr);
    return best;
}

double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold) {
    require(scores.size() == labels.size() && !scores.empty(), Errc::shape, "scores and labels differ in length");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if ((scores[i] >= threshold) == (labels[i] == 1)) ++correct;
    return static_cast<double>(correct) / static_cast<double>(scores.size());
}

}  // namespace fcdbn
