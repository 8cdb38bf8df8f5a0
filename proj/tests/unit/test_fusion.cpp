#include <cmath>
#include <limits>
#include <numbers>

#include <doctest.h>

#include "oracles.hpp"
#include "fcdbn/fusion.hpp"

using namespace fcdbn;
using namespace fcdbn::testing;

namespace {

GaussianMixture single(double mean, double var) { return {{1.0}, {mean}, {var}}; }

PlrModels unit_models() { return {single(1, 1), single(0, 1), single(1, 1), single(0, 1)}; }

ScoreRecord record(double s, int genuine, Vec k = {}, std::vector<int> kin = {}) {
    return {s, genuine, std::move(k), std::move(kin)};
}

}  // namespace

TEST_SUITE("fusion") {

TEST_CASE("one component recovers the sample moments") {
    RngStream rng(1);
    Vec x(300);
    for (double& v : x) v = rng.gaussian(2.0, 0.7) + rng.uniform();
    double m = 0.0;
    for (double v : x) m += v;
    m /= 300.0;
    double var = 0.0;
    for (double v : x) var += (v - m) * (v - m);
    var /= 300.0;
    const GaussianMixture g = fit_gmm(x, 1, 5);
    CHECK(g.weights[0] == 1.0);
    CHECK(std::abs(g.means[0] - m) <= 1e-9);
    CHECK(std::abs(g.variances[0] - var) <= 1e-9);
}

TEST_CASE("identical samples clamp the variance at the floor") {
    const GaussianMixture g = fit_gmm(Vec(20, 3.0), 2, 1);
    for (std::size_t c = 0; c < 2; ++c) {
        CHECK(g.variances[c] == kVarianceFloor);
        CHECK_FALSE(std::isnan(g.means[c]));
        CHECK_FALSE(std::isnan(g.weights[c]));
    }
    CHECK(std::isfinite(g.log_density(3.0)));
}

TEST_CASE("two separated clusters are recovered") {
    RngStream rng(2);
    Vec x;
    for (int i = 0; i < 500; ++i) x.push_back(rng.gaussian(-5.0, 1.0));
    for (int i = 0; i < 500; ++i) x.push_back(rng.gaussian(5.0, 1.0));
    const GmmFit fit = fit_gmm_traced(x, 2, 3);
    Vec means = fit.model.means;
    std::ranges::sort(means);
    CHECK(std::abs(means[0] + 5.0) <= 0.2);
    CHECK(std::abs(means[1] - 5.0) <= 0.2);
    CHECK(fit.converged);
    double total = 0.0;
    for (double w : fit.model.weights) total += w;
    CHECK(std::abs(total - 1.0) <= 1e-12);
    // EM never lowers the likelihood.
    for (std::size_t i = 1; i < fit.log_likelihood.size(); ++i)
        CHECK(fit.log_likelihood[i] >= fit.log_likelihood[i - 1] - 1e-12);
}

TEST_CASE("fit_gmm needs 2K samples") {
    try {
        fit_gmm(Vec{1.0, 2.0, 3.0}, 2, 0);
        FAIL("expected insufficient_data");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::insufficient_data);
    }
}

TEST_CASE("mixture density integrates to one") {
    const GaussianMixture g{{0.3, 0.7}, {-1.0, 2.0}, {0.5, 2.0}};
    double area = 0.0;
    for (double x = -20.0; x <= 20.0; x += 1e-3) area += g.density(x) * 1e-3;
    CHECK(area == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("closed-form Gaussian ratios") {
    const PlrModels m = unit_models();
    CHECK(plr_score(record(0.5, 1, {0.5}, {1}), m).plr == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(plr_score(record(1.0, 1, {1.0}, {1}), m).plr == doctest::Approx(std::numbers::e).epsilon(1e-14));
    // log N(s;1,1) - log N(s;0,1) = s - 1/2.
    for (double s : {-2.0, 0.3, 4.0}) CHECK(plr_score(record(s, 0), m).log_plr == doctest::Approx(s - 0.5));
}

TEST_CASE("uninformative kin factors leave the face ratio") {
    PlrModels m = unit_models();
    const double face = plr_score(record(0.8, 1), m).plr;
    m.kin = single(0.3, 2.0);
    m.nonkin = single(0.3, 2.0);
    CHECK(plr_score(record(0.8, 1, {0.1, 5.0, -3.0}, {1, 0, 1}), m).plr == doctest::Approx(face).epsilon(1e-14));
}

TEST_CASE("vanishing densities are floored and counted") {
    PlrModels m = unit_models();
    m.impostor = single(0.0, 1e-6);
    // At s = 30 only the narrow impostor density underflows.
    const PlrResult r = plr_score(record(30.0, 1), m);
    CHECK(r.floor_hits == 1);
    CHECK(std::isfinite(r.log_plr));
    CHECK(r.plr > 0.0);
    CHECK(std::isfinite(r.plr));
}

TEST_CASE("svm separates separable scores") {
    std::vector<ScoreRecord> recs;
    RngStream rng(4);
    for (int i = 0; i < 100; ++i) {
        const bool g = i % 2 == 0;
        const double s = rng.uniform() + (g ? 1.5 : 0.0);
        const double k = rng.uniform() + (g ? 1.5 : 0.0);
        recs.push_back(record(s, g ? 1 : 0, {k}, {g ? 1 : 0}));
    }
    const SvmModel m = svm_fit(recs);
    CHECK(m.feature_width == 2);
    CHECK(m.training_accuracy == 1.0);
    CHECK(m.margin > 0.0);
    CHECK_FALSE(m.degenerate);
    for (const ScoreRecord& r : recs) CHECK((svm_decision(m, r) >= 0.0) == (r.genuine == 1));
}

TEST_CASE("constant features fall back to the majority class") {
    std::vector<ScoreRecord> recs;
    for (int i = 0; i < 10; ++i) recs.push_back(record(0.5, i < 7 ? 1 : 0, {0.2}, {1}));
    const SvmModel m = svm_fit(recs);
    CHECK(m.degenerate);
    CHECK(m.majority == 1);
    for (const ScoreRecord& r : recs) CHECK(svm_decision(m, r) > 0.0);
}

TEST_CASE("doubling every feature leaves svm predictions unchanged") {
    ScoreSynthConfig cfg;
    cfg.genuine = 80;
    cfg.impostor = 80;
    cfg.kin_per_record = 2;
    const auto recs = synth_scores(cfg, 5);
    std::vector<ScoreRecord> doubled = recs;
    for (ScoreRecord& r : doubled) {
        r.s *= 2.0;
        for (double& k : r.k) k *= 2.0;
    }
    const SvmModel a = svm_fit(recs);
    const SvmModel b = svm_fit(doubled);
    CHECK(a.feature_width == 3);
    for (std::size_t i = 0; i < recs.size(); ++i)
        CHECK((svm_decision(a, recs[i]) >= 0.0) == (svm_decision(b, doubled[i]) >= 0.0));
}

TEST_CASE("single-class svm training is rejected") {
    std::vector<ScoreRecord> recs(4, record(0.1, 1));
    try {
        svm_fit(recs);
        FAIL("expected degenerate_labels");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::degenerate_labels);
    }
}

TEST_CASE("infinite thresholds accept or reject everything") {
    ScoreSynthConfig cfg;
    cfg.genuine = 60;
    cfg.impostor = 60;
    const auto recs = synth_scores(cfg, 6);
    const FusionModels models = fit_fusion(recs, 2, 7);
    const double inf = std::numeric_limits<double>::infinity();
    for (const ScoreRecord& r : recs)
        for (const char* method : {"plr", "svm"}) {
            const BoostResult lo = boost_decision(r, method, models, -inf);
            const BoostResult hi = boost_decision(r, method, models, inf);
            CHECK(lo.accept);
            CHECK_FALSE(hi.accept);
            CHECK(lo.raw_score == r.s);
            CHECK(lo.fused_score == hi.fused_score);
        }
    try {
        boost_decision(recs[0], "vote", models, 0.0);
        FAIL("expected config");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::config);
    }
}

TEST_CASE("fused scores separate synthetic trials better than the face score") {
    ScoreSynthConfig cfg;
    cfg.kin_per_record = 2;
    const auto train = synth_scores(cfg, 8);
    const auto test = synth_scores(cfg, 9);
    const FusionModels models = fit_fusion(train, 2, 10);
    Vec face, plr, svm;
    std::vector<int> labels;
    for (const ScoreRecord& r : test) {
        face.push_back(r.s);
        plr.push_back(boost_decision(r, FusionMethod::plr, models, 0.0).fused_score);
        svm.push_back(boost_decision(r, FusionMethod::svm, models, 0.0).fused_score);
        labels.push_back(r.genuine);
    }
    const double base = pairwise_auc(face, labels);
    CHECK(pairwise_auc(plr, labels) > base);
    CHECK(pairwise_auc(svm, labels) > base);
}

}  // TEST_SUITE
