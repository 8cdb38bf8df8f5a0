#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "kin_benchmark.hpp"
#include "oracles.hpp"
#include "fcdbn/kvrl.hpp"
#include "fcdbn/synth.hpp"

using namespace fcdbn;
using namespace fcdbn::testing;

namespace {

KvrlConfig tiny_config() {
    KvrlConfig c;
    c.stage1_hidden = {24};
    c.stage2_hidden = {16};
    c.classifier_hidden = {8};
    c.stage1_fc.filters = 2;
    c.stage1_train.epochs = 2;
    c.stage1_train.batch_size = 8;
    c.stage2_train.epochs = 2;
    c.stage2_train.batch_size = 8;
    c.classifier.epochs = 20;
    return c;
}

std::vector<RegionSet> synth_regions(std::uint64_t seed, std::size_t families, std::size_t members) {
    std::vector<RegionSet> out;
    for (const SynthFace& f : synth_faces(seed, families, members, 0.8)) out.push_back(extract_regions(f.image));
    return out;
}

double mean_of(const Mat& m) {
    double s = 0.0;
    for (double x : m.flat()) s += x;
    return s / static_cast<double>(m.size());
}

double variance_of(const Mat& m) {
    const double mu = mean_of(m);
    double s = 0.0;
    for (double x : m.flat()) s += (x - mu) * (x - mu);
    return s / static_cast<double>(m.size());
}

}  // namespace

TEST_SUITE("kvrl") {

TEST_CASE("constant face gives constant regions") {
    const RegionSet r = extract_regions(Mat(64, 64, 0.4), {}, true);
    for (const Mat* m : {&r.face, &r.t_region, &r.not_t, &*r.binocular, &*r.chin}) {
        CHECK(m->rows() == 32);
        CHECK(m->cols() == 32);
        for (double x : m->flat()) CHECK(x == m->flat()[0]);
    }
}

TEST_CASE("a marker on the eye strip survives in the T region only") {
    Mat face(64, 64, 0.5);
    // Eye strip rows 16..28; columns 4..8 lie outside the nose column.
    for (std::size_t r = 20; r < 24; ++r)
        for (std::size_t c = 4; c < 8; ++c) face(r, c) = 1.0;
    const RegionSet reg = extract_regions(face);
    auto spread = [](const Mat& m) {
        const auto [lo, hi] = std::ranges::minmax(m.flat());
        return hi - lo;
    };
    CHECK(spread(reg.face) > 1.0);
    CHECK(spread(reg.t_region) > 1.0);
    // The T region crops rows 16..48 at full height and half width: the marker lands on rows 4..7.
    CHECK(reg.t_region(5, 2) > reg.t_region(10, 2));
    // Full-face resizes halve both axes: the marker covers (10..11, 2..3); row 13 is unmarked eye strip.
    CHECK(reg.not_t(10, 2) == reg.not_t(13, 2));
    CHECK(reg.face(10, 2) > reg.face(13, 2));
    const Mat mask = t_mask(64, 64);
    CHECK(mask(21, 5) == 1.0);
    CHECK(mask(10, 5) == 0.0);
    CHECK(mask(40, 32) == 1.0);
    CHECK(mask(40, 5) == 0.0);
}

TEST_CASE("standardized regions have zero mean and unit variance") {
    Mat face = random_mat(64, 64, 3);
    for (double& x : face.flat()) x = sigmoid(x);
    const RegionSet r = extract_regions(face, {}, true);
    for (const Mat* m : {&r.face, &r.t_region, &r.not_t, &*r.binocular, &*r.chin}) {
        CHECK(std::abs(mean_of(*m)) < 1e-10);
        CHECK(std::abs(variance_of(*m) - 1.0) < 1e-10);
    }
    CHECK_NOTHROW(r.get(Region::chin));
    CHECK_THROWS_AS(extract_regions(face).get(Region::chin), Error);
    CHECK_THROWS_AS(extract_regions(Mat(32, 32)), Error);
}

TEST_CASE("area resize preserves the mean") {
    const Mat img = random_mat(64, 64, 4);
    const Mat small = resize_area(img, 32, 32);
    CHECK(mean_of(small) == doctest::Approx(mean_of(img)).epsilon(1e-12));
    CHECK(small(0, 0) == doctest::Approx((img(0, 0) + img(0, 1) + img(1, 0) + img(1, 1)) / 4).epsilon(1e-12));
}

TEST_CASE("zero-parameter model encodes to one half") {
    const KvrlModel m = zero_kvrl_model(KvrlConfig{});
    const RegionSet r = extract_regions(random_mat(64, 64, 1));
    const Vec e = encode_face(m, r);
    CHECK(e.size() == 512);
    for (double x : e) CHECK(x == 0.5);
    CHECK(m.representation_size() == 512);
}

TEST_CASE("encode_face is deterministic and equals manual composition") {
    const KvrlConfig cfg = tiny_config();
    const auto corpus = synth_regions(7, 6, 3);
    const KvrlModel m = pretrain_representation(corpus, cfg);
    const RegionSet& r = corpus[2];
    const Vec e = encode_face(m, r);
    CHECK(e == encode_face(m, r));
    Vec concat;
    for (std::size_t i = 0; i < m.regions.size(); ++i) {
        const Vec s = encode(m.stage1[i], r.get(m.regions[i]).flat());
        concat.insert(concat.end(), s.begin(), s.end());
    }
    CHECK(max_abs_diff(e, encode(m.stage2, concat)) <= 1e-15);
    const Mat batch = encode_faces(m, corpus);
    CHECK(max_abs_diff(batch.row(2), e) < 1e-13);
}

TEST_CASE("pair_feature concatenates") {
    const Vec f = pair_feature(Vec(512, 0.0), Vec(512, 1.0));
    REQUIRE(f.size() == 1024);
    for (std::size_t i = 0; i < 512; ++i) {
        CHECK(f[i] == 0.0);
        CHECK(f[512 + i] == 1.0);
    }
    const Vec g = random_vec(512, 1);
    const Vec same = pair_feature(g, g);
    CHECK(Vec(same.begin(), same.begin() + 512) == Vec(same.begin() + 512, same.end()));
    CHECK_THROWS_AS(pair_feature(Vec(3), Vec(4)), Error);
}

TEST_CASE("kin_score is symmetric and bounded") {
    const KvrlConfig cfg = tiny_config();
    const auto corpus = synth_regions(8, 6, 3);
    const auto kin = synth_kin(9, 6, 4, 0.8);
    std::vector<RegionSet> faces;
    for (const SynthFace& f : kin.faces) faces.push_back(extract_regions(f.image));
    std::vector<IndexedPair> pairs;
    for (std::size_t i = 0; i + 1 < faces.size(); i += 2) pairs.push_back({i, i + 1, kin.faces[i].family == kin.faces[i + 1].family});
    for (std::size_t i = 0; i + 5 < faces.size(); i += 3) pairs.push_back({i, i + 5, kin.faces[i].family == kin.faces[i + 5].family});
    KvrlModel untrained = pretrain_representation(corpus, cfg);
    try {
        kin_score(untrained, faces[0], faces[1]);
        FAIL("expected model_state");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::model_state);
    }
    const KvrlModel m = train_kvrl(corpus, faces, pairs, cfg);
    for (std::size_t a = 0; a < 6; ++a)
        for (std::size_t b = 0; b < 6; ++b) {
            const double s = kin_score(m, faces[a], faces[b]);
            CHECK(s == kin_score(m, faces[b], faces[a]));
            CHECK(s >= 0.0);
            CHECK(s <= 1.0);
        }
    const Mat enc = encode_faces(m, faces);
    const std::vector<IndexedPair> few{{0, 1, 1}, {2, 5, 0}};
    const Vec batch = kin_scores(m, enc, few);
    CHECK(batch[0] == doctest::Approx(kin_score(m, faces[0], faces[1])).epsilon(1e-12));
    CHECK(batch[1] == doctest::Approx(kin_score(m, faces[2], faces[5])).epsilon(1e-12));
}

TEST_CASE("an untrained classifier scores at chance") {
    KvrlConfig cfg = tiny_config();
    cfg.classifier.epochs = 0;
    const auto corpus = synth_regions(10, 10, 3);
    const auto kin = synth_kin(11, 40, 8, 0.8);
    std::vector<RegionSet> faces;
    for (const SynthFace& f : kin.faces) faces.push_back(extract_regions(f.image));
    const KvrlModel base = pretrain_representation(corpus, cfg);
    const Mat enc = encode_faces(base, faces);
    // 250 same-family and 250 cross-family pairs drawn at random.
    RngStream rng(12);
    std::vector<IndexedPair> test;
    std::size_t kin_count = 0;
    std::size_t non_count = 0;
    while (kin_count + non_count < 500) {
        const std::size_t a = rng.below(faces.size());
        const std::size_t b = rng.below(faces.size());
        if (a == b) continue;
        const bool same = kin.faces[a].family == kin.faces[b].family;
        if (same && kin_count < 250) {
            test.push_back({a, b, 1});
            ++kin_count;
        } else if (!same && non_count < 250) {
            test.push_back({a, b, 0});
            ++non_count;
        }
    }
    std::vector<IndexedPair> train;
    for (const IndexedPair& p : test)
        if (std::ranges::count(train, p.label, &IndexedPair::label) < 10) train.push_back(p);
    KvrlModel m = base;
    train_classifier_encoded(m, enc, train, cfg);
    const Vec scores = kin_scores(m, enc, test);
    std::vector<int> labels;
    for (const IndexedPair& p : test) labels.push_back(p.label);
    CHECK(std::abs(roc(scores, labels).auc - 0.5) <= 0.07);
}

TEST_CASE("a trained small model separates synthetic kin") {
    KvrlConfig cfg;
    cfg.stage1_hidden = {128};
    cfg.stage2_hidden = {64};
    cfg.classifier_hidden = {64};
    cfg.stage1_train.epochs = 10;
    cfg.stage1_train.batch_size = 16;
    cfg.stage2_train.epochs = 10;
    cfg.stage2_train.batch_size = 16;
    const KinBenchmarkResult r = run_kin_benchmark(KinBenchmark{}, cfg, 1);
    CHECK(r.auc >= 0.85);
}

TEST_CASE("config validation") {
    KvrlConfig c;
    CHECK_NOTHROW(c.validate());
    c.regions.clear();
    CHECK_THROWS_AS(c.validate(), Error);
    c = KvrlConfig{};
    c.stage1_hidden.clear();
    CHECK_THROWS_AS(c.validate(), Error);
    c = KvrlConfig{};
    c.fractions.eye_top = 0.9;
    CHECK_THROWS_AS(c.validate(), Error);
    CHECK_THROWS_AS(region_from_string("nose"), Error);
    CHECK(region_from_string(to_string(Region::not_t)) == Region::not_t);
}

}  // TEST_SUITE
