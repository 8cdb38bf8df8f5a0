#include <algorithm>
#include <cmath>
#include <string>

#include "fcdbn/kvrl.hpp"

namespace fcdbn {

namespace {

constexpr std::uint64_t kStage1SeedStride = 1000;
constexpr std::uint64_t kStage2SeedOffset = 10000;
constexpr std::uint64_t kClassifierSeedOffset = 20000;

std::vector<std::size_t> with_input(std::size_t input, const std::vector<std::size_t>& hidden) {
    std::vector<std::size_t> dims{input};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    return dims;
}

DbnStack zero_stack(std::span<const std::size_t> dims, UnitKind first_units) {
    DbnStack s;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i)
        s.layers.push_back(zero_layer(dims[i], dims[i + 1], i == 0 ? first_units : UnitKind::bernoulli));
    return s;
}

void check_widths(const std::vector<std::size_t>& widths, const char* name) {
    require(!widths.empty(), Errc::config, std::string(name) + " needs at least one layer");
    for (std::size_t w : widths) require(w > 0, Errc::config, std::string(name) + " widths must be positive");
}

Mat region_batch(std::span<const RegionSet> faces, Region r) {
    Mat batch(faces.size(), kRegionSide * kRegionSide);
    for (std::size_t i = 0; i < faces.size(); ++i) {
        const Mat& m = faces[i].get(r);
        require(m.size() == batch.cols(), Errc::shape, "region is not 32x32");
        std::ranges::copy(m.flat(), batch.row(i).begin());
    }
    return batch;
}

Mat concat_columns(const std::vector<Mat>& parts) {
    std::size_t cols = 0;
    for (const Mat& p : parts) cols += p.cols();
    Mat out(parts.front().rows(), cols);
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto dst = out.row(r).begin();
        for (const Mat& p : parts) dst = std::ranges::copy(p.row(r), dst).out;
    }
    return out;
}

void require_trained(const KvrlModel& model) {
    require(model.classifier.trained && !model.classifier.layers.empty(), Errc::model_state,
            "kin classifier has not been trained");
}

}  // namespace

void KvrlConfig::validate() const {
    require(!regions.empty(), Errc::config, "at least one region is required");
    for (std::size_t i = 0; i < regions.size(); ++i)
        for (std::size_t j = i + 1; j < regions.size(); ++j)
            require(regions[i] != regions[j], Errc::config, "duplicate region in the region list");
    fractions.validate();
    check_widths(stage1_hidden, "stage1");
    check_widths(stage2_hidden, "stage2");
    for (std::size_t w : classifier_hidden) require(w > 0, Errc::config, "classifier widths must be positive");
    require(stage1_fc.alpha >= 0.0 && stage1_fc.beta >= 0.0 && stage2_alpha >= 0.0, Errc::config,
            "alpha and beta must be >= 0");
    require(stage1_fc.filters == 0 || stage1_fc.filter_size % 2 == 1, Errc::config, "filter size must be odd");
    stage1_train.validate();
    stage2_train.validate();
    classifier.validate();
}

std::size_t KvrlModel::representation_size() const { return stage2.output_size(); }

void KvrlModel::validate() const {
    require(!regions.empty() && regions.size() == stage1.size(), Errc::shape,
            "one stage-1 stack per region is required");
    std::size_t concat = 0;
    for (const DbnStack& s : stage1) {
        s.validate();
        require(s.input_size() == kRegionSide * kRegionSide, Errc::shape, "stage-1 input must be 1024 wide");
        concat += s.output_size();
    }
    stage2.validate();
    require(stage2.input_size() == concat, Errc::shape,
            "stage-2 input " + std::to_string(stage2.input_size()) + " != concatenated stage-1 width " +
                std::to_string(concat));
    if (!classifier.layers.empty()) {
        classifier.validate();
        require(classifier.input_size() == 2 * stage2.output_size(), Errc::shape,
                "classifier input must be twice the representation width");
    }
}

KvrlModel zero_kvrl_model(const KvrlConfig& cfg) {
    cfg.validate();
    KvrlModel m;
    m.regions = cfg.regions;
    m.fractions = cfg.fractions;
    const auto d1 = with_input(kRegionSide * kRegionSide, cfg.stage1_hidden);
    for (std::size_t r = 0; r < cfg.regions.size(); ++r) m.stage1.push_back(zero_stack(d1, cfg.stage1_fc.first_layer_units));
    const auto d2 = with_input(cfg.regions.size() * cfg.stage1_hidden.back(), cfg.stage2_hidden);
    m.stage2 = zero_stack(d2, UnitKind::bernoulli);
    return m;
}

Vec encode_face(const KvrlModel& model, const RegionSet& regions) {
    require(!model.stage1.empty() && model.stage1.size() == model.regions.size(), Errc::shape,
            "model has no stage-1 stacks");
    Vec concat;
    for (std::size_t r = 0; r < model.regions.size(); ++r) {
        const Vec e = encode(model.stage1[r], regions.get(model.regions[r]).flat());
        concat.insert(concat.end(), e.begin(), e.end());
    }
    return encode(model.stage2, concat);
}

Mat encode_faces(const KvrlModel& model, std::span<const RegionSet> faces) {
    require(!faces.empty(), Errc::empty_input, "no faces to encode");
    require(!model.stage1.empty() && model.stage1.size() == model.regions.size(), Errc::shape,
            "model has no stage-1 stacks");
    std::vector<Mat> parts;
    for (std::size_t r = 0; r < model.regions.size(); ++r)
        parts.push_back(encode_batch(model.stage1[r], region_batch(faces, model.regions[r])));
    return encode_batch(model.stage2, concat_columns(parts));
}

Vec pair_feature(std::span<const double> fa, std::span<const double> fb) {
    require(!fa.empty() && fa.size() == fb.size(), Errc::shape,
            "pair_feature needs equal-width encodings, got " + std::to_string(fa.size()) + " and " +
                std::to_string(fb.size()));
    Vec out(fa.begin(), fa.end());
    out.insert(out.end(), fb.begin(), fb.end());
    return out;
}

double kin_score_encoded(const KvrlModel& model, std::span<const double> fa, std::span<const double> fb) {
    require_trained(model);
    Mat x(2, 2 * fa.size());
    const Vec ab = pair_feature(fa, fb);
    const Vec ba = pair_feature(fb, fa);
    std::ranges::copy(ab, x.row(0).begin());
    std::ranges::copy(ba, x.row(1).begin());
    const Vec p = mlp_predict(model.classifier, x);
    return (p[0] + p[1]) / 2.0;
}

double kin_score(const KvrlModel& model, const RegionSet& a, const RegionSet& b) {
    require_trained(model);
    return kin_score_encoded(model, encode_face(model, a), encode_face(model, b));
}

Vec kin_scores(const KvrlModel& model, const Mat& encoded, std::span<const IndexedPair> pairs) {
    require_trained(model);
    const std::size_t w = encoded.cols();
    const std::size_t n = pairs.size();
    if (n == 0) return {};
    Mat x(2 * n, 2 * w);
    for (std::size_t i = 0; i < n; ++i) {
        require(pairs[i].a < encoded.rows() && pairs[i].b < encoded.rows(), Errc::shape, "pair index out of range");
        const auto fa = encoded.row(pairs[i].a);
        const auto fb = encoded.row(pairs[i].b);
        std::ranges::copy(fa, x.row(i).begin());
        std::ranges::copy(fb, x.row(i).begin() + static_cast<long>(w));
        std::ranges::copy(fb, x.row(n + i).begin());
        std::ranges::copy(fa, x.row(n + i).begin() + static_cast<long>(w));
    }
    const Vec p = mlp_predict(model.classifier, x);
    Vec out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = (p[i] + p[n + i]) / 2.0;
    return out;
}

KvrlModel pretrain_representation(std::span<const RegionSet> corpus, const KvrlConfig& cfg) {
    cfg.validate();
    require(!corpus.empty(), Errc::empty_input, "pretraining corpus is empty");
    KvrlModel model;
    model.regions = cfg.regions;
    model.fractions = cfg.fractions;

    const auto d1 = with_input(kRegionSide * kRegionSide, cfg.stage1_hidden);
    FcOptions fc1 = cfg.stage1_fc;
    fc1.image_rows = kRegionSide;
    fc1.image_cols = kRegionSide;
    std::vector<Mat> parts;
    for (std::size_t r = 0; r < cfg.regions.size(); ++r) {
        TrainConfig t = cfg.stage1_train;
        t.seed = cfg.seed + kStage1SeedStride * (r + 1);
        const Mat data = region_batch(corpus, cfg.regions[r]);
        try {
            model.stage1.push_back(greedy_pretrain(d1, data, t, fc1));
        } catch (const Error& e) {
            throw Error(e.code(), std::string("stage 1 (") + to_string(cfg.regions[r]) + "): " + e.what());
        }
        parts.push_back(encode_batch(model.stage1.back(), data));
    }

    const Mat concat = concat_columns(parts);
    const auto d2 = with_input(concat.cols(), cfg.stage2_hidden);
    FcOptions fc2;
    fc2.alpha = cfg.stage2_alpha;
    fc2.weight_std = cfg.stage1_fc.weight_std;
    TrainConfig t2 = cfg.stage2_train;
    t2.seed = cfg.seed + kStage2SeedOffset;
    try {
        model.stage2 = greedy_pretrain(d2, concat, t2, fc2);
    } catch (const Error& e) {
        throw Error(e.code(), std::string("stage 2: ") + e.what());
    }
    return model;
}

MlpTrainResult train_classifier(KvrlModel& model, std::span<const RegionSet> faces,
                                std::span<const IndexedPair> pairs, const KvrlConfig& cfg) {
    cfg.validate();
    require(!pairs.empty(), Errc::empty_input, "no labelled pairs");
    return train_classifier_encoded(model, encode_faces(model, faces), pairs, cfg);
}

MlpTrainResult train_classifier_encoded(KvrlModel& model, const Mat& enc, std::span<const IndexedPair> pairs,
                                        const KvrlConfig& cfg) {
    cfg.validate();
    require(!pairs.empty(), Errc::empty_input, "no labelled pairs");
    require(enc.cols() == model.representation_size(), Errc::shape, "encodings do not match the representation width");
    const std::size_t w = enc.cols();
    const std::size_t n = pairs.size();
    Mat x(2 * n, 2 * w);
    std::vector<int> y(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        const IndexedPair& p = pairs[i];
        require(p.a < enc.rows() && p.b < enc.rows(), Errc::shape, "pair index out of range");
        require(p.label == 0 || p.label == 1, Errc::invalid_parameter, "pair labels must be 0 or 1");
        std::ranges::copy(enc.row(p.a), x.row(2 * i).begin());
        std::ranges::copy(enc.row(p.b), x.row(2 * i).begin() + static_cast<long>(w));
        std::ranges::copy(enc.row(p.b), x.row(2 * i + 1).begin());
        std::ranges::copy(enc.row(p.a), x.row(2 * i + 1).begin() + static_cast<long>(w));
        y[2 * i] = y[2 * i + 1] = p.label;
    }
    const auto arch = with_input(2 * w, cfg.classifier_hidden);
    std::vector<std::size_t> full = arch;
    full.push_back(1);
    MlpTrainConfig mc = cfg.classifier;
    mc.seed = cfg.seed + kClassifierSeedOffset;
    MlpTrainResult res = mlp_train(x, y, full, mc);
    model.classifier = res.model;
    return res;
}

KvrlModel train_kvrl(std::span<const RegionSet> corpus, std::span<const RegionSet> faces,
                     std::span<const IndexedPair> pairs, const KvrlConfig& cfg) {
    require(!pairs.empty(), Errc::empty_input, "no labelled pairs");
    KvrlModel model = pretrain_representation(corpus, cfg);
    train_classifier(model, faces, pairs, cfg);
    return model;
}

}  // namespace fcdbn
