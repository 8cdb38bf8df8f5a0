#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fcdbn/deep_net.hpp"
#include "fcdbn/numeric.hpp"

namespace fcdbn {

inline constexpr std::size_t kFaceSide = 64;
inline constexpr std::size_t kRegionSide = 32;

enum class Region { face, t, not_t, binocular, chin };

const char* to_string(Region r) noexcept;
Region region_from_string(const std::string& name);

/// Region geometry as fractions of the aligned face height/width.
/// The T mask is the union of an eye strip spanning the full width and a nose
/// column; not-T is the face with that mask filled by the image mean.
struct RegionFractions {
    double eye_top = 0.25;
    double eye_bottom = 0.45;
    double nose_left = 0.35;
    double nose_right = 0.65;
    double nose_top = 0.25;
    double nose_bottom = 0.75;
    double binocular_top = 0.25;
    double binocular_bottom = 0.45;
    double chin_top = 0.75;
    double chin_bottom = 1.0;
    double chin_left = 0.25;
    double chin_right = 0.75;

    void validate() const;
};

/// Standardized 32x32 crops of one aligned face.
struct RegionSet {
    Mat face;
    Mat t_region;
    Mat not_t;
    std::optional<Mat> binocular;
    std::optional<Mat> chin;
    std::string source_id;

    const Mat& get(Region r) const;
};

/// Pixel mask (1 inside) of the T region on a rows x cols face.
Mat t_mask(std::size_t rows, std::size_t cols, const RegionFractions& fr = {});

/// Area-averaging resize.
Mat resize_area(const Mat& image, std::size_t rows, std::size_t cols);
/// Zero mean, unit (population) variance; constant input maps to zeros.
Mat standardize(const Mat& image);
/// Resize to 32x32 (when needed) and standardize.
Mat prepare_region(const Mat& image);

/// Requires a 64x64 input. Binocular and chin crops are filled only when
/// `with_optional` is set.
RegionSet extract_regions(const Mat& aligned_face, const RegionFractions& fr = {}, bool with_optional = false);

struct KvrlConfig {
    std::vector<Region> regions{Region::face, Region::t, Region::not_t};
    RegionFractions fractions;
    std::vector<std::size_t> stage1_hidden{512, 512};
    std::vector<std::size_t> stage2_hidden{1024, 512};
    std::vector<std::size_t> classifier_hidden{512, 128};
    FcOptions stage1_fc{6, 3, kRegionSide, kRegionSide, 0.1, 1e-4, UnitKind::gaussian, 0.01, 0.01};
    double stage2_alpha = 0.1;
    TrainConfig stage1_train{0.01, 30, 16, 1, 0.5, 0, 1e-5};
    TrainConfig stage2_train{0.05, 30, 16, 1, 0.5, 0, std::nullopt};
    MlpTrainConfig classifier;
    std::uint64_t seed = 0;

    void validate() const;
};

struct KvrlModel {
    std::vector<Region> regions;
    RegionFractions fractions;
    std::vector<DbnStack> stage1;  // one per region, same order as `regions`
    DbnStack stage2;
    MlpModel classifier;

    std::size_t representation_size() const;
    /// Stage widths agree with each other and with the classifier.
    void validate() const;
};

/// Stacks of zero-parameter layers with the configured widths.
KvrlModel zero_kvrl_model(const KvrlConfig& cfg);

/// Stage-1 encodings concatenated in region order, then stage 2.
Vec encode_face(const KvrlModel& model, const RegionSet& regions);
/// One row per face.
Mat encode_faces(const KvrlModel& model, std::span<const RegionSet> faces);

/// fa followed by fb.
Vec pair_feature(std::span<const double> fa, std::span<const double> fb);

/// Mean classifier output over both concatenation orders, so the score is
/// symmetric in (a, b). Throws model_state when the classifier is untrained.
double kin_score(const KvrlModel& model, const RegionSet& a, const RegionSet& b);
double kin_score_encoded(const KvrlModel& model, std::span<const double> fa, std::span<const double> fb);

struct IndexedPair {
    std::size_t a = 0;
    std::size_t b = 0;
    int label = 0;  // 1 kin, 0 non-kin
};

/// Row i scores pairs[i] given precomputed encodings (rows of `encoded`).
Vec kin_scores(const KvrlModel& model, const Mat& encoded, std::span<const IndexedPair> pairs);

/// Unsupervised stage-1 and stage-2 training on the corpus faces; the
/// returned model has an untrained classifier.
KvrlModel pretrain_representation(std::span<const RegionSet> corpus, const KvrlConfig& cfg);

/// Fits the classifier on pair features; each pair is used in both orders.
MlpTrainResult train_classifier(KvrlModel& model, std::span<const RegionSet> faces,
                                std::span<const IndexedPair> pairs, const KvrlConfig& cfg);
/// Same, with faces already encoded (one row per face).
MlpTrainResult train_classifier_encoded(KvrlModel& model, const Mat& encoded, std::span<const IndexedPair> pairs,
                                        const KvrlConfig& cfg);

KvrlModel train_kvrl(std::span<const RegionSet> corpus, std::span<const RegionSet> faces,
                     std::span<const IndexedPair> pairs, const KvrlConfig& cfg);

}  // namespace fcdbn
