#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fcdbn/numeric.hpp"

namespace fcdbn {

inline constexpr double kVarianceFloor = 1e-6;
inline constexpr double kDensityFloor = 1e-300;

/// One-dimensional Gaussian mixture.
struct GaussianMixture {
    Vec weights;
    Vec means;
    Vec variances;

    std::size_t components() const noexcept { return weights.size(); }
    void validate() const;
    double density(double x) const;
    double log_density(double x) const;
};

struct GmmFit {
    GaussianMixture model;
    Vec log_likelihood;  // mean per-sample log-likelihood after each EM iteration
    std::size_t iterations = 0;
    bool converged = false;
};

/// EM from k-means++ seeds; stops when the mean log-likelihood improves by
/// less than 1e-8 or after 500 iterations. Variances are floored at 1e-6.
/// Throws insufficient_data when fewer than 2K samples are given.
GmmFit fit_gmm_traced(std::span<const double> samples, std::size_t components, std::uint64_t seed);
GaussianMixture fit_gmm(std::span<const double> samples, std::size_t components, std::uint64_t seed);

/// One verification trial: face score s, kin scores k_i and the labels.
struct ScoreRecord {
    double s = 0.0;
    int genuine = 0;       // 1 genuine, 0 impostor
    Vec k;                 // kin scores
    std::vector<int> kin;  // 1 kin, 0 non-kin, one per kin score

    void validate() const;
};

/// Class-conditional score densities.
struct PlrModels {
    GaussianMixture genuine;  // s | genuine
    GaussianMixture impostor; // s | impostor
    GaussianMixture kin;      // k | kin
    GaussianMixture nonkin;   // k | non-kin
};

/// Pools s by the genuine label and every k_i by its kin label.
PlrModels fit_plr_models(std::span<const ScoreRecord> records, std::size_t components, std::uint64_t seed);

struct PlrResult {
    double log_plr = 0.0;
    double plr = 0.0;             // exp(log_plr), kept within (0, inf)
    std::size_t floor_hits = 0;   // densities raised to the 1e-300 floor
};

/// [p(s|genuine) / p(s|impostor)] * prod_i [p(k_i|kin) / p(k_i|non-kin)],
/// accumulated in the log domain.
PlrResult plr_score(const ScoreRecord& rec, const PlrModels& models);

struct SvmConfig {
    double lambda = 1e-3;       // L2 weight
    double learning_rate = 0.5;
    std::size_t iterations = 2000;

    void validate() const;
};

/// Linear hinge-loss classifier on standardized score features.
struct SvmModel {
    std::size_t feature_width = 0;  // 1: [s], 2: [s, k], 3: [s, mean k, max k]
    Vec shift;
    Vec scale;
    Vec weights;
    double bias = 0.0;
    bool degenerate = false;  // constant features: the majority class is returned
    int majority = 1;
    double margin = 0.0;      // 1 / ||w||
    double training_accuracy = 0.0;
    double objective = 0.0;
};

/// Feature vector of a record at the given width.
Vec svm_features(const ScoreRecord& rec, std::size_t width);

/// Full-batch subgradient descent with class-balanced hinge weights.
/// The feature width follows the largest kin-score count in the records.
SvmModel svm_fit(std::span<const ScoreRecord> records, const SvmConfig& cfg = {});
double svm_decision(const SvmModel& model, const ScoreRecord& rec);

enum class FusionMethod { plr, svm };
const char* to_string(FusionMethod m) noexcept;
/// Throws config for an unknown name.
FusionMethod fusion_method_from_string(const std::string& name);

struct FusionModels {
    PlrModels plr;
    SvmModel svm;
};

FusionModels fit_fusion(std::span<const ScoreRecord> records, std::size_t components, std::uint64_t seed,
                        const SvmConfig& svm = {});

struct BoostResult {
    bool accept = false;
    double raw_score = 0.0;    // face score s
    double fused_score = 0.0;  // log-PLR or SVM decision value
};

/// Accepts when the fused score is >= threshold.
BoostResult boost_decision(const ScoreRecord& rec, FusionMethod method, const FusionModels& models,
                           double threshold);
BoostResult boost_decision(const ScoreRecord& rec, const std::string& method, const FusionModels& models,
                           double threshold);

/// Synthetic trials: s ~ N(face_separation, 1) for genuine and N(0, 1) for
/// impostor claims; each kin score is kin exactly when the claim is genuine,
/// drawn from N(kin_separation, 1) for kin and N(0, 1) otherwise.
struct ScoreSynthConfig {
    std::size_t genuine = 500;
    std::size_t impostor = 500;
    std::size_t kin_per_record = 1;
    double face_separation = 1.5;
    double kin_separation = 1.5;
};
std::vector<ScoreRecord> synth_scores(const ScoreSynthConfig& cfg, std::uint64_t seed);

}  // namespace fcdbn
