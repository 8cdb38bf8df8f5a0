#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fcdbn/numeric.hpp"

namespace fcdbn {

// -- perceptual metrics ---------------------------------------------------------

/// counts[i][j]: stimulus i (0 kin, 1 non-kin) answered as response j.
struct ConfusionCounts {
    std::array<std::array<std::uint64_t, 2>, 2> counts{};

    std::uint64_t total() const noexcept;
};

double normal_cdf(double x) noexcept;
/// Inverse standard-normal CDF for p in (0, 1).
double inverse_normal_cdf(double p);

/// z(hit) - z(fa). With known trial counts the rates are clamped to
/// [1/(2n), 1 - 1/(2n)]; otherwise to [1e-9, 1 - 1e-9].
/// Throws invalid_rate for rates outside [0, 1].
double dprime(double hit_rate, double fa_rate, std::size_t n_signal = 0, std::size_t n_noise = 0);

/// Entropies in bits; 0 log 0 is taken as 0. Throw empty_input on zero counts.
double stimulus_entropy(const ConfusionCounts& c);
/// H(S | r).
double equivocation(const ConfusionCounts& c);
/// H(S) - H(S | r).
double information_entropy(const ConfusionCounts& c);

struct ZTest {
    double z = 0.0;
    bool significant_95 = false;  // |z| > 1.96
};

/// Pooled two-proportion z statistic of p1 - p2.
ZTest ztest_proportions(double p1, std::size_t n1, double p2, std::size_t n2);

// -- verification metrics ------------------------------------------------------

struct RocPoint {
    double threshold = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

inline constexpr std::array<double, 3> kReportFprs{0.001, 0.01, 0.1};

struct RocResult {
    std::vector<RocPoint> points;  // from (0, 0) to (1, 1)
    double auc = 0.0;
    std::array<double, 3> tpr_at{};  // TPR at each of kReportFprs
};

/// Threshold sweep over the unique scores (score >= threshold is positive);
/// tied scores move together. Throws degenerate unless both labels occur.
RocResult roc(std::span<const double> scores, std::span<const int> labels);
/// Largest TPR among curve points with FPR <= fpr.
double tpr_at_fpr(const RocResult& r, double fpr);
double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold);

// -- protocol ------------------------------------------------------------------

enum class Relation { FS, FD, MS, MD, BB, BS, SS };
inline constexpr std::array<Relation, 7> kRelations{Relation::FS, Relation::FD, Relation::MS, Relation::MD,
                                                    Relation::BB, Relation::BS, Relation::SS};
const char* to_string(Relation r) noexcept;
/// Throws parse for a tag outside the seven-relation vocabulary.
Relation relation_from_string(const std::string& tag);

struct KinPair {
    std::string image_a;
    std::string image_b;
    std::string subject_a;
    std::string subject_b;
    Relation relation = Relation::FS;
    int label = 1;  // 1 kin, 0 non-kin
};

inline constexpr std::size_t kFolds = 5;

struct FoldPlan {
    std::vector<std::vector<std::size_t>> folds;          // indices into the input pairs
    std::vector<std::vector<Relation>> relation_tags;     // parallel to folds
};

/// Shuffles the pairs of each relation and deals them round-robin over five
/// folds, continuing from where the previous relation stopped, so
/// per-relation and total fold sizes differ by at most one. Throws
/// insufficient_pairs for fewer than five kin pairs.
FoldPlan make_folds(std::span<const KinPair> pairs, std::uint64_t seed);

/// Family index per subject: connected components of the kin pairs, numbered
/// in order of first appearance.
std::map<std::string, std::size_t> subject_families(std::span<const KinPair> pairs);

/// One non-kin pair per kin pair, each image used once, partners always from
/// different families. Throws matching when the pool cannot be split that way.
std::vector<KinPair> gen_negatives(std::span<const KinPair> positives, std::uint64_t seed);

}  // namespace fcdbn
