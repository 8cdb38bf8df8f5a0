#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fcdbn/evaluation.hpp"
#include "fcdbn/fusion.hpp"
#include "fcdbn/kvrl.hpp"
#include "fcdbn/numeric.hpp"

namespace fcdbn {

// -- images ----------------------------------------------------------------------

/// Binary PGM (P5, maxval <= 255) to intensities in [0, 1]. Errors name the
/// byte offset where parsing stopped.
Mat parse_pgm(std::string_view bytes, const std::string& name = "<memory>");
Mat read_pgm(const std::string& path);
/// Intensities are clamped to [0, 1] and rounded to 255 levels.
std::string encode_pgm(const Mat& image);
void write_pgm(const std::string& path, const Mat& image);
/// read_pgm restricted to 64x64 aligned faces.
Mat load_image(const std::string& path);

// -- files -----------------------------------------------------------------------

std::string read_file(const std::string& path);
/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::string& path, std::string_view content);

/// Output files held in memory until commit(), so a failed command leaves
/// nothing behind.
class ArtifactSet {
public:
    void add(std::string path, std::string content);
    /// Writes every artifact to a temporary file, then renames them all.
    void commit();
    const std::vector<std::pair<std::string, std::string>>& items() const noexcept { return items_; }

private:
    std::vector<std::pair<std::string, std::string>> items_;
};

/// Shortest text that reads back to the same double.
std::string format_double(double x);

// -- tables ----------------------------------------------------------------------

/// Header path_a,path_b,label,relation,subject_a,subject_b; label is kin or nonkin.
std::string manifest_csv(std::span<const KinPair> pairs);
std::vector<KinPair> parse_manifest(std::string_view text, const std::string& name = "<memory>");
std::vector<KinPair> read_manifest(const std::string& path);

/// Header s,genuine,k,kin; k and kin are space-separated lists (possibly empty).
std::string scores_csv(std::span<const ScoreRecord> records);
std::vector<ScoreRecord> parse_scores(std::string_view text, const std::string& name = "<memory>");

/// Either a grouped table with header group,kk,kn,nk,nn or a bare 2x2 matrix
/// (two rows of two counts; the group is then named "all").
std::vector<std::pair<std::string, ConfusionCounts>> parse_counts(std::string_view text,
                                                                  const std::string& name = "<memory>");

// -- models ----------------------------------------------------------------------

inline constexpr const char* kModelVersion = "fcdbn-model/1";
inline constexpr const char* kFusionVersion = "fcdbn-fusion/1";

std::string model_to_json(const KvrlModel& model);
/// Throws parse for malformed text and load for version or dimension errors.
KvrlModel model_from_json(std::string_view text);
void save_model(const KvrlModel& model, const std::string& path);
KvrlModel load_model(const std::string& path);

std::string fusion_to_json(const FusionModels& models);
FusionModels fusion_from_json(std::string_view text);

}  // namespace fcdbn
