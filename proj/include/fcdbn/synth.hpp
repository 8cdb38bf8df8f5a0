#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fcdbn/evaluation.hpp"
#include "fcdbn/numeric.hpp"

namespace fcdbn {

inline constexpr std::size_t kBasisImages = 16;

/// Sixteen fixed 64x64 images, each a Gaussian blob with a fixed centre and
/// width; shared by every synthetic corpus.
const std::vector<Mat>& synth_basis();

/// clip(0.5 + 0.08 * sum_j w_j B_j, 0, 1), quantized to 8 bits.
Mat render_face(std::span<const double> weights);

struct SynthFace {
    std::string id;       // also the subject id; one image per subject
    std::size_t family = 0;
    std::size_t member = 0;
    bool parent = false;
    bool male = false;
    Mat image;
};

struct SynthKin {
    std::vector<SynthFace> faces;
    /// Disjoint kin pairs inside each family followed by as many non-kin
    /// pairs; image fields hold face ids.
    std::vector<KinPair> pairs;
};

/// Faces only. Member weights are separability * z_family +
/// (1 - separability) * z_member with z ~ N(0, I).
std::vector<SynthFace> synth_faces(std::uint64_t seed, std::size_t families, std::size_t members,
                                   double separability, const std::string& prefix = "s");

/// Members 0 (and 1 when a family has four or more members) are the parents;
/// the rest are children. Parents pair with distinct children and leftover
/// children pair as siblings, which fixes the relation tag.
SynthKin synth_kin(std::uint64_t seed, std::size_t families, std::size_t members, double separability,
                   const std::string& prefix = "s");

}  // namespace fcdbn
