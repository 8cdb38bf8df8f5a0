#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fcdbn/kvrl.hpp"
#include "fcdbn/synth.hpp"

namespace fcdbn {

namespace {

constexpr std::uint64_t kBasisSeed = 0x5eedba515ULL;
constexpr double kContrast = 0.08;

std::string face_id(const std::string& prefix, std::size_t family, std::size_t member) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "_f%04zu_m%02zu", family, member);
    return prefix + buf;
}

Relation relation_of(const SynthFace& a, const SynthFace& b) {
    if (a.parent) {
        if (a.male) return b.male ? Relation::FS : Relation::FD;
        return b.male ? Relation::MS : Relation::MD;
    }
    if (a.male && b.male) return Relation::BB;
    if (!a.male && !b.male) return Relation::SS;
    return Relation::BS;
}

}  // namespace

const std::vector<Mat>& synth_basis() {
    static const std::vector<Mat> basis = [] {
        std::vector<Mat> out;
        RngStream rng(kBasisSeed);
        for (std::size_t m = 0; m < kBasisImages; ++m) {
            const double cx = 12.0 + 40.0 * rng.uniform();
            const double cy = 12.0 + 40.0 * rng.uniform();
            const double s = 4.0 + 8.0 * rng.uniform();
            Mat b(kFaceSide, kFaceSide);
            for (std::size_t y = 0; y < kFaceSide; ++y)
                for (std::size_t x = 0; x < kFaceSide; ++x) {
                    const double dx = static_cast<double>(x) - cx;
                    const double dy = static_cast<double>(y) - cy;
                    b(y, x) = std::exp(-(dx * dx + dy * dy) / (2.0 * s * s));
                }
            out.push_back(std::move(b));
        }
        return out;
    }();
    return basis;
}

Mat render_face(std::span<const double> weights) {
    require(weights.size() == kBasisImages, Errc::shape, "render_face needs 16 weights");
    const auto& basis = synth_basis();
    Mat img(kFaceSide, kFaceSide, 0.5);
    for (std::size_t j = 0; j < kBasisImages; ++j)
        for (std::size_t i = 0; i < img.size(); ++i) img.data()[i] += kContrast * weights[j] * basis[j].data()[i];
    for (double& x : img.flat()) x = std::round(std::clamp(x, 0.0, 1.0) * 255.0) / 255.0;
    return img;
}

std::vector<SynthFace> synth_faces(std::uint64_t seed, std::size_t families, std::size_t members,
                                   double separability, const std::string& prefix) {
    require(families >= 1 && members >= 1, Errc::invalid_parameter, "families and members must be >= 1");
    require(std::isfinite(separability) && separability >= 0.0 && separability <= 1.0, Errc::invalid_parameter,
            "separability must lie in [0, 1]");
    const std::size_t parents = members >= 4 ? 2 : 1;
    std::vector<SynthFace> faces;
    faces.reserve(families * members);
    for (std::size_t f = 0; f < families; ++f) {
        RngStream rng = RngStream(seed).derive(f);
        Vec z(kBasisImages);
        for (double& v : z) v = rng.gaussian();
        for (std::size_t m = 0; m < members; ++m) {
            SynthFace face;
            face.id = face_id(prefix, f, m);
            face.family = f;
            face.member = m;
            face.parent = m < parents && members > 1;
            face.male = face.parent ? m == 0 : rng.bernoulli(0.5);
            Vec w(kBasisImages);
            for (std::size_t j = 0; j < kBasisImages; ++j)
                w[j] = separability * z[j] + (1.0 - separability) * rng.gaussian();
            face.image = render_face(w);
            faces.push_back(std::move(face));
        }
    }
    return faces;
}

SynthKin synth_kin(std::uint64_t seed, std::size_t families, std::size_t members, double separability,
                   const std::string& prefix) {
    SynthKin out;
    out.faces = synth_faces(seed, families, members, separability, prefix);
    RngStream rng = RngStream(seed).derive(0xfa111e5ULL);
    std::vector<KinPair> kin;
    std::vector<std::size_t> kin_family;
    for (std::size_t f = 0; f < families; ++f) {
        const SynthFace* base = out.faces.data() + f * members;
        std::vector<const SynthFace*> parents;
        std::vector<const SynthFace*> children;
        for (std::size_t m = 0; m < members; ++m) (base[m].parent ? parents : children).push_back(base + m);
        shuffle(children, rng);
        std::size_t next = 0;
        auto add = [&](const SynthFace* a, const SynthFace* b) {
            kin.push_back({a->id, b->id, a->id, b->id, relation_of(*a, *b), 1});
            kin_family.push_back(f);
        };
        for (const SynthFace* p : parents)
            if (next < children.size()) add(p, children[next++]);
        for (; next + 1 < children.size(); next += 2) add(children[next], children[next + 1]);
    }
    std::vector<KinPair> non;
    if (families >= 2) {
        for (std::size_t i = 0; i < kin.size(); ++i) {
            const KinPair& p = kin[i];
            const std::size_t fa = kin_family[i];
            std::size_t fb = rng.below(families - 1);
            if (fb >= fa) ++fb;
            const SynthFace& b = out.faces[fb * members + rng.below(members)];
            non.push_back({p.image_a, b.id, p.subject_a, b.id, p.relation, 0});
        }
    }
    out.pairs = std::move(kin);
    out.pairs.insert(out.pairs.end(), non.begin(), non.end());
    return out;
}

}  // namespace fcdbn
