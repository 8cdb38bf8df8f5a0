#include <algorithm>
#include <numeric>
#include <string>

#include "fcdbn/evaluation.hpp"

namespace fcdbn {

const char* to_string(Relation r) noexcept {
    switch (r) {
        case Relation::FS: return "FS";
        case Relation::FD: return "FD";
        case Relation::MS: return "MS";
        case Relation::MD: return "MD";
        case Relation::BB: return "BB";
        case Relation::BS: return "BS";
        case Relation::SS: return "SS";
    }
    return "?";
}

Relation relation_from_string(const std::string& tag) {
    for (Relation r : kRelations)
        if (tag == to_string(r)) return r;
    fail(Errc::parse, "unknown relation tag '" + tag + "' (expected FS, FD, MS, MD, BB, BS or SS)");
}

FoldPlan make_folds(std::span<const KinPair> pairs, std::uint64_t seed) {
    const auto kin = std::count_if(pairs.begin(), pairs.end(), [](const KinPair& p) { return p.label == 1; });
    require(kin >= static_cast<long>(kFolds), Errc::insufficient_pairs,
            "need at least 5 kin pairs, got " + std::to_string(kin));
    RngStream rng(seed);
    FoldPlan plan;
    plan.folds.resize(kFolds);
    plan.relation_tags.resize(kFolds);
    std::size_t offset = 0;
    for (Relation rel : kRelations) {
        std::vector<std::size_t> group;
        for (std::size_t i = 0; i < pairs.size(); ++i)
            if (pairs[i].relation == rel) group.push_back(i);
        shuffle(group, rng);
        for (std::size_t i = 0; i < group.size(); ++i) {
            const std::size_t f = (offset + i) % kFolds;
            plan.folds[f].push_back(group[i]);
            plan.relation_tags[f].push_back(rel);
        }
        offset = (offset + group.size()) % kFolds;
    }
    return plan;
}

std::map<std::string, std::size_t> subject_families(std::span<const KinPair> pairs) {
    std::map<std::string, std::size_t> index;
    std::vector<std::string> names;
    auto id = [&](const std::string& s) {
        auto [it, inserted] = index.try_emplace(s, names.size());
        if (inserted) names.push_back(s);
        return it->second;
    };
    for (const KinPair& p : pairs) {
        id(p.subject_a);
        id(p.subject_b);
    }
    std::vector<std::size_t> parent(names.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const KinPair& p : pairs) {
        if (p.label != 1) continue;
        const std::size_t a = find(index[p.subject_a]);
        const std::size_t b = find(index[p.subject_b]);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    // Renumber roots by first appearance.
    std::vector<std::size_t> label(names.size(), names.size());
    std::size_t next = 0;
    std::map<std::string, std::size_t> out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const std::size_t root = find(i);
        if (label[root] == names.size()) label[root] = next++;
        out[names[i]] = label[root];
    }
    return out;
}

std::vector<KinPair> gen_negatives(std::span<const KinPair> positives, std::uint64_t seed) {
    std::vector<KinPair> kin;
    for (const KinPair& p : positives)
        if (p.label == 1) kin.push_back(p);
    const std::size_t m = kin.size();
    require(m > 0, Errc::matching, "no kin pairs to match");
    const auto family = subject_families(kin);

    struct Image {
        std::string path;
        std::string subject;
        Relation relation;
        std::size_t family;
    };
    std::vector<Image> pool;
    std::map<std::string, bool> seen;
    for (const KinPair& p : kin) {
        if (seen.emplace(p.image_a, true).second) pool.push_back({p.image_a, p.subject_a, p.relation, family.at(p.subject_a)});
        if (seen.emplace(p.image_b, true).second) pool.push_back({p.image_b, p.subject_b, p.relation, family.at(p.subject_b)});
    }
    require(pool.size() >= 2 * m, Errc::matching,
            "pool has " + std::to_string(pool.size()) + " distinct images but " + std::to_string(2 * m) +
                " are needed for " + std::to_string(m) + " single-use negative pairs");

    RngStream rng(seed);
    shuffle(pool, rng);
    std::map<std::size_t, std::size_t> per_family;
    std::vector<Image> chosen;
    for (const Image& img : pool) {
        if (chosen.size() == 2 * m) break;
        if (per_family[img.family] < m) {
            ++per_family[img.family];
            chosen.push_back(img);
        }
    }
    if (chosen.size() < 2 * m) {
        std::size_t largest = 0;
        for (const auto& [f, n] : per_family) largest = std::max(largest, n);
        fail(Errc::matching, "only " + std::to_string(chosen.size()) + " of " + std::to_string(2 * m) +
                                 " images usable; one family holds " + std::to_string(largest) +
                                 " of them, more than half the pool");
    }

    // Group by family in a random family order. No family exceeds m entries,
    // so positions i and i + m always fall in different families.
    std::vector<std::size_t> fams;
    for (const auto& [f, n] : per_family)
        if (n > 0) fams.push_back(f);
    shuffle(fams, rng);
    std::vector<Image> ordered;
    for (std::size_t f : fams)
        for (const Image& img : chosen)
            if (img.family == f) ordered.push_back(img);

    std::vector<KinPair> out;
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        const Image& a = ordered[i];
        const Image& b = ordered[i + m];
        out.push_back({a.path, b.path, a.subject, b.subject, a.relation, 0});
    }
    return out;
}

}  // namespace fcdbn
