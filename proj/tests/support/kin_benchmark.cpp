#include "kin_benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <map>

#include "fcdbn/evaluation.hpp"
#include "fcdbn/synth.hpp"

namespace fcdbn::testing {

namespace {

std::vector<RegionSet> regions_of(const std::vector<SynthFace>& faces, const KvrlConfig& cfg) {
    const bool optional = std::ranges::any_of(
        cfg.regions, [](Region r) { return r == Region::binocular || r == Region::chin; });
    std::vector<RegionSet> out;
    for (const SynthFace& f : faces) out.push_back(extract_regions(f.image, cfg.fractions, optional));
    return out;
}

}  // namespace

KinBenchmarkResult run_kin_benchmark(const KinBenchmark& bench, const KvrlConfig& cfg, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto corpus_faces =
        synth_faces(seed + 0x5eed0000, bench.corpus_families, bench.corpus_members, bench.separability, "c");
    const auto faces = synth_faces(seed, bench.families, bench.members, bench.separability, "k");

    KvrlConfig k = cfg;
    k.seed = seed;
    KvrlModel model = pretrain_representation(regions_of(corpus_faces, k), k);
    const Mat enc = encode_faces(model, regions_of(faces, k));

    RngStream rng = RngStream(seed).derive(0xbe4c);
    std::vector<std::size_t> fams(bench.families);
    for (std::size_t i = 0; i < fams.size(); ++i) fams[i] = i;
    shuffle(fams, rng);
    std::vector<bool> train_family(bench.families, false);
    for (std::size_t i = 0; i < bench.train_families; ++i) train_family[fams[i]] = true;

    std::map<std::size_t, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < faces.size(); ++i) members[faces[i].family].push_back(i);

    // Disjoint kin pairs inside each training family, then one generated
    // non-kin pair per kin pair.
    std::vector<KinPair> positives;
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < faces.size(); ++i) index[faces[i].id] = i;
    for (auto& [fam, idx] : members) {
        if (!train_family[fam]) continue;
        std::vector<std::size_t> order = idx;
        shuffle(order, rng);
        for (std::size_t j = 0; j + 1 < order.size(); j += 2) {
            KinPair p;
            p.image_a = p.subject_a = faces[order[j]].id;
            p.image_b = p.subject_b = faces[order[j + 1]].id;
            positives.push_back(p);
        }
    }
    std::vector<IndexedPair> train;
    for (const KinPair& p : positives) train.push_back({index.at(p.image_a), index.at(p.image_b), 1});
    for (const KinPair& p : gen_negatives(positives, seed))
        train.push_back({index.at(p.image_a), index.at(p.image_b), 0});
    train_classifier_encoded(model, enc, train, k);

    std::vector<std::size_t> test_faces;
    for (std::size_t i = 0; i < faces.size(); ++i)
        if (!train_family[faces[i].family]) test_faces.push_back(i);
    std::vector<IndexedPair> all_kin;
    for (std::size_t a = 0; a < test_faces.size(); ++a)
        for (std::size_t b = a + 1; b < test_faces.size(); ++b)
            if (faces[test_faces[a]].family == faces[test_faces[b]].family)
                all_kin.push_back({test_faces[a], test_faces[b], 1});
    shuffle(all_kin, rng);
    all_kin.resize(std::min(all_kin.size(), bench.test_kin));
    std::vector<IndexedPair> test = all_kin;
    while (test.size() < all_kin.size() + bench.test_nonkin) {
        const std::size_t a = test_faces[rng.below(test_faces.size())];
        const std::size_t b = test_faces[rng.below(test_faces.size())];
        if (faces[a].family != faces[b].family) test.push_back({a, b, 0});
    }
    const Vec scores = kin_scores(model, enc, test);
    std::vector<int> labels;
    for (const IndexedPair& p : test) labels.push_back(p.label);

    KinBenchmarkResult r;
    r.auc = roc(scores, labels).auc;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

}  // namespace fcdbn::testing
