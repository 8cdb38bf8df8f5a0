// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "kin_benchmark.hpp"
#include "oracles.hpp"
#include "fcdbn/cli.hpp"
#include "fcdbn/deep_net.hpp"
#include "fcdbn/evaluation.hpp"
#include "fcdbn/fusion.hpp"
#include "fcdbn/io.hpp"
#include "fcdbn/kvrl.hpp"
#include "fcdbn/rbm.hpp"
#include "fcdbn/synth.hpp"

using namespace fcdbn;
using namespace fcdbn::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

// ---- 1: fcRBM gradients ---------------------------------------------------------

Outcome gradient_check() {
    double worst = 0.0;
    std::size_t checked = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        LayerInit init;
        init.visible = 12;
        init.hidden = 6;
        init.units = UnitKind::gaussian;
        init.filters = 3;
        init.image_rows = 3;
        init.image_cols = 4;
        init.weight_std = 0.3;
        init.filter_noise = 0.2;
        RngStream rng(seed);
        RbmLayer l = make_layer(init, rng);
        for (double& a : l.hidden_bias) a = rng.gaussian(0.0, 0.3);
        for (double& b : l.visible_bias) b = rng.gaussian(0.0, 0.3);
        for (double& s : l.sigma) s = 0.5 + rng.uniform();
        l.alpha = 0.1;
        l.beta = 0.01;
        const Mat batch = random_mat(4, 12, seed + 100);
        const ObjectiveValue obj = fc_objective(l, batch);
        auto value = [&] { return fc_objective(l, batch).value; };
        auto check = [&](double analytic, double& slot) {
            worst = std::max(worst, relative_error(analytic, central_difference(value, slot, 1e-5)));
            ++checked;
        };
        for (std::size_t i = 0; i < l.weights.size(); ++i) check(obj.grad.weights.flat()[i], l.weights.flat()[i]);
        for (std::size_t j = 0; j < 6; ++j) check(obj.grad.hidden_bias[j], l.hidden_bias[j]);
        for (std::size_t i = 0; i < 12; ++i) check(obj.grad.visible_bias[i], l.visible_bias[i]);
        for (std::size_t k = 0; k < 3; ++k)
            for (std::size_t t = 0; t < l.filters[k].size(); ++t) check(obj.grad.filters[k].flat()[t], l.filters[k].flat()[t]);
    }
    return {worst < 1e-4, std::to_string(checked) + " coordinates, worst relative error " + fmt("%.2e", worst)};
}

// ---- 2: exact normalization ------------------------------------------------------

Outcome normalization() {
    double worst_total = 0.0;
    double worst_cond = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const RbmLayer l = random_layer(4, 3, UnitKind::bernoulli, seed, 1.0);
        // Z from the library energy over all (v, h); total probability from the free energy.
        double z = 0.0;
        for (std::uint64_t vi = 0; vi < 16; ++vi)
            for (std::uint64_t hi = 0; hi < 8; ++hi) z += std::exp(-energy_bernoulli(bits(vi, 4), bits(hi, 3), l));
        double total = 0.0;
        for (std::uint64_t vi = 0; vi < 16; ++vi) total += std::exp(-free_energy(bits(vi, 4), l)) / z;
        worst_total = std::max(worst_total, std::abs(total - 1.0));

        const Enumeration e = enumerate_joint(l);
        worst_total = std::max(worst_total, std::abs(e.z - z) / e.z);
        for (std::uint64_t vi = 0; vi < 16; ++vi) {
            double pv = 0.0;
            Vec on(3, 0.0);
            for (std::uint64_t hi = 0; hi < 8; ++hi) {
                pv += e.joint[vi][hi];
                for (std::size_t j = 0; j < 3; ++j) on[j] += e.joint[vi][hi] * bits(hi, 3)[j];
            }
            const Vec h = hidden_given_visible(bits(vi, 4), l);
            for (std::size_t j = 0; j < 3; ++j) worst_cond = std::max(worst_cond, std::abs(h[j] - on[j] / pv));
        }
        for (std::uint64_t hi = 0; hi < 8; ++hi) {
            double ph = 0.0;
            Vec on(4, 0.0);
            for (std::uint64_t vi = 0; vi < 16; ++vi) {
                ph += e.joint[vi][hi];
                for (std::size_t i = 0; i < 4; ++i) on[i] += e.joint[vi][hi] * bits(vi, 4)[i];
            }
            const Vec v = visible_given_hidden(bits(hi, 3), l).mean;
            for (std::size_t i = 0; i < 4; ++i) worst_cond = std::max(worst_cond, std::abs(v[i] - on[i] / ph));
        }
    }
    return {worst_total <= 1e-9 && worst_cond <= 1e-10,
            "|sum P - 1| " + fmt("%.1e", worst_total) + ", conditional error " + fmt("%.1e", worst_cond)};
}

// ---- 3: contractive reduction ----------------------------------------------------

Outcome contractive_reduction() {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed)
        for (UnitKind u : {UnitKind::bernoulli, UnitKind::gaussian}) {
            RbmLayer l = random_layer(10, 7, u, seed);
            l.sigma.assign(10, 1.0);
            const ContractivePenalty p = contractive_penalty(l, random_mat(6, 10, seed + 9), PenaltyActivation::linear);
            worst = std::max(worst, std::abs(p.value - sum_squares(l.weights.flat())));
        }
    return {worst <= 1e-12, "max |penalty - sum W^2| " + fmt("%.1e", worst)};
}

// ---- 4: CD-1 learns bars and stripes ---------------------------------------------

Outcome cd_learning() {
    const Mat data = bars_and_stripes();
    LayerInit init{.visible = 64, .hidden = 32};
    init.weight_std = 0.1;
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.epochs = 200;
    cfg.batch_size = 10;
    cfg.seed = 3;
    RngStream a(3);
    RngStream b(3);
    const TrainResult r1 = cd_train(make_layer(init, a), data, cfg);
    const TrainResult r2 = cd_train(make_layer(init, b), data, cfg);
    const double first = r1.reconstruction_history.front();
    const double last = r1.reconstruction_history.back();
    const bool same = r1.reconstruction_history == r2.reconstruction_history && r1.layer.weights == r2.layer.weights;
    return {last <= 0.5 * first && same, "epoch 1 error " + fmt("%.4f", first) + ", epoch 200 " + fmt("%.4f", last) +
                                             (same ? ", repeat run identical" : ", repeat run differs")};
}

// ---- 5, 6: kin benchmark ---------------------------------------------------------

KvrlConfig plain_config() {
    KvrlConfig c;
    c.stage1_fc.filters = 0;
    c.stage1_fc.alpha = 0.0;
    c.stage1_fc.beta = 0.0;
    c.stage2_alpha = 0.0;
    return c;
}

KvrlConfig face_only_config() {
    KvrlConfig c;
    c.regions = {Region::face};
    return c;
}

struct BenchRuns {
    std::vector<double> fc;
    std::vector<double> plain;
    std::vector<double> face;
    double seconds_5 = 0.0;
    double seconds_6 = 0.0;
};

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::string list(const std::vector<double>& v) {
    std::string s;
    for (double x : v) s += (s.empty() ? "" : " ") + fmt("%.4f", x);
    return s;
}

Outcome method_ordering(BenchRuns& runs) {
    KinBenchmark bench;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const KinBenchmarkResult fc = run_kin_benchmark(bench, KvrlConfig{}, seed);
        const KinBenchmarkResult plain = run_kin_benchmark(bench, plain_config(), seed);
        runs.fc.push_back(fc.auc);
        runs.plain.push_back(plain.auc);
        runs.seconds_5 += fc.seconds + plain.seconds;
        std::printf("  seed %llu: fcDBN %.4f (%.0f s), plain %.4f (%.0f s)\n", static_cast<unsigned long long>(seed),
                    fc.auc, fc.seconds, plain.auc, plain.seconds);
        std::fflush(stdout);
    }
    const double f = mean(runs.fc);
    const double p = mean(runs.plain);
    const bool in_time = runs.seconds_5 < 900.0;
    return {f >= p && f >= 0.85 && p >= 0.85 && in_time,
            "mean AUC fcDBN " + fmt("%.4f", f) + " [" + list(runs.fc) + "], plain " + fmt("%.4f", p) + " [" +
                list(runs.plain) + "], " + fmt("%.0f", runs.seconds_5) + " s of 900"};
}

Outcome region_ablation(BenchRuns& runs) {
    KinBenchmark bench;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const KinBenchmarkResult r = run_kin_benchmark(bench, face_only_config(), seed);
        runs.face.push_back(r.auc);
        runs.seconds_6 += r.seconds;
    }
    const double t = mean(runs.fc);
    const double f = mean(runs.face);
    return {t >= f, "mean AUC three-region " + fmt("%.4f", t) + ", face-only " + fmt("%.4f", f) + " [" +
                        list(runs.face) + "]"};
}

// ---- 7: fusion boost -------------------------------------------------------------

Outcome fusion_boost() {
    int strict_plr = 0;
    int strict_svm = 0;
    bool never_worse = true;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const ScoreSynthConfig cfg;
        const auto train = synth_scores(cfg, 1000 + seed);
        const auto test = synth_scores(cfg, 2000 + seed);
        const FusionModels models = fit_fusion(train, 2, seed);
        Vec face, plr, svm;
        std::vector<int> labels;
        for (const ScoreRecord& r : test) {
            face.push_back(r.s);
            plr.push_back(boost_decision(r, FusionMethod::plr, models, 0.0).fused_score);
            svm.push_back(boost_decision(r, FusionMethod::svm, models, 0.0).fused_score);
            labels.push_back(r.genuine);
        }
        const double tf = tpr_at_fpr(roc(face, labels), 0.01);
        const double tp = tpr_at_fpr(roc(plr, labels), 0.01);
        const double ts = tpr_at_fpr(roc(svm, labels), 0.01);
        never_worse = never_worse && tp >= tf && ts >= tf;
        strict_plr += tp > tf;
        strict_svm += ts > tf;
        detail += (detail.empty() ? "" : "; ") + std::string("seed ") + std::to_string(seed) + " face " +
                  fmt("%.3f", tf) + " plr " + fmt("%.3f", tp) + " svm " + fmt("%.3f", ts);
    }
    return {never_worse && strict_plr >= 2 && strict_svm >= 2, "TPR@FPR=0.01: " + detail};
}

// ---- 8: metric oracles -----------------------------------------------------------

double probit(double p) {
    double lo = -40.0;
    double hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = (lo + hi) / 2.0;
        (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
    }
    return (lo + hi) / 2.0;
}

Outcome metric_oracles() {
    const double d = dprime(0.84, 0.16);
    bool ok = std::abs(d - 1.989) <= 1e-3 && std::abs(d - (probit(0.84) - probit(0.16))) <= 1e-9;

    RngStream rng(8);
    double worst_h = 0.0;
    double worst_i = 0.0;
    bool bounded = true;
    for (int t = 0; t < 1000; ++t) {
        ConfusionCounts c;
        for (auto& row : c.counts)
            for (auto& x : row) x = rng.below(60);
        c.counts[1][1] += 1;
        const double n = static_cast<double>(c.total());
        const double ps[] = {static_cast<double>(c.counts[0][0] + c.counts[0][1]) / n,
                             static_cast<double>(c.counts[1][0] + c.counts[1][1]) / n};
        double mi = 0.0;
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) {
                const double pij = static_cast<double>(c.counts[i][j]) / n;
                const double pj = static_cast<double>(c.counts[0][j] + c.counts[1][j]) / n;
                if (pij > 0.0) mi += pij * std::log2(pij / (ps[i] * pj));
            }
        const double h = stimulus_entropy(c);
        const double info = h - equivocation(c);
        worst_h = std::max(worst_h, std::abs(h - entropy_bits(ps)));
        worst_i = std::max(worst_i, std::abs(info - mi));
        bounded = bounded && info >= -1e-12 && info <= h + 1e-12 && information_entropy(c) >= 0.0 &&
                  information_entropy(c) <= h;
    }
    ok = ok && worst_h <= 1e-12 && worst_i <= 1e-12 && bounded;

    double worst_auc = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        RngStream r(seed);
        Vec s(200);
        std::vector<int> y(200);
        for (std::size_t i = 0; i < 200; ++i) {
            y[i] = i < 2 ? static_cast<int>(i) : (r.bernoulli(0.5) ? 1 : 0);
            s[i] = std::round((r.gaussian() + y[i]) * 8.0) / 8.0;
        }
        worst_auc = std::max(worst_auc, std::abs(roc(s, y).auc - pairwise_auc(s, y)));
    }
    ok = ok && worst_auc <= 1e-9;
    return {ok, "d'(0.84,0.16)=" + fmt("%.6f", d) + ", entropy error " + fmt("%.1e", worst_h) +
                    ", information error " + fmt("%.1e", worst_i) + (bounded ? ", I within [0,H]" : ", I out of range") +
                    ", AUC error " + fmt("%.1e", worst_auc)};
}

// ---- 9: protocol -----------------------------------------------------------------

Outcome protocol() {
    int fold_failures = 0;
    int negative_failures = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        RngStream rng(seed);
        std::vector<KinPair> pairs;
        const std::size_t n = 5 + rng.below(80);
        for (std::size_t i = 0; i < n; ++i) {
            const std::string a = "p" + std::to_string(i);
            const std::string b = "c" + std::to_string(i);
            pairs.push_back({a + ".pgm", b + ".pgm", a, b, kRelations[rng.below(7)], 1});
        }
        const FoldPlan plan = make_folds(pairs, seed);
        std::set<std::size_t> seen;
        std::size_t count = 0;
        bool ok = plan.folds.size() == kFolds;
        for (Relation rel : kRelations) {
            std::size_t lo = n;
            std::size_t hi = 0;
            for (const auto& f : plan.folds) {
                std::size_t k = 0;
                for (std::size_t i : f) k += pairs[i].relation == rel;
                lo = std::min(lo, k);
                hi = std::max(hi, k);
            }
            ok = ok && hi - lo <= 1;
        }
        for (const auto& f : plan.folds) {
            count += f.size();
            seen.insert(f.begin(), f.end());
        }
        ok = ok && count == n && seen.size() == n;
        fold_failures += !ok;

        // Each pair is its own two-subject family, so every pairing across pairs is legal.
        const auto fam = subject_families(pairs);
        const auto neg = gen_negatives(pairs, seed);
        std::map<std::string, int> uses;
        bool nok = neg.size() == n;
        for (const KinPair& p : neg) {
            nok = nok && p.label == 0 && fam.at(p.subject_a) != fam.at(p.subject_b);
            ++uses[p.image_a];
            ++uses[p.image_b];
        }
        for (const auto& [img, k] : uses) nok = nok && k == 1;
        negative_failures += !nok;
    }
    return {fold_failures == 0 && negative_failures == 0,
            "100 instances: " + std::to_string(fold_failures) + " fold violations, " +
                std::to_string(negative_failures) + " negative-pair violations"};
}

// ---- 10: dropout -----------------------------------------------------------------

Outcome dropout_mean() {
    DenseLayer layer;
    layer.activation = Activation::linear;
    layer.weights = Mat(30, 8);
    RngStream init(10);
    for (double& w : layer.weights.flat()) w = init.uniform();
    layer.bias = Vec(8, 0.1);
    Vec x(30);
    for (double& v : x) v = 0.5 + init.uniform();
    RngStream rng(11);
    const Vec eval = dropout_layer_forward(layer, x, 0.5, rng, false);
    Vec acc(8, 0.0);
    for (int n = 0; n < 20000; ++n) {
        const Vec y = dropout_layer_forward(layer, x, 0.5, rng, true);
        for (std::size_t j = 0; j < 8; ++j) acc[j] += y[j] / 20000.0;
    }
    double worst = 0.0;
    for (std::size_t j = 0; j < 8; ++j) worst = std::max(worst, std::abs(acc[j] - eval[j]) / std::abs(eval[j]));
    return {worst <= 0.02, "max relative deviation " + fmt("%.4f", worst)};
}

// ---- 11: persistence -------------------------------------------------------------

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path().string());
    return files;
}

Outcome persistence() {
    KvrlConfig cfg;
    cfg.stage1_hidden = {32};
    cfg.stage2_hidden = {16};
    cfg.classifier_hidden = {8};
    cfg.stage1_train.epochs = 2;
    cfg.stage2_train.epochs = 2;
    cfg.classifier.epochs = 5;
    std::vector<RegionSet> faces;
    for (const SynthFace& f : synth_faces(3, 8, 3, 0.8)) faces.push_back(extract_regions(f.image));
    const std::vector<IndexedPair> pairs{{0, 1, 1}, {3, 4, 1}, {6, 8, 1}, {0, 5, 0}, {2, 9, 0}, {7, 20, 0}};
    const KvrlModel model = train_kvrl(faces, faces, pairs, cfg);
    const fs::path root = fs::temp_directory_path() / ("fcdbn_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    save_model(model, (root / "model.json").string());
    const KvrlModel back = load_model((root / "model.json").string());
    double worst = 0.0;
    for (const RegionSet& r : faces) worst = std::max(worst, max_abs_diff(encode_face(model, r), encode_face(back, r)));

    // Two CLI runs of the same configuration into separate directories.
    const char* config = R"({"seed": 5,
      "synth": {"families": 10, "members": 4, "corpus_families": 8, "corpus_members": 2},
      "kvrl": {"stage1_hidden": [16], "stage2_hidden": [8], "classifier_hidden": [8], "filters": 2,
               "stage1_train": {"epochs": 1}, "stage2_train": {"epochs": 1}, "classifier": {"epochs": 5}}})";
    std::vector<std::map<std::string, std::string>> trees;
    std::vector<std::string> logs;
    bool ran = true;
    for (const char* name : {"a", "b"}) {
        const fs::path dir = root / name;
        const fs::path log = root / (std::string(name) + ".stdout");
        fs::create_directories(dir);
        write_file_atomic((dir / "config.json").string(), config);
        write_file_atomic((dir / "counts.csv").string(), "group,kk,kn,nk,nn\nmale,30,10,20,40\nfemale,25,15,22,38\n");
        for (const char* cmd : {"synth", "train-kin", "eval-kin", "encode", "fuse", "metrics"}) {
            const std::string line = std::string(FCDBN_CLI_PATH) + " " + cmd + " --config " +
                                     (dir / "config.json").string() + " >> " + log.string();
            ran = ran && std::system(line.c_str()) == 0;
        }
        trees.push_back(tree(dir));
        // Console output names the run directory; everything else must match byte for byte.
        std::string text = read_file(log.string());
        const std::string prefix = dir.string();
        for (std::size_t at = text.find(prefix); at != std::string::npos; at = text.find(prefix, at))
            text.replace(at, prefix.size(), "<run>");
        logs.push_back(text);
    }
    fs::remove_all(root);
    std::size_t differing = logs[0] == logs[1] ? 0 : 1;
    for (const auto& [file, content] : trees[0])
        if (!trees[1].contains(file) || trees[1].at(file) != content) ++differing;
    const bool same = ran && trees[0].size() == trees[1].size() && differing == 0;
    return {worst <= 1e-12 && same, "encoding change " + fmt("%.1e", worst) + ", " + std::to_string(trees[0].size()) +
                                        " CLI files plus console log, " + std::to_string(differing) + " differ" +
                                        (ran ? "" : ", a CLI command failed")};
}

}  // namespace

int main() {
    BenchRuns runs;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"fcRBM gradients match finite differences", gradient_check},
        {"brute-force normalization and conditionals", normalization},
        {"linear contractive penalty is weight decay", contractive_reduction},
        {"CD-1 halves bars-and-stripes reconstruction error", cd_learning},
        {"fcDBN AUC >= plain DBN AUC, both >= 0.85", [&] { return method_ordering(runs); }},
        {"three-region AUC >= face-only AUC", [&] { return region_ablation(runs); }},
        {"fused TPR at FPR 0.01 >= face-only TPR", fusion_boost},
        {"metric oracles", metric_oracles},
        {"fold balance and single-use negatives", protocol},
        {"dropout Monte-Carlo mean matches the eval pass", dropout_mean},
        {"persistence and byte-reproducible CLI", persistence},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += !o.pass;
        std::printf("%s %2zu %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
