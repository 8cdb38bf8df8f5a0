#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "fcdbn/cli.hpp"
#include "fcdbn/io.hpp"
#include "fcdbn/synth.hpp"

namespace fcdbn {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kCorpusSeedOffset = 0x5eed0000;

std::string fixed(double x, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

std::string join(const fs::path& dir, const std::string& rel) {
    const fs::path p(rel);
    return (p.is_absolute() ? p : dir / p).lexically_normal().string();
}

std::string dir_of(const std::string& file) { return fs::absolute(fs::path(file)).parent_path().string(); }

std::string relative_to(const std::string& target, const std::string& dir) {
    return fs::path(target).lexically_relative(fs::path(dir)).generic_string();
}

bool uses_optional(const std::vector<Region>& regions) {
    return std::ranges::any_of(regions, [](Region r) { return r == Region::binocular || r == Region::chin; });
}

std::vector<RegionSet> load_regions(const std::vector<std::string>& paths, const KvrlConfig& cfg) {
    std::vector<RegionSet> out;
    out.reserve(paths.size());
    const bool optional = uses_optional(cfg.regions);
    for (const std::string& p : paths) {
        RegionSet rs = extract_regions(load_image(p), cfg.fractions, optional);
        rs.source_id = p;
        out.push_back(std::move(rs));
    }
    return out;
}

// One path per non-blank line, relative to the list file.
std::vector<std::string> read_list(const std::string& path) {
    const std::string text = read_file(path);
    const std::string base = dir_of(path);
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        out.push_back(join(base, line));
    }
    require(!out.empty(), Errc::empty_input, path + ": no image paths");
    return out;
}

// Manifest with image fields turned into absolute paths, plus the unique
// images in order of first appearance.
struct Manifest {
    std::vector<KinPair> pairs;
    std::vector<std::string> images;
    std::vector<std::string> listed;  // image fields as written
    std::map<std::string, std::size_t> index;
};

Manifest load_manifest(const std::string& path) {
    Manifest m;
    m.pairs = read_manifest(path);
    require(!m.pairs.empty(), Errc::empty_input, path + ": no pairs");
    const std::string base = dir_of(path);
    for (KinPair& p : m.pairs)
        for (std::string* f : {&p.image_a, &p.image_b}) {
            const std::string abs = join(base, *f);
            if (m.index.emplace(abs, m.images.size()).second) {
                m.images.push_back(abs);
                m.listed.push_back(*f);
            }
            *f = abs;
        }
    return m;
}

std::vector<IndexedPair> indexed(const Manifest& m, std::span<const KinPair> pairs) {
    std::vector<IndexedPair> out;
    out.reserve(pairs.size());
    for (const KinPair& p : pairs) out.push_back({m.index.at(p.image_a), m.index.at(p.image_b), p.label});
    return out;
}

KvrlConfig kvrl_config(const RunConfig& cfg) {
    KvrlConfig k = cfg.kvrl;
    k.seed = cfg.seed;
    return k;
}

// Pretrained representation from disk, or trained from the corpus when the
// file is absent. `fresh` reports the second case.
KvrlModel representation(const RunConfig& cfg, std::ostream& out, bool& fresh) {
    fresh = !fs::exists(cfg.paths.pretrained);
    if (!fresh) {
        out << "loaded representation " << cfg.paths.pretrained << "\n";
        return load_model(cfg.paths.pretrained);
    }
    const auto corpus = load_regions(read_list(cfg.paths.corpus), cfg.kvrl);
    out << "pretraining on " << corpus.size() << " corpus faces\n";
    return pretrain_representation(corpus, kvrl_config(cfg));
}

std::size_t fold_workers() {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("FCDBN_THREADS"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        require(*end == '\0' && v >= 1, Errc::config, "FCDBN_THREADS must be a positive integer");
        n = static_cast<std::size_t>(v);
    }
    return std::min(n, kFolds);
}

std::string roc_csv(const RocResult& r) {
    std::string s = "threshold,fpr,tpr\n";
    for (const RocPoint& p : r.points) s += format_double(p.threshold) + ',' + format_double(p.fpr) + ',' + format_double(p.tpr) + '\n';
    return s;
}

std::string tpr_header() {
    std::string s;
    for (double f : kReportFprs) s += ",tpr_at_fpr_" + format_double(f);
    return s;
}

std::string tpr_fields(const RocResult& r) {
    std::string s;
    for (double f : kReportFprs) s += ',' + fixed(tpr_at_fpr(r, f));
    return s;
}

// ---- commands -------------------------------------------------------------

void cmd_synth(const RunConfig& cfg, std::ostream& out) {
    const SynthSettings& s = cfg.synth;
    const SynthKin kin = synth_kin(cfg.seed, s.families, s.members, s.separability, "k");
    const auto corpus =
        synth_faces(cfg.seed + kCorpusSeedOffset, s.corpus_families, s.corpus_members, s.separability, "c");

    const fs::path images = fs::path(cfg.paths.data_dir) / "images";
    ArtifactSet art;
    auto image_path = [&](const std::string& id) { return (images / (id + ".pgm")).string(); };
    for (const SynthFace& f : kin.faces) art.add(image_path(f.id), encode_pgm(f.image));
    for (const SynthFace& f : corpus) art.add(image_path(f.id), encode_pgm(f.image));

    const std::string mdir = dir_of(cfg.paths.manifest);
    std::vector<KinPair> rows = kin.pairs;
    for (KinPair& p : rows) {
        p.image_a = relative_to(image_path(p.image_a), mdir);
        p.image_b = relative_to(image_path(p.image_b), mdir);
    }
    art.add(cfg.paths.manifest, manifest_csv(rows));

    const std::string cdir = dir_of(cfg.paths.corpus);
    std::string list;
    for (const SynthFace& f : corpus) list += relative_to(image_path(f.id), cdir) + '\n';
    art.add(cfg.paths.corpus, list);
    art.commit();

    const auto n_kin = std::ranges::count_if(kin.pairs, [](const KinPair& p) { return p.label == 1; });
    out << "wrote " << kin.faces.size() << " kin-set faces, " << corpus.size() << " corpus faces, "
        << kin.pairs.size() << " pairs (" << n_kin << " kin)\n";
}

void cmd_pretrain(const RunConfig& cfg, std::ostream& out) {
    const auto corpus = load_regions(read_list(cfg.paths.corpus), cfg.kvrl);
    out << "pretraining on " << corpus.size() << " corpus faces\n";
    const KvrlModel model = pretrain_representation(corpus, kvrl_config(cfg));
    ArtifactSet art;
    art.add(cfg.paths.pretrained, model_to_json(model));
    art.commit();
    out << "representation width " << model.representation_size() << " -> " << cfg.paths.pretrained << "\n";
}

void cmd_train_kin(const RunConfig& cfg, std::ostream& out) {
    bool fresh = false;
    KvrlModel model = representation(cfg, out, fresh);
    const std::string pretrained_json = fresh ? model_to_json(model) : std::string();
    const Manifest m = load_manifest(cfg.paths.manifest);
    std::vector<KinPair> positives;
    for (const KinPair& p : m.pairs)
        if (p.label == 1) positives.push_back(p);
    require(!positives.empty(), Errc::empty_input, "manifest has no kin pairs");
    std::vector<KinPair> train = positives;
    const auto negatives = gen_negatives(positives, cfg.seed);
    train.insert(train.end(), negatives.begin(), negatives.end());

    const auto faces = load_regions(m.images, cfg.kvrl);
    const Mat enc = encode_faces(model, faces);
    const auto pairs = indexed(m, train);
    const MlpTrainResult res = train_classifier_encoded(model, enc, pairs, kvrl_config(cfg));

    const Vec scores = kin_scores(model, enc, pairs);
    std::vector<int> labels;
    for (const IndexedPair& p : pairs) labels.push_back(p.label);

    ArtifactSet art;
    if (fresh) art.add(cfg.paths.pretrained, pretrained_json);
    art.add(cfg.paths.model, model_to_json(model));
    art.commit();
    out << "trained on " << positives.size() << " kin and " << negatives.size() << " generated non-kin pairs\n"
        << "final loss " << fixed(res.final_loss) << ", training accuracy "
        << fixed(accuracy(scores, labels, cfg.kin_threshold)) << "\n"
        << "model -> " << cfg.paths.model << "\n";
}

struct FoldOutcome {
    std::vector<std::size_t> test;
    Vec scores;
    std::vector<int> labels;
    RocResult roc;
    double accuracy = 0.0;
};

void cmd_eval_kin(const RunConfig& cfg, std::ostream& out) {
    bool fresh = false;
    const KvrlModel rep = representation(cfg, out, fresh);
    const Manifest m = load_manifest(cfg.paths.manifest);
    const auto faces = load_regions(m.images, cfg.kvrl);
    const Mat enc = encode_faces(rep, faces);
    const FoldPlan plan = make_folds(m.pairs, cfg.seed);

    std::vector<FoldOutcome> folds(kFolds);
    std::vector<std::string> errors(kFolds);
    std::vector<Errc> codes(kFolds, Errc::invalid_parameter);
    auto run_fold = [&](std::size_t f) {
        try {
            std::vector<bool> held(m.pairs.size(), false);
            for (std::size_t i : plan.folds[f]) held[i] = true;
            std::vector<KinPair> train;
            for (std::size_t i = 0; i < m.pairs.size(); ++i)
                if (!held[i] && m.pairs[i].label == 1) train.push_back(m.pairs[i]);
            const auto negatives = gen_negatives(train, cfg.seed + f);
            train.insert(train.end(), negatives.begin(), negatives.end());

            KvrlModel model = rep;
            KvrlConfig k = kvrl_config(cfg);
            k.seed = cfg.seed + f;
            train_classifier_encoded(model, enc, indexed(m, train), k);

            FoldOutcome& o = folds[f];
            o.test = plan.folds[f];
            std::vector<KinPair> test;
            for (std::size_t i : o.test) test.push_back(m.pairs[i]);
            o.scores = kin_scores(model, enc, indexed(m, test));
            for (const KinPair& p : test) o.labels.push_back(p.label);
            o.roc = roc(o.scores, o.labels);
            o.accuracy = accuracy(o.scores, o.labels, cfg.kin_threshold);
        } catch (const Error& e) {
            errors[f] = e.what();
            codes[f] = e.code();
        } catch (const std::exception& e) {
            errors[f] = e.what();
            codes[f] = Errc::divergence;
        }
    };
    const std::size_t workers = fold_workers();
    for (std::size_t start = 0; start < kFolds; start += workers) {
        std::vector<std::jthread> pool;
        for (std::size_t f = start; f < std::min(kFolds, start + workers); ++f) pool.emplace_back(run_fold, f);
    }
    for (std::size_t f = 0; f < kFolds; ++f)
        if (!errors[f].empty()) throw Error(codes[f], "fold " + std::to_string(f + 1) + ": " + errors[f]);

    std::string folds_csv = "fold,pairs,accuracy,auc" + tpr_header() + "\n";
    std::string roc_rows = "fold,threshold,fpr,tpr\n";
    std::string score_rows = "fold,path_a,path_b,label,relation,score\n";
    double mean_acc = 0.0, mean_auc = 0.0;
    std::array<double, kReportFprs.size()> mean_tpr{};
    std::map<Relation, std::pair<std::size_t, std::size_t>> per_relation;  // correct, total
    std::size_t correct = 0, total = 0;
    for (std::size_t f = 0; f < kFolds; ++f) {
        const FoldOutcome& o = folds[f];
        folds_csv += std::to_string(f + 1) + ',' + std::to_string(o.test.size()) + ',' + fixed(o.accuracy) + ',' +
                     fixed(o.roc.auc) + tpr_fields(o.roc) + '\n';
        mean_acc += o.accuracy / kFolds;
        mean_auc += o.roc.auc / kFolds;
        for (std::size_t t = 0; t < kReportFprs.size(); ++t) mean_tpr[t] += tpr_at_fpr(o.roc, kReportFprs[t]) / kFolds;
        for (const RocPoint& p : o.roc.points)
            roc_rows += std::to_string(f + 1) + ',' + format_double(p.threshold) + ',' + format_double(p.fpr) + ',' +
                        format_double(p.tpr) + '\n';
        for (std::size_t j = 0; j < o.test.size(); ++j) {
            const KinPair& p = m.pairs[o.test[j]];
            const bool ok = (o.scores[j] >= cfg.kin_threshold) == (p.label == 1);
            auto& [c, n] = per_relation[p.relation];
            c += ok;
            ++n;
            correct += ok;
            ++total;
            score_rows += std::to_string(f + 1) + ',' + m.listed[m.index.at(p.image_a)] + ',' +
                          m.listed[m.index.at(p.image_b)] + ',' + (p.label ? "kin" : "nonkin") + ',' +
                          to_string(p.relation) + ',' + format_double(o.scores[j]) + '\n';
        }
    }
    folds_csv += "mean,," + fixed(mean_acc) + ',' + fixed(mean_auc);
    for (double t : mean_tpr) folds_csv += ',' + fixed(t);
    folds_csv += '\n';

    const bool filtered = cfg.kvrl.stage1_fc.filters > 0 && cfg.kvrl.stage1_fc.alpha > 0.0;
    std::string rel_header = "method", rel_row = filtered ? "KVRL-fcDBN" : "KVRL-DBN";
    for (Relation r : kRelations) {
        const auto it = per_relation.find(r);
        if (it == per_relation.end()) continue;
        rel_header += std::string(",") + to_string(r);
        rel_row += ',' + fixed(100.0 * static_cast<double>(it->second.first) / static_cast<double>(it->second.second), 1);
    }
    rel_header += ",overall\n";
    rel_row += ',' + fixed(100.0 * static_cast<double>(correct) / static_cast<double>(total), 1) + '\n';

    const fs::path dir = fs::path(cfg.paths.output_dir) / "eval";
    ArtifactSet art;
    if (fresh) art.add(cfg.paths.pretrained, model_to_json(rep));
    art.add((dir / "folds.csv").string(), folds_csv);
    art.add((dir / "relations.csv").string(), rel_header + rel_row);
    art.add((dir / "roc.csv").string(), roc_rows);
    art.add((dir / "scores.csv").string(), score_rows);
    art.commit();
    out << folds_csv << rel_header << rel_row << "results -> " << dir.string() << "\n";
}

void cmd_encode(const RunConfig& cfg, std::ostream& out) {
    const std::string model_path = fs::exists(cfg.paths.model) ? cfg.paths.model : cfg.paths.pretrained;
    const KvrlModel model = load_model(model_path);
    std::vector<std::string> images, listed;
    if (!cfg.paths.encode_list.empty()) {
        images = read_list(cfg.paths.encode_list);
        listed = images;
    } else {
        const Manifest m = load_manifest(cfg.paths.manifest);
        images = m.images;
        listed = m.listed;
    }
    const Mat enc = encode_faces(model, load_regions(images, cfg.kvrl));
    std::string csv = "image";
    for (std::size_t j = 0; j < enc.cols(); ++j) csv += ",e" + std::to_string(j);
    csv += '\n';
    for (std::size_t i = 0; i < enc.rows(); ++i) {
        csv += listed[i];
        for (double v : enc.row(i)) csv += ',' + format_double(v);
        csv += '\n';
    }
    const std::string path = (fs::path(cfg.paths.output_dir) / "encodings.csv").string();
    ArtifactSet art;
    art.add(path, csv);
    art.commit();
    out << "encoded " << enc.rows() << " faces with " << model_path << " -> " << path << "\n";
}

void cmd_fuse(const RunConfig& cfg, std::ostream& out) {
    const FusionSettings& fz = cfg.fusion;
    const auto train = cfg.paths.scores_train.empty() ? synth_scores(fz.synth, cfg.seed)
                                                      : parse_scores(read_file(cfg.paths.scores_train), cfg.paths.scores_train);
    const auto test = cfg.paths.scores_test.empty() ? synth_scores(fz.synth, cfg.seed + 1)
                                                    : parse_scores(read_file(cfg.paths.scores_test), cfg.paths.scores_test);
    require(!test.empty(), Errc::empty_input, "no test score records");
    const FusionModels models = fit_fusion(train, fz.components, cfg.seed, fz.svm);

    std::vector<int> labels;
    Vec face, plr, svm;
    std::string decisions = "index,genuine,raw_score,fused_score,accept\n";
    for (std::size_t i = 0; i < test.size(); ++i) {
        const ScoreRecord& r = test[i];
        labels.push_back(r.genuine);
        face.push_back(r.s);
        plr.push_back(plr_score(r, models.plr).log_plr);
        svm.push_back(svm_decision(models.svm, r));
        const BoostResult b = boost_decision(r, fz.method, models, fz.threshold);
        decisions += std::to_string(i) + ',' + std::to_string(r.genuine) + ',' + format_double(b.raw_score) + ',' +
                     format_double(b.fused_score) + ',' + (b.accept ? "1" : "0") + '\n';
    }
    const RocResult r_face = roc(face, labels), r_plr = roc(plr, labels), r_svm = roc(svm, labels);
    std::string summary = "curve,auc" + tpr_header() + "\n";
    summary += "face," + fixed(r_face.auc) + tpr_fields(r_face) + '\n';
    summary += "face+kin plr," + fixed(r_plr.auc) + tpr_fields(r_plr) + '\n';
    summary += "face+kin svm," + fixed(r_svm.auc) + tpr_fields(r_svm) + '\n';

    const fs::path dir = fs::path(cfg.paths.output_dir) / "fusion";
    ArtifactSet art;
    art.add((dir / "roc_face.csv").string(), roc_csv(r_face));
    art.add((dir / "roc_plr.csv").string(), roc_csv(r_plr));
    art.add((dir / "roc_svm.csv").string(), roc_csv(r_svm));
    art.add((dir / "summary.csv").string(), summary);
    art.add((dir / "decisions.csv").string(), decisions);
    art.add((dir / "models.json").string(), fusion_to_json(models));
    art.commit();
    out << summary << "results -> " << dir.string() << "\n";
}

void cmd_metrics(const RunConfig& cfg, const std::string& counts_override, std::ostream& out) {
    const std::string path = counts_override.empty() ? cfg.paths.counts : counts_override;
    const auto groups = parse_counts(read_file(path), path);
    std::string csv = "group,n,accuracy,hit_rate,false_alarm_rate,dprime,H_S,H_S_given_r,I_S_r\n";
    std::vector<std::pair<double, std::size_t>> acc;
    for (const auto& [name, c] : groups) {
        const auto& k = c.counts;
        const std::size_t n_kin = k[0][0] + k[0][1], n_non = k[1][0] + k[1][1];
        require(n_kin > 0 && n_non > 0, Errc::empty_input, path + ": group '" + name + "' lacks kin or non-kin trials");
        const double hit = static_cast<double>(k[0][0]) / static_cast<double>(n_kin);
        const double fa = static_cast<double>(k[1][0]) / static_cast<double>(n_non);
        const double d = dprime(hit, fa, n_kin, n_non);
        const double hs = stimulus_entropy(c), eq = equivocation(c), info = information_entropy(c);
        const double a = static_cast<double>(k[0][0] + k[1][1]) / static_cast<double>(c.total());
        acc.emplace_back(a, c.total());
        out << "[" << name << "]\n"
            << "H(S)=" << fixed(hs) << " bits\n"
            << "H(S|r)=" << fixed(eq) << " bits\n"
            << "I(S|r)=" << fixed(info) << " bits\n"
            << "d'=" << fixed(d) << "\n"
            << "accuracy=" << fixed(a) << "\n";
        csv += name + ',' + std::to_string(c.total()) + ',' + format_double(a) + ',' + format_double(hit) + ',' +
               format_double(fa) + ',' + format_double(d) + ',' + format_double(hs) + ',' + format_double(eq) + ',' +
               format_double(info) + '\n';
    }
    std::string ztests = "group_a,group_b,z,significant_95\n";
    for (std::size_t i = 0; i < groups.size(); ++i)
        for (std::size_t j = i + 1; j < groups.size(); ++j) {
            const ZTest z = ztest_proportions(acc[i].first, acc[i].second, acc[j].first, acc[j].second);
            out << "z(" << groups[i].first << " vs " << groups[j].first << ")=" << fixed(z.z)
                << (z.significant_95 ? " significant" : " not significant") << " at 95%\n";
            ztests += groups[i].first + ',' + groups[j].first + ',' + format_double(z.z) + ',' +
                      (z.significant_95 ? "1" : "0") + '\n';
        }
    const fs::path dir = fs::path(cfg.paths.output_dir) / "metrics";
    ArtifactSet art;
    art.add((dir / "metrics.csv").string(), csv);
    if (groups.size() > 1) art.add((dir / "ztests.csv").string(), ztests);
    art.commit();
}

}  // namespace

int exit_code_for(Errc code) noexcept {
    switch (code) {
        case Errc::usage:
        case Errc::config:
        case Errc::parse:
        case Errc::load:
        case Errc::io:
        case Errc::shape:
        case Errc::empty_input:
        case Errc::invalid_parameter:
        case Errc::invalid_kernel:
        case Errc::invalid_rate:
        case Errc::invalid_sample:
            return 2;
        default:
            return 3;
    }
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Kinship verification with filtered contractive deep belief networks", "fcdbn"};
    app.require_subcommand(1, 1);
    std::string config_path, counts_path;
    std::optional<std::int64_t> seed;
    app.add_option("--config", config_path, "JSON run configuration")->required();
    app.add_option("--seed", seed, "Override the configured seed");
    app.fallthrough();
    struct Sub {
        const char* name;
        const char* help;
    };
    const Sub subs[] = {{"synth", "Write a synthetic kin set and pretraining corpus"},
                        {"pretrain", "Unsupervised training of the two-stage representation"},
                        {"train-kin", "Train the kin classifier on the manifest"},
                        {"eval-kin", "Five-fold kinship evaluation"},
                        {"encode", "Write face encodings"},
                        {"fuse", "Boost face scores with kin scores"},
                        {"metrics", "Perception metrics from confusion counts"}};
    for (const Sub& s : subs) app.add_subcommand(s.name, s.help);
    app.get_subcommand("metrics")->add_option("--counts", counts_path, "Confusion-count CSV");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        RunConfig cfg = load_config(config_path);
        if (seed) {
            require(*seed >= 0, Errc::usage, "--seed must be non-negative");
            cfg.seed = static_cast<std::uint64_t>(*seed);
        }
        if (command == "synth")
            cmd_synth(cfg, out);
        else if (command == "pretrain")
            cmd_pretrain(cfg, out);
        else if (command == "train-kin")
            cmd_train_kin(cfg, out);
        else if (command == "eval-kin")
            cmd_eval_kin(cfg, out);
        else if (command == "encode")
            cmd_encode(cfg, out);
        else if (command == "fuse")
            cmd_fuse(cfg, out);
        else
            cmd_metrics(cfg, counts_path, out);
    } catch (const Error& e) {
        err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const fs::filesystem_error& e) {
        err << "error [io]: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

}  // namespace fcdbn
