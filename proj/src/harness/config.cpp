#include <cmath>
#include <filesystem>
#include <set>
#include <string>

#include <json.hpp>

#include "fcdbn/cli.hpp"
#include "fcdbn/io.hpp"

namespace fcdbn {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { fail(Errc::config, what); }

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) bad(where + " must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items())
        if (!ok.contains(key)) bad("unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& dst, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        dst = j.at(key).get<T>();
    } catch (const json::exception&) {
        bad(where + "." + key + " has the wrong type");
    }
}

void read_train(const json& j, TrainConfig& t, const std::string& where) {
    only_keys(j, where, {"learning_rate", "epochs", "batch_size", "cd_steps", "momentum", "filter_lr_scale"});
    read(j, "learning_rate", t.learning_rate, where);
    read(j, "epochs", t.epochs, where);
    read(j, "batch_size", t.batch_size, where);
    read(j, "cd_steps", t.cd_steps, where);
    read(j, "momentum", t.momentum, where);
    if (j.contains("filter_lr_scale")) {
        double s = 0.0;
        read(j, "filter_lr_scale", s, where);
        t.filter_lr_scale = s;
    }
}

void read_classifier(const json& j, MlpTrainConfig& c) {
    const std::string where = "kvrl.classifier";
    only_keys(j, where,
              {"learning_rate", "epochs", "batch_size", "momentum", "weight_decay", "dropout_input", "dropout_hidden",
               "hidden_activation", "standardize_inputs"});
    read(j, "learning_rate", c.learning_rate, where);
    read(j, "epochs", c.epochs, where);
    read(j, "batch_size", c.batch_size, where);
    read(j, "momentum", c.momentum, where);
    read(j, "weight_decay", c.weight_decay, where);
    read(j, "dropout_input", c.dropout_input, where);
    read(j, "dropout_hidden", c.dropout_hidden, where);
    read(j, "standardize_inputs", c.standardize_inputs, where);
    if (j.contains("hidden_activation")) {
        std::string a;
        read(j, "hidden_activation", a, where);
        if (a == "relu")
            c.hidden_activation = Activation::relu;
        else if (a == "sigmoid")
            c.hidden_activation = Activation::sigmoid;
        else
            bad("kvrl.classifier.hidden_activation must be relu or sigmoid");
    }
}

void read_fractions(const json& j, RegionFractions& f) {
    const std::string where = "kvrl.fractions";
    only_keys(j, where,
              {"eye_top", "eye_bottom", "nose_left", "nose_right", "nose_top", "nose_bottom", "binocular_top",
               "binocular_bottom", "chin_top", "chin_bottom", "chin_left", "chin_right"});
    read(j, "eye_top", f.eye_top, where);
    read(j, "eye_bottom", f.eye_bottom, where);
    read(j, "nose_left", f.nose_left, where);
    read(j, "nose_right", f.nose_right, where);
    read(j, "nose_top", f.nose_top, where);
    read(j, "nose_bottom", f.nose_bottom, where);
    read(j, "binocular_top", f.binocular_top, where);
    read(j, "binocular_bottom", f.binocular_bottom, where);
    read(j, "chin_top", f.chin_top, where);
    read(j, "chin_bottom", f.chin_bottom, where);
    read(j, "chin_left", f.chin_left, where);
    read(j, "chin_right", f.chin_right, where);
}

void read_kvrl(const json& j, KvrlConfig& k, double& threshold) {
    const std::string where = "kvrl";
    only_keys(j, where,
              {"regions", "fractions", "stage1_hidden", "stage2_hidden", "classifier_hidden", "filters", "filter_size",
               "alpha", "beta", "stage2_alpha", "stage1_train", "stage2_train", "classifier", "threshold"});
    if (j.contains("regions")) {
        std::vector<std::string> names;
        read(j, "regions", names, where);
        k.regions.clear();
        for (const auto& n : names) k.regions.push_back(region_from_string(n));
    }
    if (j.contains("fractions")) read_fractions(j.at("fractions"), k.fractions);
    read(j, "stage1_hidden", k.stage1_hidden, where);
    read(j, "stage2_hidden", k.stage2_hidden, where);
    read(j, "classifier_hidden", k.classifier_hidden, where);
    read(j, "filters", k.stage1_fc.filters, where);
    read(j, "filter_size", k.stage1_fc.filter_size, where);
    read(j, "alpha", k.stage1_fc.alpha, where);
    read(j, "beta", k.stage1_fc.beta, where);
    read(j, "stage2_alpha", k.stage2_alpha, where);
    if (j.contains("stage1_train")) read_train(j.at("stage1_train"), k.stage1_train, "kvrl.stage1_train");
    if (j.contains("stage2_train")) read_train(j.at("stage2_train"), k.stage2_train, "kvrl.stage2_train");
    if (j.contains("classifier")) read_classifier(j.at("classifier"), k.classifier);
    read(j, "threshold", threshold, where);
}

void read_fusion(const json& j, FusionSettings& f) {
    const std::string where = "fusion";
    only_keys(j, where, {"method", "components", "threshold", "svm", "synth"});
    if (j.contains("method")) {
        std::string m;
        read(j, "method", m, where);
        f.method = fusion_method_from_string(m);
    }
    read(j, "components", f.components, where);
    read(j, "threshold", f.threshold, where);
    if (j.contains("svm")) {
        const json& s = j.at("svm");
        only_keys(s, "fusion.svm", {"lambda", "learning_rate", "iterations"});
        read(s, "lambda", f.svm.lambda, "fusion.svm");
        read(s, "learning_rate", f.svm.learning_rate, "fusion.svm");
        read(s, "iterations", f.svm.iterations, "fusion.svm");
    }
    if (j.contains("synth")) {
        const json& s = j.at("synth");
        only_keys(s, "fusion.synth", {"genuine", "impostor", "kin_per_record", "face_separation", "kin_separation"});
        read(s, "genuine", f.synth.genuine, "fusion.synth");
        read(s, "impostor", f.synth.impostor, "fusion.synth");
        read(s, "kin_per_record", f.synth.kin_per_record, "fusion.synth");
        read(s, "face_separation", f.synth.face_separation, "fusion.synth");
        read(s, "kin_separation", f.synth.kin_separation, "fusion.synth");
    }
}

std::string resolve(const std::string& base, const std::string& p) {
    namespace fs = std::filesystem;
    const fs::path path(p);
    return (path.is_absolute() ? path : fs::path(base) / path).lexically_normal().string();
}

}  // namespace

void RunConfig::validate() const {
    require(synth.families >= 1 && synth.members >= 1 && synth.corpus_families >= 1 && synth.corpus_members >= 1,
            Errc::config, "synth counts must be >= 1");
    require(std::isfinite(synth.separability) && synth.separability >= 0.0 && synth.separability <= 1.0,
            Errc::config, "synth.separability must lie in [0, 1]");
    require(std::isfinite(kin_threshold) && kin_threshold >= 0.0 && kin_threshold <= 1.0, Errc::config,
            "kvrl.threshold must lie in [0, 1]");
    require(fusion.components >= 1 && fusion.components <= 16, Errc::config, "fusion.components must be in 1..16");
    require(!std::isnan(fusion.threshold), Errc::config, "fusion.threshold must be a number");
    require(fusion.synth.genuine >= 1 && fusion.synth.impostor >= 1, Errc::config,
            "fusion.synth needs genuine and impostor records");
    require(std::isfinite(fusion.synth.face_separation) && std::isfinite(fusion.synth.kin_separation), Errc::config,
            "fusion.synth separations must be finite");
    fusion.svm.validate();
    try {
        kvrl.validate();
    } catch (const Error& e) {
        throw Error(Errc::config, e.what());
    }
}

RunConfig parse_config(std::string_view text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(Errc::config, std::string("malformed config: ") + e.what());
    }
    only_keys(j, "config", {"seed", "paths", "synth", "kvrl", "fusion"});
    RunConfig c;
    read(j, "seed", c.seed, "config");

    json paths = j.contains("paths") ? j.at("paths") : json::object();
    only_keys(paths, "paths",
              {"data_dir", "output_dir", "manifest", "corpus", "pretrained", "model", "counts", "scores_train",
               "scores_test", "encode_list"});
    auto path_or = [&](const char* key, const std::string& fallback) {
        std::string v;
        read(paths, key, v, "paths");
        return v.empty() ? fallback : resolve(base_dir, v);
    };
    c.paths.data_dir = path_or("data_dir", resolve(base_dir, "data"));
    c.paths.output_dir = path_or("output_dir", resolve(base_dir, "out"));
    c.paths.manifest = path_or("manifest", resolve(c.paths.data_dir, "pairs.csv"));
    c.paths.corpus = path_or("corpus", resolve(c.paths.data_dir, "corpus.txt"));
    c.paths.pretrained = path_or("pretrained", resolve(c.paths.output_dir, "pretrained.json"));
    c.paths.model = path_or("model", resolve(c.paths.output_dir, "model.json"));
    c.paths.counts = path_or("counts", resolve(base_dir, "counts.csv"));
    c.paths.scores_train = path_or("scores_train", "");
    c.paths.scores_test = path_or("scores_test", "");
    c.paths.encode_list = path_or("encode_list", "");

    if (j.contains("synth")) {
        const json& s = j.at("synth");
        only_keys(s, "synth", {"families", "members", "separability", "corpus_families", "corpus_members"});
        read(s, "families", c.synth.families, "synth");
        read(s, "members", c.synth.members, "synth");
        read(s, "separability", c.synth.separability, "synth");
        read(s, "corpus_families", c.synth.corpus_families, "synth");
        read(s, "corpus_members", c.synth.corpus_members, "synth");
    }
    try {
        if (j.contains("kvrl")) read_kvrl(j.at("kvrl"), c.kvrl, c.kin_threshold);
        if (j.contains("fusion")) read_fusion(j.at("fusion"), c.fusion);
    } catch (const Error& e) {
        if (e.code() == Errc::config) throw;
        throw Error(Errc::config, e.what());
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::string& path) {
    namespace fs = std::filesystem;
    require(fs::is_regular_file(path), Errc::config, "config file '" + path + "' does not exist");
    const std::string base = fs::absolute(fs::path(path)).parent_path().string();
    try {
        return parse_config(read_file(path), base);
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.what());
    }
}

}  // namespace fcdbn
