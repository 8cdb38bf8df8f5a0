#include <string>

#include <json.hpp>

#include "fcdbn/io.hpp"

namespace fcdbn {

using nlohmann::json;

namespace {

[[noreturn]] void bad_model(const std::string& what) { fail(Errc::load, what); }

template <typename T>
T field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) bad_model(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        bad_model(std::string("field '") + key + "' has the wrong type");
    }
}

Vec vec_field(const json& j, const char* key, std::size_t expected) {
    Vec v = field<Vec>(j, key);
    if (v.size() != expected)
        bad_model(std::string("dimension inconsistency: '") + key + "' has " + std::to_string(v.size()) +
                  " values, expected " + std::to_string(expected));
    return v;
}

const char* unit_name(UnitKind u) { return u == UnitKind::gaussian ? "gaussian" : "bernoulli"; }

UnitKind unit_from(const std::string& s) {
    if (s == "gaussian") return UnitKind::gaussian;
    if (s == "bernoulli") return UnitKind::bernoulli;
    bad_model("unknown unit kind '" + s + "'");
}

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::sigmoid: return "sigmoid";
        case Activation::relu: return "relu";
        case Activation::linear: return "linear";
    }
    return "?";
}

Activation activation_from(const std::string& s) {
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "relu") return Activation::relu;
    if (s == "linear") return Activation::linear;
    bad_model("unknown activation '" + s + "'");
}

json layer_json(const RbmLayer& l) {
    json filters = json::array();
    for (const Mat& k : l.filters) filters.push_back({{"rows", k.rows()}, {"cols", k.cols()}, {"values", k.values()}});
    return {{"visible", l.visible_size()},
            {"hidden", l.hidden_size()},
            {"unit_kind", unit_name(l.unit_kind)},
            {"alpha", l.alpha},
            {"beta", l.beta},
            {"image_rows", l.image_rows},
            {"image_cols", l.image_cols},
            {"weights", l.weights.values()},
            {"hidden_bias", l.hidden_bias},
            {"visible_bias", l.visible_bias},
            {"sigma", l.sigma},
            {"filters", filters}};
}

RbmLayer layer_from(const json& j) {
    RbmLayer l;
    const auto d = field<std::size_t>(j, "visible");
    const auto f = field<std::size_t>(j, "hidden");
    l.unit_kind = unit_from(field<std::string>(j, "unit_kind"));
    l.alpha = field<double>(j, "alpha");
    l.beta = field<double>(j, "beta");
    l.image_rows = field<std::size_t>(j, "image_rows");
    l.image_cols = field<std::size_t>(j, "image_cols");
    l.weights = Mat(d, f, vec_field(j, "weights", d * f));
    l.hidden_bias = vec_field(j, "hidden_bias", f);
    l.visible_bias = vec_field(j, "visible_bias", d);
    l.sigma = vec_field(j, "sigma", d);
    for (const json& k : field<json>(j, "filters")) {
        const auto r = field<std::size_t>(k, "rows");
        const auto c = field<std::size_t>(k, "cols");
        l.filters.emplace_back(r, c, vec_field(k, "values", r * c));
    }
    return l;
}

json stack_json(const DbnStack& s) {
    json layers = json::array();
    for (const RbmLayer& l : s.layers) layers.push_back(layer_json(l));
    return {{"dims", s.dims()}, {"layers", layers}};
}

DbnStack stack_from(const json& j) {
    DbnStack s;
    const auto dims = field<std::vector<std::size_t>>(j, "dims");
    for (const json& l : field<json>(j, "layers")) s.layers.push_back(layer_from(l));
    if (dims != s.dims()) bad_model("dimension inconsistency: declared dims do not match the layer shapes");
    return s;
}

json mlp_json(const MlpModel& m) {
    json layers = json::array();
    for (const DenseLayer& d : m.layers)
        layers.push_back({{"inputs", d.weights.rows()},
                          {"outputs", d.weights.cols()},
                          {"activation", activation_name(d.activation)},
                          {"weights", d.weights.values()},
                          {"bias", d.bias}});
    return {{"dropout_input", m.dropout_input}, {"dropout_hidden", m.dropout_hidden}, {"trained", m.trained},
            {"input_shift", m.input_shift},     {"input_scale", m.input_scale},       {"layers", layers}};
}

MlpModel mlp_from(const json& j) {
    MlpModel m;
    m.dropout_input = field<double>(j, "dropout_input");
    m.dropout_hidden = field<double>(j, "dropout_hidden");
    m.trained = field<bool>(j, "trained");
    m.input_shift = field<Vec>(j, "input_shift");
    m.input_scale = field<Vec>(j, "input_scale");
    for (const json& l : field<json>(j, "layers")) {
        DenseLayer d;
        const auto in = field<std::size_t>(l, "inputs");
        const auto out = field<std::size_t>(l, "outputs");
        d.activation = activation_from(field<std::string>(l, "activation"));
        d.weights = Mat(in, out, vec_field(l, "weights", in * out));
        d.bias = vec_field(l, "bias", out);
        m.layers.push_back(std::move(d));
    }
    return m;
}

json fractions_json(const RegionFractions& f) {
    return {{"eye_top", f.eye_top},           {"eye_bottom", f.eye_bottom},
            {"nose_left", f.nose_left},       {"nose_right", f.nose_right},
            {"nose_top", f.nose_top},         {"nose_bottom", f.nose_bottom},
            {"binocular_top", f.binocular_top}, {"binocular_bottom", f.binocular_bottom},
            {"chin_top", f.chin_top},         {"chin_bottom", f.chin_bottom},
            {"chin_left", f.chin_left},       {"chin_right", f.chin_right}};
}

RegionFractions fractions_from(const json& j) {
    RegionFractions f;
    f.eye_top = field<double>(j, "eye_top");
    f.eye_bottom = field<double>(j, "eye_bottom");
    f.nose_left = field<double>(j, "nose_left");
    f.nose_right = field<double>(j, "nose_right");
    f.nose_top = field<double>(j, "nose_top");
    f.nose_bottom = field<double>(j, "nose_bottom");
    f.binocular_top = field<double>(j, "binocular_top");
    f.binocular_bottom = field<double>(j, "binocular_bottom");
    f.chin_top = field<double>(j, "chin_top");
    f.chin_bottom = field<double>(j, "chin_bottom");
    f.chin_left = field<double>(j, "chin_left");
    f.chin_right = field<double>(j, "chin_right");
    return f;
}

json gmm_json(const GaussianMixture& g) {
    return {{"weights", g.weights}, {"means", g.means}, {"variances", g.variances}};
}

GaussianMixture gmm_from(const json& j) {
    GaussianMixture g;
    g.weights = field<Vec>(j, "weights");
    g.means = vec_field(j, "means", g.weights.size());
    g.variances = vec_field(j, "variances", g.weights.size());
    return g;
}

json parse_document(std::string_view text, const char* version) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(Errc::parse, std::string("malformed model document: ") + e.what());
    }
    const auto v = field<std::string>(doc, "version");
    if (v != version) bad_model("version mismatch: expected '" + std::string(version) + "', found '" + v + "'");
    return doc;
}

}  // namespace

std::string model_to_json(const KvrlModel& model) {
    json regions = json::array();
    for (Region r : model.regions) regions.push_back(to_string(r));
    json stage1 = json::array();
    for (const DbnStack& s : model.stage1) stage1.push_back(stack_json(s));
    const json doc = {{"version", kModelVersion},        {"regions", regions},
                      {"fractions", fractions_json(model.fractions)}, {"stage1", stage1},
                      {"stage2", stack_json(model.stage2)},           {"classifier", mlp_json(model.classifier)}};
    return doc.dump(1) + "\n";
}

KvrlModel model_from_json(std::string_view text) {
    const json doc = parse_document(text, kModelVersion);
    KvrlModel m;
    try {
        for (const auto& r : field<std::vector<std::string>>(doc, "regions")) m.regions.push_back(region_from_string(r));
        m.fractions = fractions_from(field<json>(doc, "fractions"));
        for (const json& s : field<json>(doc, "stage1")) m.stage1.push_back(stack_from(s));
        m.stage2 = stack_from(field<json>(doc, "stage2"));
        m.classifier = mlp_from(field<json>(doc, "classifier"));
        m.validate();
    } catch (const Error& e) {
        if (e.code() == Errc::load) throw;
        throw Error(Errc::load, std::string("inconsistent model: ") + e.what());
    }
    return m;
}

void save_model(const KvrlModel& model, const std::string& path) { write_file_atomic(path, model_to_json(model)); }

KvrlModel load_model(const std::string& path) {
    try {
        return model_from_json(read_file(path));
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.what());
    }
}

std::string fusion_to_json(const FusionModels& models) {
    const SvmModel& s = models.svm;
    const json doc = {{"version", kFusionVersion},
                      {"plr",
                       {{"genuine", gmm_json(models.plr.genuine)},
                        {"impostor", gmm_json(models.plr.impostor)},
                        {"kin", gmm_json(models.plr.kin)},
                        {"nonkin", gmm_json(models.plr.nonkin)}}},
                      {"svm",
                       {{"feature_width", s.feature_width},
                        {"shift", s.shift},
                        {"scale", s.scale},
                        {"weights", s.weights},
                        {"bias", s.bias},
                        {"degenerate", s.degenerate},
                        {"majority", s.majority},
                        {"margin", s.margin},
                        {"training_accuracy", s.training_accuracy},
                        {"objective", s.objective}}}};
    return doc.dump(1) + "\n";
}

FusionModels fusion_from_json(std::string_view text) {
    const json doc = parse_document(text, kFusionVersion);
    FusionModels m;
    const json& plr = field<json>(doc, "plr");
    m.plr = {gmm_from(field<json>(plr, "genuine")), gmm_from(field<json>(plr, "impostor")),
             gmm_from(field<json>(plr, "kin")), gmm_from(field<json>(plr, "nonkin"))};
    const json& s = field<json>(doc, "svm");
    m.svm.feature_width = field<std::size_t>(s, "feature_width");
    m.svm.shift = vec_field(s, "shift", m.svm.feature_width);
    m.svm.scale = vec_field(s, "scale", m.svm.feature_width);
    m.svm.weights = vec_field(s, "weights", m.svm.feature_width);
    m.svm.bias = field<double>(s, "bias");
    m.svm.degenerate = field<bool>(s, "degenerate");
    m.svm.majority = field<int>(s, "majority");
    m.svm.margin = field<double>(s, "margin");
    m.svm.training_accuracy = field<double>(s, "training_accuracy");
    m.svm.objective = field<double>(s, "objective");
    try {
        for (const GaussianMixture* g : {&m.plr.genuine, &m.plr.impostor, &m.plr.kin, &m.plr.nonkin}) g->validate();
    } catch (const Error& e) {
        throw Error(Errc::load, std::string("inconsistent fusion model: ") + e.what());
    }
    return m;
}

}  // namespace fcdbn
