#include "fcdbn/fusion.hpp"

namespace fcdbn {

const char* to_string(FusionMethod m) noexcept {
    switch (m) {
        case FusionMethod::plr: return "plr";
        case FusionMethod::svm: return "svm";
    }
    return "?";
}

FusionMethod fusion_method_from_string(const std::string& name) {
    if (name == "plr") return FusionMethod::plr;
    if (name == "svm") return FusionMethod::svm;
    fail(Errc::config, "unknown fusion method '" + name + "' (expected plr or svm)");
}

FusionModels fit_fusion(std::span<const ScoreRecord> records, std::size_t components, std::uint64_t seed,
                        const SvmConfig& svm) {
    return {fit_plr_models(records, components, seed), svm_fit(records, svm)};
}

BoostResult boost_decision(const ScoreRecord& rec, FusionMethod method, const FusionModels& models,
                           double threshold) {
    BoostResult r;
    r.raw_score = rec.s;
    r.fused_score = method == FusionMethod::plr ? plr_score(rec, models.plr).log_plr : svm_decision(models.svm, rec);
    r.accept = r.fused_score >= threshold;
    return r;
}

BoostResult boost_decision(const ScoreRecord& rec, const std::string& method, const FusionModels& models,
                           double threshold) {
    return boost_decision(rec, fusion_method_from_string(method), models, threshold);
}

std::vector<ScoreRecord> synth_scores(const ScoreSynthConfig& cfg, std::uint64_t seed) {
    require(cfg.genuine + cfg.impostor > 0, Errc::invalid_parameter, "no records requested");
    RngStream rng(seed);
    std::vector<ScoreRecord> out;
    out.reserve(cfg.genuine + cfg.impostor);
    for (std::size_t i = 0; i < cfg.genuine + cfg.impostor; ++i) {
        ScoreRecord r;
        r.genuine = i < cfg.genuine ? 1 : 0;
        r.s = rng.gaussian(r.genuine ? cfg.face_separation : 0.0, 1.0);
        for (std::size_t j = 0; j < cfg.kin_per_record; ++j) {
            r.k.push_back(rng.gaussian(r.genuine ? cfg.kin_separation : 0.0, 1.0));
            r.kin.push_back(r.genuine);
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace fcdbn
