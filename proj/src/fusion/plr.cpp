#include <algorithm>
#include <cmath>
#include <string>

#include "fcdbn/fusion.hpp"

namespace fcdbn {

void ScoreRecord::validate() const {
    require(std::isfinite(s), Errc::invalid_parameter, "face score must be finite");
    require(genuine == 0 || genuine == 1, Errc::invalid_parameter, "genuine label must be 0 or 1");
    require(k.size() == kin.size(), Errc::shape, "one kin label per kin score is required");
    for (std::size_t i = 0; i < k.size(); ++i) {
        require(std::isfinite(k[i]), Errc::invalid_parameter, "kin scores must be finite");
        require(kin[i] == 0 || kin[i] == 1, Errc::invalid_parameter, "kin labels must be 0 or 1");
    }
}

PlrModels fit_plr_models(std::span<const ScoreRecord> records, std::size_t components, std::uint64_t seed) {
    require(!records.empty(), Errc::insufficient_data, "no score records");
    Vec gen, imp, kin, non;
    for (const ScoreRecord& r : records) {
        r.validate();
        (r.genuine ? gen : imp).push_back(r.s);
        for (std::size_t i = 0; i < r.k.size(); ++i) (r.kin[i] ? kin : non).push_back(r.k[i]);
    }
    auto fit = [&](const Vec& x, std::uint64_t tag, const char* what) {
        try {
            return fit_gmm(x, components, seed + tag);
        } catch (const Error& e) {
            throw Error(e.code(), std::string(what) + ": " + e.what());
        }
    };
    return {fit(gen, 0, "genuine face scores"), fit(imp, 1, "impostor face scores"), fit(kin, 2, "kin scores"),
            fit(non, 3, "non-kin scores")};
}

namespace {

double floored_log(double log_p, std::size_t& hits) {
    static const double floor_log = std::log(kDensityFloor);
    if (!(log_p >= floor_log)) {
        ++hits;
        return floor_log;
    }
    return log_p;
}

}  // namespace

PlrResult plr_score(const ScoreRecord& rec, const PlrModels& models) {
    rec.validate();
    PlrResult out;
    out.log_plr = floored_log(models.genuine.log_density(rec.s), out.floor_hits) -
                  floored_log(models.impostor.log_density(rec.s), out.floor_hits);
    for (double k : rec.k)
        out.log_plr += floored_log(models.kin.log_density(k), out.floor_hits) -
                       floored_log(models.nonkin.log_density(k), out.floor_hits);
    out.plr = std::exp(std::clamp(out.log_plr, -700.0, 700.0));
    return out;
}

}  // namespace fcdbn
