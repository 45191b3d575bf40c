#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include <json.hpp>

#include "tmsmd/duration_models.hpp"
#include "tmsmd/error.hpp"
#include "tmsmd/market_structure.hpp"
#include "tmsmd/msmd_inference.hpp"
#include "tmsmd/subordination.hpp"

namespace tmsmd::json_io {

using nlohmann::json;

/// JSON has no infinities or NaN; those become strings.
inline json number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

inline double to_double(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw DataError("expected a number, got " + j.dump());
}

inline json params_to_json(const DurationModelParams& params) {
    json out = json::object();
    if (const auto* m = std::get_if<MsmdParams>(&params)) out["kbar"] = m->kbar;
    if (const auto* t = std::get_if<TmsmdParams>(&params)) out["kbar"] = t->msmd.kbar;
    for (const auto& [name, value] : named_params(params)) out[name] = number(value);
    return out;
}

inline DurationModelParams params_from_json(const std::string& model, const json& j) {
    auto msmd = [&] {
        return MsmdParams{j.at("kbar").get<int>(), to_double(j.at("lambda")), to_double(j.at("gamma_kbar")),
                          to_double(j.at("b")), to_double(j.at("m0"))};
    };
    DurationModelParams out;
    if (model == "exp") out = ExpParams{to_double(j.at("nu"))};
    else if (model == "msmd") out = msmd();
    else if (model == "tmsmd") out = TmsmdParams{msmd(), to_double(j.at("nu_max"))};
    else throw DataError("unknown model '" + model + "'");
    validate(out);
    return out;
}

inline json fit_to_json(const FitResult& fit) {
    json out;
    out["model"] = model_name(fit.params);
    out["params"] = params_to_json(fit.params);
    out["loglik"] = number(fit.loglik);
    if (fit.se) {
        json se = json::object();
        for (const auto& [name, value] : *fit.se) se[name] = number(value);
        out["se"] = se;
    } else {
        out["se"] = nullptr;
    }
    out["converged"] = fit.converged;
    out["n_obs"] = fit.n_obs;
    out["seed"] = fit.seed;
    if (!fit.warnings.empty()) out["warnings"] = fit.warnings;
    return out;
}

inline FitResult fit_from_json(const json& j) {
    FitResult fit;
    fit.params = params_from_json(j.at("model").get<std::string>(), j.at("params"));
    fit.loglik = to_double(j.at("loglik"));
    if (j.contains("se") && !j.at("se").is_null()) {
        std::map<std::string, double> se;
        for (const auto& [name, value] : j.at("se").items()) se[name] = to_double(value);
        fit.se = std::move(se);
    }
    fit.converged = j.value("converged", false);
    fit.n_obs = j.value("n_obs", std::size_t{0});
    fit.seed = j.value("seed", std::uint64_t{0});
    return fit;
}

inline json gaussian_to_json(const GaussianParams& g) { return {{"mu", number(g.mu)}, {"sigma", number(g.sigma)}}; }

inline GaussianParams gaussian_from_json(const json& j) {
    GaussianParams g{to_double(j.at("mu")), to_double(j.at("sigma"))};
    validate(g);
    return g;
}

inline json compound_sidecar(const DurationModelParams& model, const GaussianParams& g, const CompoundSimulation& sim,
                             std::uint64_t seed) {
    return {{"model", model_name(model)},
            {"params", params_to_json(model)},
            {"gaussian", gaussian_to_json(g)},
            {"seed", seed},
            {"tau", number(sim.tau)},
            {"windows", sim.windows()},
            {"trades", sim.durations.size()},
            {"adjustments", {{"count", sim.adjustments.adjusted}, {"fraction", number(sim.adjustments.fraction)}}}};
}

inline json vol_curve_to_json(const VolCurve& curve) {
    json out;
    if (curve.cubic) {
        json coef = json::array();
        for (double c : curve.cubic->coef) coef.push_back(number(c));
        out["coefficients"] = coef;
    } else {
        out["coefficients"] = nullptr;
    }
    out["basis"] = "vol = c0 + c1*tau_med + c2*tau_med^2 + c3*tau_med^3";
    out["r_squared"] = number(curve.r_squared);
    out["residual_se"] = number(curve.residual_se);
    out["tau_med_range"] = {number(curve.tau_med_min), number(curve.tau_med_max)};
    out["tau"] = number(curve.tau);
    out["convention"] = {{"price_ref", number(curve.options.price_ref)},
                         {"annual_ms", number(curve.options.annual_ms)},
                         {"units", "percent"}};
    json failures = json::array();
    for (const auto& [lambda, why] : curve.failures) failures.push_back({{"lambda", number(lambda)}, {"error", why}});
    out["failures"] = failures;
    return out;
}

}  // namespace tmsmd::json_io
