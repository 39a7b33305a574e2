/**
 * @file config.hpp
 * @brief JSON run configuration and built-in presets
 *
 * A run config is a JSON object:
 *   model:      {kind, kappa, theta_bar, sigma, shift, r0, R, c_alpha}
 *               term functions are {family, params}; sigma adds "variance": bool
 *   engines:    list of engine ids
 *   maturities: list of T > 0, sorted
 *   seed:       MC seed
 *   fd, mc, closedform, volterra, rdtm, simulate: engine settings
 *   verify:     optional c_sigma / c_gamma overriding the derived constants
 * Presets are configs of the same shape; a user config is merge-patched on top.
 */

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zcb/closedform.hpp"
#include "zcb/errors.hpp"
#include "zcb/fd.hpp"
#include "zcb/mc.hpp"
#include "zcb/models.hpp"
#include "zcb/rdtm.hpp"
#include "zcb/volterra.hpp"

namespace zcb {

using Json = nlohmann::json;

inline const std::vector<std::string>& known_engines() {
    static const std::vector<std::string> ids = {"closedform", "fd",  "fd-forward", "mc",   "volterra-mbk",
                                                 "volterra-bk", "rdtm", "rdtm1",     "rdtm2"};
    return ids;
}

struct SimulateSettings {
    double horizon = 1.0;
    long n_paths = 10000;
    int n_steps = 500;
};

/// Parsed run configuration
struct RunConfig {
    ModelSpec model;
    std::vector<std::string> engines;
    std::vector<double> maturities;
    std::uint64_t seed = 42;
    GridSpec fd;
    McConfig mc;
    QuadratureSpec closedform;
    VolterraConfig volterra;
    bool volterra_nu_at_maturity = false;
    RdtmConfig rdtm;
    SimulateSettings simulate;
    Json verify_overrides = Json::object();  // c_sigma / c_gamma replacing the derived constants

    void validate() const {
        model.validate();
        require(!maturities.empty(), "config: maturity list is empty");
        for (std::size_t i = 0; i < maturities.size(); ++i) {
            require(maturities[i] > 0.0, "config: maturities must be > 0");
            if (i > 0) require(maturities[i] > maturities[i - 1], "config: maturities must be strictly increasing");
        }
        for (const auto& e : engines)
            require(std::find(known_engines().begin(), known_engines().end(), e) != known_engines().end(),
                    "config: unknown engine '" + e + "'");
    }
};

namespace detail {

inline TermFunction term_from_json(const Json& j) {
    if (j.is_number()) return TermFunction::constant(j.get<double>());
    require(j.is_object() && j.contains("family"), "config: term function needs a family");
    return TermFunction::make(family_from_string(j.at("family").get<std::string>()),
                              j.value("params", std::vector<double>{}));
}

inline Json term_to_json(const TermFunction& f) {
    require(f.family() != Family::Custom, "config: custom term functions cannot be serialised");
    return {{"family", to_string(f.family())}, {"params", f.params()}};
}

template <class T>
void read(const Json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline ModelSpec model_from_json(const Json& j) {
    ModelSpec m;
    const std::string kind = j.value("kind", std::string("MBK"));
    require(kind == "BK" || kind == "MBK", "config: model kind must be BK or MBK");
    m.kind = kind == "BK" ? ModelKind::BK : ModelKind::MBK;
    if (j.contains("kappa")) m.kappa = detail::term_from_json(j.at("kappa"));
    if (j.contains("theta_bar")) m.theta_bar = detail::term_from_json(j.at("theta_bar"));
    if (j.contains("shift")) m.shift = detail::term_from_json(j.at("shift"));
    if (j.contains("sigma")) {
        const Json& s = j.at("sigma");
        TermFunction f = detail::term_from_json(s);
        m.sigma = s.is_object() && s.value("variance", false) ? Volatility::variance(f) : Volatility::sigma(f);
    }
    detail::read(j, "r0", m.r0);
    detail::read(j, "R", m.R);
    if (j.contains("c_alpha") && !j.at("c_alpha").is_null()) m.c_alpha = j.at("c_alpha").get<double>();
    m.validate();
    return m;
}

inline Json model_to_json(const ModelSpec& m) {
    Json s = detail::term_to_json(m.sigma.f);
    s["variance"] = m.sigma.is_variance;
    Json j = {{"kind", to_string(m.kind)},
              {"kappa", detail::term_to_json(m.kappa)},
              {"theta_bar", detail::term_to_json(m.theta_bar)},
              {"sigma", s},
              {"shift", detail::term_to_json(m.shift)},
              {"r0", m.r0},
              {"R", m.R}};
    if (m.c_alpha) j["c_alpha"] = *m.c_alpha;
    return j;
}

inline RunConfig run_config_from_json(const Json& j) {
    RunConfig c;
    require(j.is_object(), "config: top level must be an object");
    require(j.contains("model"), "config: missing model");
    c.model = model_from_json(j.at("model"));
    detail::read(j, "engines", c.engines);
    detail::read(j, "maturities", c.maturities);
    detail::read(j, "seed", c.seed);
    if (j.contains("fd")) {
        const Json& f = j.at("fd");
        detail::read(f, "n_space", c.fd.n_space);
        detail::read(f, "n_time", c.fd.n_time);
        detail::read(f, "concentration", c.fd.concentration);
        detail::read(f, "rannacher_steps", c.fd.rannacher_steps);
        detail::read(f, "space_min", c.fd.space_min);
        detail::read(f, "space_max", c.fd.space_max);
    }
    if (j.contains("mc")) {
        const Json& f = j.at("mc");
        detail::read(f, "n_paths", c.mc.n_paths);
        detail::read(f, "n_steps", c.mc.n_steps);
        detail::read(f, "antithetic", c.mc.antithetic);
        if (f.contains("scheme")) c.mc.scheme = scheme_from_string(f.at("scheme").get<std::string>());
    }
    if (j.contains("closedform")) {
        const Json& f = j.at("closedform");
        detail::read(f, "omega_max", c.closedform.omega_max);
        detail::read(f, "n_nodes", c.closedform.n_nodes);
        detail::read(f, "tail_tol", c.closedform.tail_tol);
    }
    if (j.contains("volterra")) {
        const Json& f = j.at("volterra");
        detail::read(f, "n_space", c.volterra.n_space);
        detail::read(f, "n_time", c.volterra.n_time);
        detail::read(f, "tol", c.volterra.tol);
        std::string nu = f.value("nu", std::string("0"));
        require(nu == "0" || nu == "T", "config: volterra.nu must be \"0\" or \"T\"");
        c.volterra_nu_at_maturity = nu == "T";
    }
    if (j.contains("rdtm")) {
        const Json& f = j.at("rdtm");
        detail::read(f, "order", c.rdtm.order);
        detail::read(f, "time_quad_nodes", c.rdtm.time_quad_nodes);
        std::string nu = f.value("nu", std::string("0"));
        require(nu == "0" || nu == "T", "config: rdtm.nu must be \"0\" or \"T\"");
        c.rdtm.nu = nu == "T" ? NuAnchor::Maturity : NuAnchor::Zero;
    }
    if (j.contains("simulate")) {
        const Json& f = j.at("simulate");
        detail::read(f, "horizon", c.simulate.horizon);
        detail::read(f, "n_paths", c.simulate.n_paths);
        detail::read(f, "n_steps", c.simulate.n_steps);
    }
    if (j.contains("verify")) c.verify_overrides = j.at("verify");
    c.mc.seed = c.seed;
    c.fd.validate();
    c.mc.validate();
    c.closedform.validate();
    c.volterra.validate();
    c.rdtm.validate();
    return c;
}

/// Names of the built-in presets
inline std::vector<std::string> preset_names() {
    return {"numE", "appC", "appC-var", "recurrent", "stationary", "absorbed"};
}

/// Built-in preset as a JSON config
inline Json preset(const std::string& name) {
    auto tf = [](const char* fam, std::vector<double> p) { return Json{{"family", fam}, {"params", p}}; };
    auto mbk_const = [&](double kappa, double theta_tilde, double sigma) {
        return Json{{"kind", "MBK"},
                    {"kappa", tf("Constant", {kappa})},
                    {"theta_bar", tf("Constant", {theta_tilde - sigma * sigma / (2.0 * kappa)})},
                    {"sigma", tf("Constant", {sigma})},
                    {"r0", 0.05},
                    {"R", 1.0}};
    };
    if (name == "numE") {
        Json sigma = tf("RationalVariance", {0.64, -1.0, 5.0});
        sigma["variance"] = true;
        return {{"model",
                 {{"kind", "MBK"},
                  {"kappa", tf("Constant", {2.0})},
                  {"sigma", sigma},
                  {"r0", 0.03},
                  {"R", 0.03},
                  {"c_alpha", 0.3}}},
                {"engines", {"closedform", "fd", "mc"}},
                {"maturities", {1.0 / 12, 0.3, 0.5, 1, 2, 5, 10, 20, 30, 50}},
                {"mc", {{"n_paths", 100000}, {"n_steps", 500}}},
                {"simulate", {{"horizon", 1.0}, {"n_paths", 10000}, {"n_steps", 500}}}};
    }
    if (name == "appC" || name == "appC-var") {
        Json sigma = tf("ExpDecay", {0.5, 0.2});
        sigma["variance"] = name == "appC-var";
        return {{"model",
                 {{"kind", "BK"},
                  {"kappa", tf("Constant", {1.0})},
                  {"theta_bar", tf("ExpGrow", {0.05, 0.2})},
                  {"sigma", sigma},
                  {"r0", 0.01},
                  {"R", 1.0}}},
                {"engines", {"fd", "rdtm1", "rdtm2"}},
                {"maturities", {1.0 / 12, 0.3, 0.5, 1, 2, 5}},
                {"fd", {{"n_space", 300}, {"n_time", 200}}}};
    }
    // Constant-coefficient MBK presets, one per long-run regime of rbar
    if (name == "recurrent")
        return {{"model", mbk_const(2.0, 0.01, 0.2)}, {"engines", {"fd", "mc"}}, {"maturities", {1, 5}}};
    if (name == "stationary")
        return {{"model", mbk_const(0.5, 0.5, 0.3)}, {"engines", {"fd", "mc"}}, {"maturities", {1, 5}}};
    if (name == "absorbed")
        return {{"model", mbk_const(1.0, 0.1, 1.0)}, {"engines", {"fd", "mc"}}, {"maturities", {1, 5}}};
    throw InputError("unknown preset: " + name);
}

}  // namespace zcb
