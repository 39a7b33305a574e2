/**
 * @file cli.hpp
 * @brief Commands behind the zcb tool: price, compare, simulate, verify
 *
 * Every command writes its files into `out_dir`. Output that depends only on
 * the config and seed goes to the main file; wall-clock timings go to a
 * separate timing.csv so the main file is byte-reproducible.
 */

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "zcb/closedform.hpp"
#include "zcb/config.hpp"
#include "zcb/fd.hpp"
#include "zcb/mc.hpp"
#include "zcb/parallel.hpp"
#include "zcb/rdtm.hpp"
#include "zcb/special.hpp"
#include "zcb/volterra.hpp"

namespace zcb {

/// Command-line options shared by all commands
struct CliOptions {
    std::string config_path;
    std::string preset;
    std::vector<std::string> engines;
    std::vector<double> maturities;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::optional<int> rdtm_order;
    std::optional<std::string> nu;
    bool antithetic = false;
    bool timing = true;
    std::optional<int> fd_space, fd_time;
    std::optional<long> mc_paths;
    std::optional<int> mc_steps;
    std::optional<std::string> mc_scheme;
};

/// One engine price, or the error that prevented it
struct EngineRecord {
    PriceResult result;
    std::string error;
    bool ok() const { return error.empty(); }
};

/// Exit codes
enum ExitCode { kOk = 0, kUsage = 1, kFailure = 2 };

inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

/// Build the run config: preset first, then the config file merge-patched over it, then flags
inline RunConfig load_run_config(const CliOptions& o) {
    Json j = Json::object();
    if (!o.preset.empty()) j = preset(o.preset);
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in) throw InputError("cannot open config file " + o.config_path);
        Json user;
        try {
            user = Json::parse(in);
        } catch (const Json::parse_error& e) {
            throw InputError(std::string("config parse error: ") + e.what());
        }
        j.merge_patch(user);
    }
    if (j.empty()) throw InputError("need --config or --preset");
    if (!o.engines.empty()) j["engines"] = o.engines;
    if (!o.maturities.empty()) j["maturities"] = o.maturities;
    if (o.seed) j["seed"] = *o.seed;
    if (o.rdtm_order) j["rdtm"]["order"] = *o.rdtm_order;
    if (o.nu) {
        j["rdtm"]["nu"] = *o.nu;
        j["volterra"]["nu"] = *o.nu;
    }
    if (o.antithetic) j["mc"]["antithetic"] = true;
    if (o.fd_space) j["fd"]["n_space"] = *o.fd_space;
    if (o.fd_time) j["fd"]["n_time"] = *o.fd_time;
    if (o.mc_paths) j["mc"]["n_paths"] = *o.mc_paths;
    if (o.mc_steps) j["mc"]["n_steps"] = *o.mc_steps;
    if (o.mc_scheme) j["mc"]["scheme"] = *o.mc_scheme;
    RunConfig c = run_config_from_json(j);
    c.validate();
    return c;
}

/// Price every maturity of the config with one engine; results are in maturity order
inline std::vector<EngineRecord> run_engine(const RunConfig& c, const std::string& id) {
    const auto& Ts = c.maturities;
    std::vector<EngineRecord> out(Ts.size());
    auto guarded = [&](std::size_t i, auto&& fn) {
        try {
            out[i].result = fn(Ts[i]);
        } catch (const std::exception& e) {
            out[i].result.engine = id;
            out[i].result.maturity = Ts[i];
            out[i].result.price = std::nan("");
            out[i].error = e.what();
        }
        out[i].result.engine = id;
    };
    if (id == "closedform") {
        std::optional<ClosedFormEngine> eng;
        std::string err;
        try {
            eng.emplace(c.model, c.closedform);
        } catch (const std::exception& e) {
            err = e.what();
        }
        for (std::size_t i = 0; i < Ts.size(); ++i)
            guarded(i, [&](double T) {
                if (!eng) throw InputError(err);
                return eng->price(T);
            });
        return out;
    }
    if (id == "mc") {
        for (std::size_t i = 0; i < Ts.size(); ++i) guarded(i, [&](double T) { return zcb_price_mc(c.model, T, c.mc).result; });
        return out;
    }
    auto per_maturity = [&](auto&& fn) {
        parallel_for(Ts.size(), [&](std::size_t i) { guarded(i, fn); });
    };
    if (id == "fd") {
        per_maturity([&](double T) { return zcb_price_fd(c.model, T, c.fd).result; });
    } else if (id == "fd-forward") {
        per_maturity([&](double T) { return density_forward(c.model, T, c.fd).result; });
    } else if (id == "volterra-mbk") {
        per_maturity([&](double T) { return solve_mbk_volterra(c.model, T, c.volterra).result; });
    } else if (id == "volterra-bk") {
        per_maturity([&](double T) { return solve_bk_volterra(c.model, T, c.volterra, c.volterra_nu_at_maturity).result; });
    } else if (id == "rdtm" || id == "rdtm1" || id == "rdtm2") {
        RdtmConfig r = c.rdtm;
        if (id != "rdtm") r.order = id == "rdtm1" ? 1 : 2;
        per_maturity([&](double T) { return zcb_price_rdtm(c.model, T, r); });
    } else {
        throw InputError("unknown engine: " + id);
    }
    return out;
}

namespace detail {

inline std::filesystem::path prepare_out(const std::string& dir) {
    std::filesystem::path p(dir.empty() ? "." : dir);
    std::filesystem::create_directories(p);
    return p;
}

inline void write_file(const std::filesystem::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw InputError("cannot write " + p.string());
    f << s;
}

inline Json record_json(const EngineRecord& r) {
    Json j = {{"engine", r.result.engine},
              {"maturity", r.result.maturity},
              {"price", r.ok() ? Json(r.result.price) : Json(nullptr)},
              {"error_estimate", r.result.error_estimate},
              {"settings", r.result.settings},
              {"warnings", r.result.warnings}};
    if (!r.ok()) j["error"] = r.error;
    return j;
}

/// Unique column labels; a repeated engine id gets a #n suffix
inline std::vector<std::string> labels(const std::vector<std::string>& ids) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        int n = 1;
        for (std::size_t j = 0; j < i; ++j) n += ids[j] == ids[i];
        out.push_back(n == 1 ? ids[i] : ids[i] + "#" + std::to_string(n));
    }
    return out;
}

inline int report_errors(const std::vector<std::vector<EngineRecord>>& all) {
    int bad = 0;
    for (const auto& rs : all)
        for (const auto& r : rs) {
            if (!r.ok()) {
                std::cerr << "error: " << r.result.engine << " T=" << fmt(r.result.maturity) << ": " << r.error << "\n";
                ++bad;
            }
            for (const auto& w : r.result.warnings)
                std::cerr << "warning: " << r.result.engine << " T=" << fmt(r.result.maturity) << ": " << w << "\n";
        }
    return bad;
}

}  // namespace detail

/// Price: one record per (engine, maturity) in prices.json and prices.csv
inline int cmd_price(const RunConfig& c, const std::string& out_dir, bool timing = true) {
    require(!c.engines.empty(), "price: no engines selected");
    const auto dir = detail::prepare_out(out_dir);
    std::vector<std::vector<EngineRecord>> all;
    std::vector<double> batch_ms;
    for (const auto& e : c.engines) {
        Stopwatch sw;
        all.push_back(run_engine(c, e));
        batch_ms.push_back(sw.ms());
    }
    Json recs = Json::array();
    std::ostringstream csv, tcsv;
    csv << "engine,maturity,price,error_estimate,status\n";
    tcsv << "engine,maturity,ms\n";
    for (std::size_t k = 0; k < all.size(); ++k) {
        for (const auto& r : all[k]) {
            recs.push_back(detail::record_json(r));
            csv << r.result.engine << "," << fmt(r.result.maturity) << "," << fmt(r.result.price) << ","
                << fmt(r.result.error_estimate) << "," << (r.ok() ? "ok" : "error") << "\n";
            tcsv << r.result.engine << "," << fmt(r.result.maturity) << "," << fmt(r.result.wall_clock_ms) << "\n";
            std::printf("%-13s T=%-10s price=%.10f%s\n", r.result.engine.c_str(), fmt(r.result.maturity).c_str(),
                        r.result.price, r.ok() ? "" : "  (failed)");
        }
        tcsv << c.engines[k] << ",total," << fmt(batch_ms[k]) << "\n";
    }
    detail::write_file(dir / "prices.json", recs.dump(2) + "\n");
    detail::write_file(dir / "prices.csv", csv.str());
    if (timing) detail::write_file(dir / "timing.csv", tcsv.str());
    return detail::report_errors(all) ? kFailure : kOk;
}

/// Compare: maturity, price per engine, pairwise relative differences in bp
inline int cmd_compare(const RunConfig& c, const std::string& out_dir, bool timing = true) {
    require(c.engines.size() >= 2, "compare: select at least two engines");
    const auto dir = detail::prepare_out(out_dir);
    const auto lab = detail::labels(c.engines);
    std::vector<std::vector<EngineRecord>> all;
    std::vector<double> batch_ms;
    for (const auto& e : c.engines) {
        Stopwatch sw;
        all.push_back(run_engine(c, e));
        batch_ms.push_back(sw.ms());
    }
    const std::size_t E = all.size();
    std::ostringstream csv, tcsv;
    csv << "maturity";
    for (const auto& l : lab) csv << "," << l;
    for (std::size_t a = 0; a < E; ++a)
        for (std::size_t b = a + 1; b < E; ++b) csv << ",bp " << lab[a] << "-" << lab[b];
    csv << "\n";
    tcsv << "maturity";
    for (const auto& l : lab) tcsv << ",ms " << l;
    tcsv << "\n";
    for (std::size_t i = 0; i < c.maturities.size(); ++i) {
        csv << fmt(c.maturities[i]);
        for (std::size_t a = 0; a < E; ++a) csv << "," << fmt(all[a][i].result.price);
        for (std::size_t a = 0; a < E; ++a)
            for (std::size_t b = a + 1; b < E; ++b) {
                double pa = all[a][i].result.price, pb = all[b][i].result.price;
                csv << "," << fmt((pa - pb) / pa * 1e4);
            }
        csv << "\n";
        tcsv << fmt(c.maturities[i]);
        for (std::size_t a = 0; a < E; ++a) tcsv << "," << fmt(all[a][i].result.wall_clock_ms);
        tcsv << "\n";
    }
    tcsv << "total";
    for (double ms : batch_ms) tcsv << "," << fmt(ms);
    tcsv << "\n";
    detail::write_file(dir / "compare.csv", csv.str());
    if (timing) detail::write_file(dir / "timing.csv", tcsv.str());

    // console table, columns as wide as their headers
    std::vector<std::string> head(lab);
    for (std::size_t a = 0; a < E; ++a)
        for (std::size_t b = a + 1; b < E; ++b) head.push_back("bp " + lab[a] + "-" + lab[b]);
    std::vector<int> width;
    for (const auto& h : head) width.push_back(std::max<int>(14, int(h.size())));
    std::printf("%-10s", "T");
    for (std::size_t h = 0; h < head.size(); ++h) std::printf(" %*s", width[h], head[h].c_str());
    std::printf("\n");
    for (std::size_t i = 0; i < c.maturities.size(); ++i) {
        std::printf("%-10.6g", c.maturities[i]);
        std::size_t h = 0;
        for (std::size_t a = 0; a < E; ++a, ++h) std::printf(" %*.10f", width[h], all[a][i].result.price);
        for (std::size_t a = 0; a < E; ++a)
            for (std::size_t b = a + 1; b < E; ++b, ++h) {
                double pa = all[a][i].result.price, pb = all[b][i].result.price;
                std::printf(" %*.4f", width[h], (pa - pb) / pa * 1e4);
            }
        std::printf("\n");
    }
    std::printf("%-10s", "ms");
    for (std::size_t a = 0; a < E; ++a) std::printf(" %*.1f", width[a], batch_ms[a]);
    std::printf("\n");
    return detail::report_errors(all) ? kFailure : kOk;
}

/// Simulate: paired BK / MBK paths on shared increments; statistics of r_BK - r_MBK
inline int cmd_simulate(const RunConfig& c, const std::string& out_dir) {
    const auto dir = detail::prepare_out(out_dir);
    ModelSpec bk, mbk;
    if (c.model.kind == ModelKind::MBK) {
        mbk = c.model;
        bk = bk_twin(mbk);
    } else {
        bk = c.model;
        mbk = bk;
        mbk.kind = ModelKind::MBK;
        ModelSpec src = bk;
        mbk.theta_bar = TermFunction::custom([src](double t) { return src.theta(t) + 1.0; });
    }
    McConfig mc = c.mc;
    mc.n_paths = c.simulate.n_paths;
    mc.n_steps = c.simulate.n_steps;
    const PairedStats ps = simulate_paired(bk, mbk, c.simulate.horizon, mc);
    std::ostringstream csv, dat;
    csv << "t,mean,min,max\n";
    for (std::size_t i = 0; i < ps.t.size(); ++i)
        csv << fmt(ps.t[i]) << "," << fmt(ps.mean[i]) << "," << fmt(ps.min[i]) << "," << fmt(ps.max[i]) << "\n";
    const std::vector<std::pair<const char*, const std::vector<double>*>> series = {
        {"mean", &ps.mean}, {"min", &ps.min}, {"max", &ps.max}};
    for (const auto& [name, v] : series) {
        dat << "# " << name << "\n";
        for (std::size_t i = 0; i < ps.t.size(); ++i) dat << fmt(ps.t[i]) << " " << fmt((*v)[i]) << "\n";
        dat << "\n\n";
    }
    detail::write_file(dir / "paths.csv", csv.str());
    detail::write_file(dir / "paths.dat", dat.str());
    std::printf("paired paths: %ld x %d steps, horizon %g\n", mc.n_paths, mc.n_steps, c.simulate.horizon);
    std::printf("min(r_BK - r_MBK) over all paths and steps = %.6g\n", ps.overall_min);
    return kOk;
}

/// One invariant check
struct VerifyItem {
    std::string name;
    double measured;
    double tolerance;
    bool pass;
};

/// Invariant suite: special functions, the branch-integral identity, constants and regimes.
/// The constants block uses model-derived values unless `overrides` supplies c_sigma / c_gamma.
inline std::vector<VerifyItem> verify_items(const ModelSpec& model, const Json& overrides = Json::object()) {
    std::vector<VerifyItem> items;
    auto add = [&](std::string name, double err, double tol) {
        items.push_back({std::move(name), err, tol, std::isfinite(err) && err < tol});
    };
    auto guarded = [&](const std::string& name, double tol, auto&& fn) {
        try {
            add(name, fn(), tol);
        } catch (const std::exception& e) {
            items.push_back({name + " (" + e.what() + ")", std::nan(""), tol, false});
        }
    };

    // Gamma reflection: Gamma(z) Gamma(1 - z) = pi / sin(pi z)
    for (Complex z : {Complex(0.3, 0.7), Complex(-1.4, 2.0), Complex(2.5, -0.5), Complex(0.25, 0.0)}) {
        guarded("reflection z=" + fmt(z.real()) + (z.imag() < 0 ? "" : "+") + fmt(z.imag()) + "i", 1e-12, [&] {
            Complex lhs = gamma_fn(z) * gamma_fn(1.0 - z), rhs = M_PI / std::sin(M_PI * z);
            return std::abs(lhs - rhs) / std::abs(rhs);
        });
    }

    // Whittaker W at the model constants (numE when the model has no c_alpha calibration)
    ModelSpec cf = model;
    if (!(model.kind == ModelKind::MBK && model.c_alpha && model.kappa.is_constant()))
        cf = model_from_json(preset("numE").at("model"));
    const ClosedFormConstants cc = build_constants(cf);
    const double k = cc.c_gamma;
    for (double om : {0.5, 2.0, 5.0})
        for (double w : {0.5, 2.0})
            guarded("W realness omega=" + fmt(om) + " w=" + fmt(w), 1e-10, [&] {
                Complex v = whittaker_w(k, Complex(0.0, om), w);
                return std::abs(v.imag()) / std::abs(v);
            });
    for (double y : {0.0, 0.3, 1.2})
        guarded("Gamma pair realness y=" + fmt(y), 1e-10, [&] {
            // general complex path, omega not flagged as real
            Complex v = std::exp(ln_gamma(Complex(0.5 - y, 1.7)) + ln_gamma(Complex(0.5 - y, -1.7)));
            return std::abs(v.imag()) / std::abs(v);
        });
    guarded("W small-x asymptotic", 1e-5, [&] {
        const double mu = 0.7, x = 1e-8;
        Complex lead = gamma_fn(2.0 * mu) / gamma_fn(0.5 + mu - k) * std::pow(x, 0.5 - mu);
        return std::abs(whittaker_w(k, mu, x) / lead - 1.0);
    });
    guarded("W large-x asymptotic", 1e-3, [&] {
        const double mu = 0.7, x = 1000.0;
        double lead = std::exp(-0.5 * x + k * std::log(x));
        return std::abs(whittaker_w(k, mu, x) / lead - 1.0);
    });

    // branch-integral identity
    for (double w : {0.5, 1.0, 2.0, 5.0})
        guarded("identity w=" + fmt(w), 1e-6, [&] { return verify_identity(cc, w).rel_err; });

    // constants consistency
    MbkConstants mk = MbkConstants::make(*cf.c_alpha, cf.kappa.value(0.0), cf.r0, cf.R, cf.sigma.var(0.0));
    if (overrides.contains("c_sigma")) mk.c_sigma = overrides.at("c_sigma").get<double>();
    if (overrides.contains("c_gamma")) mk.c_gamma = overrides.at("c_gamma").get<double>();
    {
        const std::string v = mk.violation();
        items.push_back({"constants" + (v.empty() ? std::string() : " (" + v + ")"), v.empty() ? 0.0 : 1.0, 0.5, v.empty()});
    }
    guarded("theta_tilde consistency", 1e-12, [&] {
        double err = 0.0;
        for (int i = 0; i <= 20; ++i) {
            double t = 2.5 * i;
            double a = cf.theta_tilde(t), b = implied_theta_tilde(mk, cf.sigma, t);
            err = std::max(err, std::abs(a - b) / std::max(1.0, std::abs(a)));
        }
        return err;
    });

    // long-run regimes of rbar
    const std::pair<const char*, Regime> regimes[] = {
        {"recurrent", Regime::Recurrent}, {"stationary", Regime::StationaryGamma}, {"absorbed", Regime::AbsorbedAtZero}};
    for (const auto& [name, want] : regimes)
        guarded(std::string("regime ") + name, 0.5, [&] {
            ModelSpec m = model_from_json(preset(name).at("model"));
            return classify_regime(m, 10.0).classification == want ? 0.0 : 1.0;
        });
    return items;
}

/// Verify: prints and writes verify.csv; nonzero exit on any failure
inline int cmd_verify(const RunConfig& c, const std::string& out_dir) {
    const auto dir = detail::prepare_out(out_dir);
    const auto items = verify_items(c.model, c.verify_overrides);
    std::ostringstream csv;
    csv << "check,measured,tolerance,status\n";
    int fails = 0;
    for (const auto& it : items) {
        csv << '"' << it.name << "\"," << fmt(it.measured) << "," << fmt(it.tolerance) << "," << (it.pass ? "pass" : "FAIL")
            << "\n";
        std::printf("%-4s  %-45s %-12.3g (tol %.0e)\n", it.pass ? "pass" : "FAIL", it.name.c_str(), it.measured,
                    it.tolerance);
        fails += !it.pass;
    }
    detail::write_file(dir / "verify.csv", csv.str());
    std::printf("%d checks, %d failed\n", int(items.size()), fails);
    return fails ? kFailure : kOk;
}

}  // namespace zcb
