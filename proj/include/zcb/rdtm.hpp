/**
 * @file rdtm.hpp
 * @brief Truncated Picard (reduced differential transform) series for the BK bond price
 *
 * With v = 1 + K v and K f = int_0^tau ds int dxi G(x - xi, tau - s) (-beta e^{abar xi}) f,
 * the series v ~ W_0 + W_1 + W_2 takes W_0 = 1, W_{k+1} = K W_k. The Gaussian
 * xi-integrals are done in closed form via int G(x - xi, d) e^{c xi} dxi = e^{c x + c^2 d}.
 */

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "zcb/bktransform.hpp"
#include "zcb/errors.hpp"
#include "zcb/models.hpp"
#include "zcb/quadrature.hpp"
#include "zcb/result.hpp"

namespace zcb {

enum class NuAnchor { Zero, Maturity };

struct RdtmConfig {
    int order = 2;
    NuAnchor nu = NuAnchor::Zero;
    int time_quad_nodes = 24;

    void validate() const {
        require(order == 1 || order == 2, "RdtmConfig: order must be 1 or 2");
        require(time_quad_nodes >= 8, "RdtmConfig: time_quad_nodes must be >= 8");
    }
};

namespace detail {

inline double guarded_exp(double e) {
    if (e > 700.0) throw NotConverged("rdtm: exponent overflow, maturity too large for the series", e);
    return std::exp(e);
}

/// beta and abar sampled at heat time s
struct HeatCoef {
    double beta, abar;
};

inline HeatCoef heat_coef(const BkCoefficients& co, double s) {
    double t = co.t_of_tau(s);
    return {co.beta(t), co.abar(t)};
}

}  // namespace detail

/// [W_0, ..., W_order] at heat time tau and transformed state x
inline std::vector<double> rdtm_terms(const BkCoefficients& co, const RdtmConfig& cfg, double tau, double x) {
    cfg.validate();
    require(tau >= 0.0, "rdtm_terms: tau must be >= 0");
    std::vector<double> W{1.0};
    if (tau == 0.0) {
        W.resize(cfg.order + 1, 0.0);
        return W;
    }
    const quad::Rule outer = quad::gauss_legendre(cfg.time_quad_nodes, 0.0, tau);
    std::vector<detail::HeatCoef> cs;
    for (double s : outer.x) cs.push_back(detail::heat_coef(co, s));

    double w1 = 0.0;
    for (std::size_t i = 0; i < outer.x.size(); ++i) {
        const auto& c = cs[i];
        w1 -= outer.w[i] * c.beta * detail::guarded_exp(c.abar * x + c.abar * c.abar * (tau - outer.x[i]));
    }
    W.push_back(w1);
    if (cfg.order == 1) return W;

    double w2 = 0.0;
    for (std::size_t i = 0; i < outer.x.size(); ++i) {
        const double s = outer.x[i];
        const auto& cs_ = cs[i];
        const quad::Rule inner = quad::gauss_legendre(cfg.time_quad_nodes, 0.0, s);
        double acc = 0.0;
        for (std::size_t j = 0; j < inner.x.size(); ++j) {
            const double k = inner.x[j];
            const auto ck = detail::heat_coef(co, k);
            const double sum = cs_.abar + ck.abar;
            acc += inner.w[j] * ck.beta *
                   detail::guarded_exp(ck.abar * ck.abar * (s - k) + sum * x + sum * sum * (tau - s));
        }
        w2 += outer.w[i] * cs_.beta * acc;
    }
    W.push_back(w2);
    return W;
}

/// Bond price at t = 0 from the truncated series
inline PriceResult zcb_price_rdtm(const ModelSpec& m, double T, const RdtmConfig& cfg = {}) {
    Stopwatch sw;
    require(m.kind == ModelKind::BK, "rdtm: BK model required");
    require(T > 0.0, "rdtm: maturity must be > 0");
    m.validate();
    cfg.validate();
    const BkCoefficients co(m, T, cfg.nu == NuAnchor::Zero ? 0.0 : T);
    const auto W = rdtm_terms(co, cfg, co.tau(0.0), co.x_of(0.0, m.z0()));
    double v = 0.0;
    for (double w : W) v += w;

    PriceResult r;
    r.engine = "rdtm" + std::to_string(cfg.order);
    r.maturity = T;
    r.price = std::exp(-m.shift.integrate(0.0, T)) * v;
    r.error_estimate = std::abs(W.back());
    r.settings = {{"order", double(cfg.order)},
                  {"nu", co.nu()},
                  {"time_quad_nodes", double(cfg.time_quad_nodes)}};
    if (T > 2.0) r.warnings.push_back("rdtm: the truncated series is accurate only for maturities up to about 2 years");
    if (!std::isfinite(r.price)) throw NotConverged("rdtm: non-finite series sum", r.price);
    if (v < 0.0 || v > 1.0) r.warnings.push_back("rdtm: series sum outside [0, 1], one or two terms are insufficient");
    r.wall_clock_ms = sw.ms();
    return r;
}

}  // namespace zcb
