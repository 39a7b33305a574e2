/**
 * @file models.hpp
 * @brief Black-Karasinski and modified BK (stochastic Verhulst) short-rate models
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "zcb/errors.hpp"
#include "zcb/termstructure.hpp"

namespace zcb {

enum class ModelKind { BK, MBK };

inline std::string to_string(ModelKind k) { return k == ModelKind::BK ? "BK" : "MBK"; }

/// Short rate r = s(t) + R e^z.
///
/// BK:  dz = kappa (theta - z) dt + sigma dW, with theta held in `theta_bar`.
/// MBK: dz = kappa (theta_bar - e^z) dt + sigma dW, i.e. rbar = e^z follows
///      d rbar = kappa rbar (theta~ - rbar) dt + sigma rbar dW,
///      theta~ = theta_bar + sigma^2 / (2 kappa).
/// When `c_alpha` is set (MBK only) theta~ is the Whittaker-solvable
/// calibration C_a sigma^2/kappa + (2/kappa) sigma'/sigma and `theta_bar`
/// is ignored.
struct ModelSpec {
    ModelKind kind = ModelKind::MBK;
    TermFunction kappa = TermFunction::constant(1.0);
    TermFunction theta_bar = TermFunction::constant(0.0);
    Volatility sigma = Volatility::sigma(TermFunction::constant(0.2));
    TermFunction shift = TermFunction::constant(0.0);
    double r0 = 0.03;
    double R = 0.03;
    std::optional<double> c_alpha;

    double rbar0() const { return (r0 - shift.value(0.0)) / R; }
    double z0() const { return std::log(rbar0()); }

    /// Mean-reversion level of the process the model is written in
    double theta(double t) const {
        if (kind == ModelKind::MBK && c_alpha) return theta_tilde(t) - sigma.var(t) / (2.0 * kappa.value(t));
        return theta_bar.value(t);
    }

    /// Drift level of rbar in the Verhulst form (MBK)
    double theta_tilde(double t) const {
        if (c_alpha) {
            double k = kappa.value(t), v = sigma.var(t);
            return *c_alpha * v / k + sigma.dvar(t) / (k * v);
        }
        return theta_bar.value(t) + sigma.var(t) / (2.0 * kappa.value(t));
    }

    /// Map z -> r
    double rate(double t, double z) const { return shift.value(t) + R * std::exp(z); }
    /// Map r -> z
    double z_of_rate(double t, double r) const {
        double x = (r - shift.value(t)) / R;
        require(x > 0.0, "z_of_rate: r must exceed the shift");
        return std::log(x);
    }

    void validate() const {
        require(R > 0.0, "ModelSpec: R must be > 0");
        require(rbar0() > 0.0, "ModelSpec: r0 must exceed s(0)");
        require(kappa.value(0.0) > 0.0, "ModelSpec: kappa must be > 0");
        require(sigma.var(0.0) > 0.0, "ModelSpec: sigma must be > 0");
        if (c_alpha) {
            require(kind == ModelKind::MBK, "ModelSpec: c_alpha applies to MBK only");
            require(kappa.is_constant(), "ModelSpec: c_alpha calibration needs constant kappa");
        }
    }
};

/// (drift, diffusion) of rbar for MBK, of z for BK
struct DriftDiffusion {
    double drift;
    double diffusion;
};

inline DriftDiffusion drift_diffusion(const ModelSpec& m, double t, double state) {
    if (m.kind == ModelKind::MBK) {
        require(state > 0.0, "drift_diffusion: MBK state rbar must be > 0");
        return {m.kappa.value(t) * state * (m.theta_tilde(t) - state), m.sigma.sigma_at(t) * state};
    }
    return {m.kappa.value(t) * (m.theta_bar.value(t) - state), m.sigma.sigma_at(t)};
}

/// Conditional mean and variance of rbar_t = e^{z_t} given rbar_s under BK.
/// m = e^{-K(s,t)} log rbar_s + int_s^t kappa(u) e^{-K(u,t)} theta(u) du,
/// I = int_s^t sigma^2(u) e^{-2 K(u,t)} du, K(u,t) = int_u^t kappa.
struct Moments {
    double mean;
    double variance;
};

inline Moments bk_conditional_moments(const ModelSpec& m, double s, double t, double rbar_s) {
    require(m.kind == ModelKind::BK, "bk_conditional_moments: BK model required");
    require(0.0 <= s && s <= t, "bk_conditional_moments: need 0 <= s <= t");
    require(rbar_s > 0.0, "bk_conditional_moments: rbar_s must be > 0");
    if (s == t) return {rbar_s, 0.0};
    auto K = [&](double u) { return m.kappa.integrate(u, t); };
    double mu = std::exp(-K(s)) * std::log(rbar_s) +
                quad::integrate([&](double u) { return m.kappa.value(u) * std::exp(-K(u)) * m.theta_bar.value(u); }, s, t);
    double I = quad::integrate([&](double u) { return m.sigma.var(u) * std::exp(-2.0 * K(u)); }, s, t);
    double mean = std::exp(mu + 0.5 * I);
    return {mean, std::exp(2.0 * mu) * (std::exp(2.0 * I) - std::exp(I))};
}

/// rbar_t = X_t / (kappa(t) (1/(kappa(0) rbar0) + int_0^t X)) with X_0 = 1
inline double verhulst_exact_state(const ModelSpec& m, double t, double X_t, double int_X) {
    require(m.kind == ModelKind::MBK, "verhulst_exact_state: MBK model required");
    double den = m.kappa.value(t) * (1.0 / (m.kappa.value(0.0) * m.rbar0()) + int_X);
    if (!(den > 0.0)) throw InternalError("verhulst_exact_state: non-positive denominator");
    return X_t / den;
}

enum class Regime { Recurrent, StationaryGamma, AbsorbedAtZero };

inline std::string to_string(Regime r) {
    switch (r) {
        case Regime::Recurrent: return "Recurrent";
        case Regime::StationaryGamma: return "StationaryGamma";
        case Regime::AbsorbedAtZero: return "AbsorbedAtZero";
    }
    return "?";
}

struct RegimeReport {
    std::vector<double> times;
    std::vector<double> q_values;
    Regime classification = Regime::Recurrent;
    double shape = 0.0;  // -2 q(inf), StationaryGamma only
    double scale = 0.0;  // sigma^2(inf) / (2 kappa(inf))
};

/// q(t) = 1/2 - kappa theta~ / sigma^2
inline double regime_q(const ModelSpec& m, double t) {
    return 0.5 - m.kappa.value(t) * m.theta_tilde(t) / m.sigma.var(t);
}

inline RegimeReport classify_regime(const ModelSpec& m, double horizon, int samples = 1000) {
    require(m.kind == ModelKind::MBK, "classify_regime: MBK model required");
    require(horizon > 0.0 && samples >= 2, "classify_regime: bad horizon");
    constexpr double tol = 1e-12;
    RegimeReport rep;
    bool any_pos = false, any_zero = false;
    for (int i = 0; i < samples; ++i) {
        double t = horizon * i / (samples - 1);
        double q = regime_q(m, t);
        rep.times.push_back(t);
        rep.q_values.push_back(q);
        if (q > tol) any_pos = true;
        else if (q >= -tol) any_zero = true;
    }
    if (any_pos) {
        rep.classification = Regime::AbsorbedAtZero;
    } else if (any_zero) {
        rep.classification = Regime::Recurrent;
    } else {
        rep.classification = Regime::StationaryGamma;
        rep.shape = -2.0 * rep.q_values.back();
        rep.scale = m.sigma.var(horizon) / (2.0 * m.kappa.value(horizon));
    }
    return rep;
}

/// BK model sharing kappa, sigma, shift and R with an MBK model, with
/// theta_BK = theta_bar_MBK - 1 (the linearisation e^z ~ 1 + z)
inline ModelSpec bk_twin(const ModelSpec& mbk) {
    require(mbk.kind == ModelKind::MBK, "bk_twin: MBK model required");
    ModelSpec bk = mbk;
    bk.kind = ModelKind::BK;
    bk.c_alpha.reset();
    ModelSpec src = mbk;
    bk.theta_bar = TermFunction::custom([src](double t) { return src.theta(t) - 1.0; });
    return bk;
}

}  // namespace zcb
