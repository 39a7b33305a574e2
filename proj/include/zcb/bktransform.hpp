/**
 * @file bktransform.hpp
 * @brief Change of variables that turns the BK bond PDE into a heat equation
 *
 * x = a(t) z + b(t),  a(t) = e^{int_nu^t kappa},  b(t) = -int_nu^t kappa theta a,
 * tau(t) = (1/2) int_t^T sigma^2 a^2  (heat time elapsed from maturity).
 * Then v = e^{int_t^T s} F solves v_tau = v_xx - beta(t) e^{abar(t) x} v with
 * abar = 1/a and beta = 2 R e^{-b/a} / (sigma^2 a^2).
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "zcb/errors.hpp"
#include "zcb/models.hpp"
#include "zcb/quadrature.hpp"

namespace zcb {

class BkCoefficients {
public:
    BkCoefficients(const ModelSpec& m, double T, double nu) : m_(m), T_(T), nu_(nu) {
        require(m.kind == ModelKind::BK, "bk_coefficients: BK model required");
        require(T > 0.0 && nu >= 0.0 && nu <= T, "bk_coefficients: need 0 <= nu <= T, T > 0");
        detect_closed_form();
    }

    double maturity() const { return T_; }
    double nu() const { return nu_; }
    bool closed_form() const { return closed_; }

    double a(double t) const {
        if (closed_) return std::exp(kap_ * (t - nu_));
        return std::exp(signed_int_kappa(t));
    }
    double abar(double t) const { return 1.0 / a(t); }

    double b(double t) const {
        if (closed_) {
            return -kap_ * th0_ * std::exp(-kap_ * nu_) * exp_integral(th1_ + kap_, nu_, t);
        }
        double lo = std::min(nu_, t), hi = std::max(nu_, t);
        double v = quad::integrate([&](double u) { return m_.kappa.value(u) * m_.theta_bar.value(u) * a(u); }, lo, hi);
        return t >= nu_ ? -v : v;
    }

    double beta(double t) const {
        double at = a(t);
        return 2.0 * m_.R * std::exp(-b(t) / at) / (m_.sigma.var(t) * at * at);
    }

    /// Heat time elapsed from maturity, (1/2) int_t^T sigma^2 a^2
    double tau(double t) const {
        if (closed_) {
            return 0.5 * v0_ * std::exp(-2.0 * kap_ * nu_) * exp_integral(v1_ + 2.0 * kap_, t, T_);
        }
        return 0.5 * quad::integrate([&](double u) { double au = a(u); return m_.sigma.var(u) * au * au; }, t, T_);
    }

    /// Inverse of tau(t) on [0, T]
    double t_of_tau(double s) const {
        require(s >= 0.0 && s <= tau(0.0) * (1.0 + 1e-12), "t_of_tau: heat time outside [0, tau(0)]");
        if (closed_) {
            double l = v1_ + 2.0 * kap_;
            double c = 0.5 * v0_ * std::exp(-2.0 * kap_ * nu_);
            // e^{lT} - e^{lt} = l s / c
            double t = l == 0.0 ? T_ - s / c : T_ + std::log1p(-l * s * std::exp(-l * T_) / c) / l;
            return std::clamp(t, 0.0, T_);
        }
        if (s <= 0.0) return T_;
        return quad::solve_monotone([&](double t) { return tau(t); }, s, 0.0, T_);
    }

    /// Heat-equation coordinate of (t, z)
    double x_of(double t, double z) const { return a(t) * z + b(t); }

private:
    /// int_x0^x1 e^{l u} du, accurate as l -> 0
    static double exp_integral(double l, double x0, double x1) {
        if (l == 0.0) return x1 - x0;
        return std::exp(l * x0) * std::expm1(l * (x1 - x0)) / l;
    }

    double signed_int_kappa(double t) const {
        return t >= nu_ ? m_.kappa.integrate(nu_, t) : -m_.kappa.integrate(t, nu_);
    }

    void detect_closed_form() {
        if (!m_.kappa.is_constant()) return;
        auto expo = [](const TermFunction& f, double& c0, double& c1) {
            switch (f.family()) {
                case Family::Constant: c0 = f.params()[0]; c1 = 0.0; return true;
                case Family::ExpGrow: c0 = f.params()[0]; c1 = f.params()[1]; return true;
                case Family::ExpDecay: c0 = f.params()[0]; c1 = -f.params()[1]; return true;
                default: return false;
            }
        };
        double s0 = 0, s1 = 0;
        if (!expo(m_.theta_bar, th0_, th1_) || !expo(m_.sigma.f, s0, s1)) return;
        if (m_.sigma.is_variance) {
            v0_ = s0;
            v1_ = s1;
        } else {
            v0_ = s0 * s0;
            v1_ = 2.0 * s1;
        }
        kap_ = m_.kappa.value(0.0);
        closed_ = true;
    }

    ModelSpec m_;
    double T_, nu_;
    bool closed_ = false;
    double kap_ = 0, th0_ = 0, th1_ = 0, v0_ = 0, v1_ = 0;
};

inline BkCoefficients bk_coefficients(const ModelSpec& m, double T, double nu) { return {m, T, nu}; }

}  // namespace zcb
