/**
 * @file termstructure.hpp
 * @brief Time-dependent model coefficients with exact evaluation
 */

#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "zcb/errors.hpp"
#include "zcb/quadrature.hpp"

namespace zcb {

enum class Family { Constant, ExpDecay, ExpGrow, RationalVariance, PiecewiseLinear, Custom };

inline std::string to_string(Family f) {
    switch (f) {
        case Family::Constant: return "Constant";
        case Family::ExpDecay: return "ExpDecay";
        case Family::ExpGrow: return "ExpGrow";
        case Family::RationalVariance: return "RationalVariance";
        case Family::PiecewiseLinear: return "PiecewiseLinear";
        case Family::Custom: return "Custom";
    }
    return "?";
}

inline Family family_from_string(const std::string& s) {
    for (Family f : {Family::Constant, Family::ExpDecay, Family::ExpGrow,
                     Family::RationalVariance, Family::PiecewiseLinear}) {
        if (to_string(f) == s) return f;
    }
    throw InputError("unknown term function family: " + s);
}

/// Deterministic function of time with analytic value, slope and integral.
///
/// Parameter layout per family:
///   Constant          [c]
///   ExpDecay          [c0, c1]          c0 * exp(-c1 t)
///   ExpGrow           [c0, c1]          c0 * exp(c1 t)
///   RationalVariance  [a, b, c]         a + b / (t + c)
///   PiecewiseLinear   [t0, v0, t1, v1, ...]  flat outside the knots
/// Custom wraps an arbitrary callable; its integral is by quadrature.
class TermFunction {
public:
    TermFunction() : TermFunction(constant(0.0)) {}

    static TermFunction constant(double c) { return {Family::Constant, {c}}; }
    static TermFunction exp_decay(double c0, double c1) { return {Family::ExpDecay, {c0, c1}}; }
    static TermFunction exp_grow(double c0, double c1) { return {Family::ExpGrow, {c0, c1}}; }
    static TermFunction rational_variance(double a, double b, double c) {
        return {Family::RationalVariance, {a, b, c}};
    }
    static TermFunction piecewise_linear(const std::vector<double>& t, const std::vector<double>& v) {
        require(t.size() == v.size() && !t.empty(), "piecewise_linear: knot/value size mismatch");
        std::vector<double> p;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (i > 0) require(t[i] > t[i - 1], "piecewise_linear: knots must increase");
            p.push_back(t[i]);
            p.push_back(v[i]);
        }
        return {Family::PiecewiseLinear, std::move(p)};
    }
    static TermFunction custom(std::function<double(double)> f,
                               std::function<double(double)> df = {}) {
        TermFunction r(Family::Custom, {});
        r.fn_ = std::make_shared<Fn>(Fn{std::move(f), std::move(df)});
        return r;
    }

    /// Build from family and flat parameter list (validates arity)
    static TermFunction make(Family f, const std::vector<double>& p) {
        switch (f) {
            case Family::Constant:
                require(p.size() == 1, "Constant takes 1 parameter");
                return constant(p[0]);
            case Family::ExpDecay:
                require(p.size() == 2, "ExpDecay takes 2 parameters");
                return exp_decay(p[0], p[1]);
            case Family::ExpGrow:
                require(p.size() == 2, "ExpGrow takes 2 parameters");
                return exp_grow(p[0], p[1]);
            case Family::RationalVariance:
                require(p.size() == 3, "RationalVariance takes 3 parameters");
                return rational_variance(p[0], p[1], p[2]);
            case Family::PiecewiseLinear: {
                require(p.size() >= 2 && p.size() % 2 == 0, "PiecewiseLinear takes (t, v) pairs");
                std::vector<double> t, v;
                for (std::size_t i = 0; i < p.size(); i += 2) {
                    t.push_back(p[i]);
                    v.push_back(p[i + 1]);
                }
                return piecewise_linear(t, v);
            }
            case Family::Custom: break;
        }
        throw InputError("Custom term functions cannot be built from parameters");
    }

    Family family() const { return family_; }
    const std::vector<double>& params() const { return p_; }
    bool is_constant() const { return family_ == Family::Constant; }

    double value(double t) const {
        check_time(t);
        switch (family_) {
            case Family::Constant: return p_[0];
            case Family::ExpDecay: return p_[0] * std::exp(-p_[1] * t);
            case Family::ExpGrow: return p_[0] * std::exp(p_[1] * t);
            case Family::RationalVariance: return p_[0] + p_[1] / (t + p_[2]);
            case Family::PiecewiseLinear: {
                std::size_t k = segment(t);
                if (t <= p_[0]) return p_[1];
                if (k + 1 >= knots()) return p_[2 * k + 1];
                double t0 = p_[2 * k], t1 = p_[2 * k + 2];
                double w = (t - t0) / (t1 - t0);
                return (1.0 - w) * p_[2 * k + 1] + w * p_[2 * k + 3];
            }
            case Family::Custom: return fn_->f(t);
        }
        return 0.0;
    }

    /// d/dt value(t); right derivative at piecewise-linear knots
    double derivative(double t) const {
        check_time(t);
        switch (family_) {
            case Family::Constant: return 0.0;
            case Family::ExpDecay: return -p_[1] * value(t);
            case Family::ExpGrow: return p_[1] * value(t);
            case Family::RationalVariance: return -p_[1] / ((t + p_[2]) * (t + p_[2]));
            case Family::PiecewiseLinear: {
                std::size_t k = segment(t);
                if (t < p_[0] || k + 1 >= knots()) return 0.0;
                return (p_[2 * k + 3] - p_[2 * k + 1]) / (p_[2 * k + 2] - p_[2 * k]);
            }
            case Family::Custom: {
                if (fn_->df) return fn_->df(t);
                double h = 1e-5 * std::max(1.0, t);
                double lo = std::max(0.0, t - h);
                return (fn_->f(t + h) - fn_->f(lo)) / (t + h - lo);
            }
        }
        return 0.0;
    }

    /// Integral over [t0, t1]
    double integrate(double t0, double t1) const {
        require(t0 >= 0.0 && t0 <= t1, "integrate: need 0 <= t0 <= t1");
        if (t0 == t1) return 0.0;
        return antiderivative(t1) - antiderivative(t0);
    }

    /// Pointwise square as a term function (closed form where the family allows)
    TermFunction squared() const {
        switch (family_) {
            case Family::Constant: return constant(p_[0] * p_[0]);
            case Family::ExpDecay: return exp_decay(p_[0] * p_[0], 2.0 * p_[1]);
            case Family::ExpGrow: return exp_grow(p_[0] * p_[0], 2.0 * p_[1]);
            default: {
                TermFunction self = *this;
                return custom([self](double t) { double v = self.value(t); return v * v; },
                              [self](double t) { return 2.0 * self.value(t) * self.derivative(t); });
            }
        }
    }

private:
    struct Fn {
        std::function<double(double)> f;
        std::function<double(double)> df;
    };

    TermFunction(Family f, std::vector<double> p) : family_(f), p_(std::move(p)) {
        if (f == Family::RationalVariance) require(p_[2] > 0.0, "RationalVariance: need c > 0");
    }

    void check_time(double t) const {
        if (!(t >= 0.0) || !std::isfinite(t)) throw InputError("term function: time must be >= 0");
        if (family_ == Family::RationalVariance && t + p_[2] <= 0.0)
            throw InputError("RationalVariance: t + c <= 0");
    }

    std::size_t knots() const { return p_.size() / 2; }

    std::size_t segment(double t) const {
        std::size_t k = 0;
        while (k + 1 < knots() && t >= p_[2 * k + 2]) ++k;
        return k;
    }

    double antiderivative(double t) const {
        switch (family_) {
            case Family::Constant: return p_[0] * t;
            case Family::ExpDecay:
                if (p_[1] == 0.0) return p_[0] * t;
                return p_[0] * (1.0 - std::exp(-p_[1] * t)) / p_[1];
            case Family::ExpGrow:
                if (p_[1] == 0.0) return p_[0] * t;
                return p_[0] * std::expm1(p_[1] * t) / p_[1];
            case Family::RationalVariance:
                return p_[0] * t + p_[1] * std::log1p(t / p_[2]);
            case Family::PiecewiseLinear: {
                // exact segment-wise trapezoids from 0
                double s = 0.0, prev_t = 0.0, prev_v = value(0.0);
                for (std::size_t k = 0; k < knots(); ++k) {
                    double tk = p_[2 * k];
                    if (tk <= 0.0) continue;
                    if (tk >= t) break;
                    double vk = p_[2 * k + 1];
                    s += 0.5 * (prev_v + vk) * (tk - prev_t);
                    prev_t = tk;
                    prev_v = vk;
                }
                return s + 0.5 * (prev_v + value(t)) * (t - prev_t);
            }
            case Family::Custom:
                return quad::integrate([this](double u) { return fn_->f(u); }, 0.0, t, 1e-14);
        }
        return 0.0;
    }

    Family family_;
    std::vector<double> p_;
    std::shared_ptr<const Fn> fn_;
};

/// Volatility term: either sigma(t) itself or its square, by flag
struct Volatility {
    TermFunction f;
    bool is_variance = false;

    static Volatility sigma(TermFunction g) { return {std::move(g), false}; }
    static Volatility variance(TermFunction g) { return {std::move(g), true}; }

    double var(double t) const {
        double v = f.value(t);
        return is_variance ? v : v * v;
    }
    double sigma_at(double t) const { return is_variance ? std::sqrt(f.value(t)) : f.value(t); }
    double dvar(double t) const {
        return is_variance ? f.derivative(t) : 2.0 * f.value(t) * f.derivative(t);
    }
    /// Integral of sigma^2 over [t0, t1]
    double int_var(double t0, double t1) const {
        return is_variance ? f.integrate(t0, t1) : variance_fn().integrate(t0, t1);
    }
    /// sigma^2 as a term function
    TermFunction variance_fn() const { return is_variance ? f : f.squared(); }
};

/// Constants of the Whittaker-solvable MBK calibration
struct MbkConstants {
    double c_alpha = 0.0;
    double c_gamma = 0.0;
    double c_sigma = 0.0;
    double kappa = 0.0;
    double r0 = 0.0;
    double R = 0.0;
    double sigma0_sq = 0.0;

    static MbkConstants make(double c_alpha, double kappa, double r0, double R, double sigma0_sq) {
        require(kappa > 0.0, "MbkConstants: kappa must be > 0");
        require(sigma0_sq > 0.0, "MbkConstants: sigma(0)^2 must be > 0");
        MbkConstants c;
        c.c_alpha = c_alpha;
        c.kappa = kappa;
        c.r0 = r0;
        c.R = R;
        c.sigma0_sq = sigma0_sq;
        c.c_gamma = c_alpha - R / kappa;
        c.c_sigma = sigma0_sq / (2.0 * kappa);
        return c;
    }

    /// Empty string when all defining identities hold, else a description
    std::string violation() const {
        if (!(c_sigma > 0.0)) return "c_sigma must be positive";
        if (std::abs(c_sigma - sigma0_sq / (2.0 * kappa)) > 1e-14 * std::abs(c_sigma))
            return "c_sigma != sigma0_sq / (2 kappa)";
        if (std::abs(c_gamma - (c_alpha - R / kappa)) > 1e-14 * (1.0 + std::abs(c_gamma)))
            return "c_gamma != c_alpha - R / kappa";
        return {};
    }
};

/// theta~(t) = C_a sigma^2 / kappa + (2 / kappa) sigma'/sigma
inline double implied_theta_tilde(const MbkConstants& c, const Volatility& vol, double t) {
    double v = vol.var(t);
    require(v > 0.0, "implied_theta_tilde: sigma(t) must be > 0");
    return c.c_alpha * v / c.kappa + vol.dvar(t) / (c.kappa * v);
}

/// phi(t) = sigma^2(0) / sigma^2(t)
inline double phi(const Volatility& vol, double t) {
    double v = vol.var(t);
    require(v > 0.0, "phi: sigma(t) must be > 0");
    return vol.var(0.0) / v;
}

}  // namespace zcb
