/**
 * @file closedform.hpp
 * @brief Closed-form MBK zero-coupon bond price via Whittaker functions
 *
 * F e^{C_a(C_a-1) tau + int_t^T s} = 1 + e^{w/2} w^{-C_a} (Res + Int / pi^2) / Gamma(R/kappa)
 *
 *   Res = sum_k 2 mu_k [e^{(mu_k^2 - 1/4) tau} - 1] / (k! Gamma(3/2 - C_a + mu_k))
 *         * Gamma(1/2 - C_g - mu_k) Gamma(1/2 - C_g + mu_k) W_{C_g, mu_k}(w)
 *   Int = int_0^inf omega [e^{-(omega^2 + 1/4) tau} - 1] g(omega) d omega
 *   g   = sinh(2 pi omega) |Gamma(1/2 - C_g + i omega)|^2 |Gamma(C_a - 1/2 + i omega)|^2 W_{C_g, i omega}(w)
 *
 * with mu_k = 1/2 - C_a - k, tau = (1/2) int_t^T sigma^2, w = 2 kappa rbar / sigma^2(t).
 */

#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "zcb/errors.hpp"
#include "zcb/models.hpp"
#include "zcb/result.hpp"
#include "zcb/special.hpp"

namespace zcb {

struct Pole {
    int k;
    double mu;
};

struct ClosedFormConstants {
    double c_alpha = 0.0;
    double c_gamma = 0.0;
    double c_sigma = 0.0;
    double kappa = 0.0;
    double R = 0.0;
    std::vector<Pole> poles;
    int K = -1;  // highest pole index, -1 when there are none
};

/// Simpson rule in s on [0, 1] with omega = omega_max s^2
struct QuadratureSpec {
    double omega_max = 12.0;
    int n_nodes = 75;
    double tail_tol = 1e-6;

    void validate() const {
        require(n_nodes >= 3 && n_nodes % 2 == 1, "QuadratureSpec: n_nodes must be odd and >= 3");
        require(omega_max > 0.0, "QuadratureSpec: omega_max must be > 0");
    }
};

inline ClosedFormConstants build_constants(const ModelSpec& spec) {
    require(spec.kind == ModelKind::MBK && spec.c_alpha.has_value(),
            "closed form: MBK model with c_alpha calibration required");
    require(spec.kappa.is_constant(), "closed form: needs constant kappa (time-dependent kappa is not solvable)");
    MbkConstants m = MbkConstants::make(*spec.c_alpha, spec.kappa.value(0.0), spec.r0, spec.R, spec.sigma.var(0.0));
    ClosedFormConstants c;
    c.c_alpha = m.c_alpha;
    c.c_gamma = m.c_gamma;
    c.c_sigma = m.c_sigma;
    c.kappa = m.kappa;
    c.R = m.R;
    if (c.c_alpha < 0.5) {
        c.K = static_cast<int>(std::floor(0.5 - c.c_alpha));
        for (int k = 0; k <= c.K; ++k) {
            double mu = 0.5 - c.c_alpha - k;
            if (mu > 0.0) c.poles.push_back({k, mu});
        }
    }
    if (std::abs((c.c_alpha - c.c_gamma) - c.R / c.kappa) > 1e-14 * (1.0 + c.R / c.kappa))
        throw InternalError("closed form: C_a - C_g != R / kappa");
    return c;
}

namespace detail {

inline double pole_weight(const ClosedFormConstants& c, const Pole& p, double w) {
    double lg = std::lgamma(p.k + 1.0);
    Complex pref = 2.0 * p.mu * std::exp(-lg - ln_gamma(1.5 - c.c_alpha + p.mu) +
                                         ln_gamma(0.5 - c.c_gamma - p.mu) + ln_gamma(0.5 - c.c_gamma + p.mu));
    return (pref * whittaker_w(c.c_gamma, p.mu, w)).real();
}

/// g(omega) without the leading omega factor
inline double branch_density(const ClosedFormConstants& c, double omega, double w) {
    if (omega == 0.0) return 0.0;
    double lg = 2.0 * ln_gamma(Complex(0.5 - c.c_gamma, omega)).real() +
                2.0 * ln_gamma(Complex(c.c_alpha - 0.5, omega)).real();
    // sinh(2 pi w) e^{lg} in log space
    double a = 2.0 * M_PI * omega;
    double s = 0.5 * std::exp(a + lg) * -std::expm1(-2.0 * a);
    return s * whittaker_w(c.c_gamma, Complex(0.0, omega), w).real();
}

}  // namespace detail

/// Node table for the branch integral at fixed w; reusable across maturities
struct BranchTable {
    double w = 0.0;
    QuadratureSpec q;
    std::vector<double> omega;
    std::vector<double> weight;  // Simpson weight times d omega / ds times omega times g
    std::vector<double> pole_w;  // per-pole weight without the tau bracket
    double tail_estimate = 0.0;
};

inline BranchTable build_branch_table(const ClosedFormConstants& c, double w, const QuadratureSpec& q) {
    q.validate();
    require(w > 0.0, "closed form: w must be > 0");
    BranchTable t;
    t.w = w;
    t.q = q;
    const int n = q.n_nodes;
    const double h = 1.0 / (n - 1);
    t.omega.resize(n);
    t.weight.resize(n);
    for (int i = 0; i < n; ++i) {
        double s = i * h;
        double om = q.omega_max * s * s;
        double simpson = (i == 0 || i == n - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        t.omega[i] = om;
        t.weight[i] = simpson * h / 3.0 * (2.0 * q.omega_max * s) * om * detail::branch_density(c, om, w);
    }
    // tail beyond omega_max: |omega g| at the cutoff over the asymptotic decay rate pi/2
    t.tail_estimate = std::abs(q.omega_max * detail::branch_density(c, q.omega_max, w)) / (0.5 * M_PI);
    for (const Pole& p : c.poles) t.pole_w.push_back(detail::pole_weight(c, p, w));
    return t;
}

inline double residual_sum(const ClosedFormConstants& c, const BranchTable& t, double tau) {
    double s = 0.0;
    for (std::size_t k = 0; k < c.poles.size(); ++k) {
        double mu = c.poles[k].mu;
        s += t.pole_w[k] * std::expm1((mu * mu - 0.25) * tau);
    }
    return s;
}

inline double residual_sum(const ClosedFormConstants& c, double tau, double w) {
    require(tau >= 0.0 && w > 0.0, "residual_sum: need tau >= 0, w > 0");
    return residual_sum(c, build_branch_table(c, w, QuadratureSpec{12.0, 3, 1.0}), tau);
}

inline double branch_integral(const BranchTable& t, double tau) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.omega.size(); ++i) {
        double om = t.omega[i];
        s += t.weight[i] * std::expm1(-(om * om + 0.25) * tau);
    }
    return s;
}

inline double branch_integral(const ClosedFormConstants& c, double tau, double w, const QuadratureSpec& q) {
    require(tau >= 0.0, "branch_integral: need tau >= 0");
    BranchTable t = build_branch_table(c, w, q);
    if (t.tail_estimate > q.tail_tol)
        throw NotConverged("branch_integral: tail above tolerance, increase omega_max", t.tail_estimate);
    return branch_integral(t, tau);
}

/// Price engine caching node tables per w
class ClosedFormEngine {
public:
    explicit ClosedFormEngine(ModelSpec spec, QuadratureSpec q = {})
        : spec_(std::move(spec)), q_(q), c_(build_constants(spec_)) {
        q_.validate();
    }

    const ClosedFormConstants& constants() const { return c_; }

    PriceResult price(double t, double T, double r) const {
        Stopwatch sw;
        require(0.0 <= t && t < T, "closed form: need 0 <= t < T");
        double rbar = (r - spec_.shift.value(t)) / spec_.R;
        require(rbar > 0.0, "closed form: r must exceed s(t)");
        double w = 2.0 * c_.kappa * rbar / spec_.sigma.var(t);
        double tau = 0.5 * spec_.sigma.int_var(t, T);
        double disc = std::exp(-spec_.shift.integrate(t, T));
        PriceResult res;
        res.engine = "closedform";
        res.maturity = T;
        res.settings = {{"n_nodes", double(q_.n_nodes)}, {"omega_max", q_.omega_max}};
        if (w > 700.0) {
            res.price = 0.0;
            res.warnings.push_back("w > 700: returned the large-rate limit 0");
            res.wall_clock_ms = sw.ms();
            return res;
        }
        const BranchTable& tab = table(w);
        if (tab.tail_estimate > q_.tail_tol)
            throw NotConverged("closed form: branch tail above tolerance, increase omega_max", tab.tail_estimate);
        double br = residual_sum(c_, tab, tau) + branch_integral(tab, tau) / (M_PI * M_PI);
        double lpre = 0.5 * w - c_.c_alpha * std::log(w) - std::lgamma(c_.R / c_.kappa);
        double bracket = 1.0 + std::exp(lpre) * br;
        res.price = disc * std::exp(c_.c_alpha * (1.0 - c_.c_alpha) * tau) * bracket;
        res.error_estimate = tab.tail_estimate * std::exp(lpre) / (M_PI * M_PI);
        res.settings["tail_estimate"] = tab.tail_estimate;
        res.wall_clock_ms = sw.ms();
        return res;
    }

    /// Price at t = 0, r = r0
    PriceResult price(double T) const { return price(0.0, T, spec_.r0); }

private:
    const BranchTable& table(double w) const {
        std::lock_guard<std::mutex> lock(*mu_);
        auto it = cache_->find(w);
        if (it == cache_->end()) it = cache_->emplace(w, build_branch_table(c_, w, q_)).first;
        return it->second;
    }

    ModelSpec spec_;
    QuadratureSpec q_;
    ClosedFormConstants c_;
    std::shared_ptr<std::mutex> mu_ = std::make_shared<std::mutex>();
    std::shared_ptr<std::map<double, BranchTable>> cache_ = std::make_shared<std::map<double, BranchTable>>();
};

inline PriceResult zcb_price_closedform(const ModelSpec& spec, double t, double T, double r,
                                        const QuadratureSpec& q = {}) {
    return ClosedFormEngine(spec, q).price(t, T, r);
}

struct IdentityCheck {
    double lhs;
    double rhs;
    double rel_err;
};

/// (1/pi^2) int omega g(omega) d omega  vs  w^{C_a} e^{-w/2} Gamma(C_a - C_g) - sum of pole terms
inline IdentityCheck verify_identity(const ClosedFormConstants& c, double w, const QuadratureSpec& q = {}) {
    BranchTable t = build_branch_table(c, w, q);
    if (t.tail_estimate > q.tail_tol)
        throw NotConverged("verify_identity: tail above tolerance", t.tail_estimate);
    double lhs = 0.0;
    for (double v : t.weight) lhs += v;
    lhs /= M_PI * M_PI;
    double rhs = std::exp(c.c_alpha * std::log(w) - 0.5 * w + std::lgamma(c.c_alpha - c.c_gamma));
    for (double pw : t.pole_w) rhs -= pw;
    return {lhs, rhs, std::abs(lhs - rhs) / std::abs(rhs)};
}

}  // namespace zcb
