/**
 * @file volterra.hpp
 * @brief Volterra integral equations of the second kind for bond prices
 *
 *   u(tau, y) = H(tau, y) + int_0^tau dk int dxi G(y - xi, tau - k) q(k, xi) u(k, xi),
 *   G(y, s) = e^{-y^2 / 4s} / (2 sqrt(pi s)).
 *
 * The unknown is piecewise linear in y, so the space integral against G is
 * exact (hat function times Gaussian). Time uses the trapezoid rule; the
 * system is lower triangular in time and is solved by marching, with the
 * diagonal term taken implicitly.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "zcb/bktransform.hpp"
#include "zcb/errors.hpp"
#include "zcb/models.hpp"
#include "zcb/quadrature.hpp"
#include "zcb/result.hpp"

namespace zcb {

/// Result of a Picard iteration
struct PicardResult {
    std::vector<double> value;
    int iterations = 0;
    std::vector<double> residuals;  // max-norm change per sweep
};

/// Fixed point of v = rhs + K v by successive substitution
inline PicardResult picard_iterate(const std::function<std::vector<double>(const std::vector<double>&)>& kernel_apply,
                                   const std::vector<double>& rhs, double tol, int max_iter) {
    require(tol > 0.0 && max_iter >= 1, "picard_iterate: need tol > 0 and max_iter >= 1");
    PicardResult r;
    r.value = rhs;
    for (int it = 1; it <= max_iter; ++it) {
        std::vector<double> kv = kernel_apply(r.value);
        double change = 0.0;
        for (std::size_t i = 0; i < rhs.size(); ++i) {
            double nv = rhs[i] + kv[i];
            change = std::max(change, std::abs(nv - r.value[i]));
            r.value[i] = nv;
        }
        r.iterations = it;
        r.residuals.push_back(change);
        if (!std::isfinite(change)) throw InternalError("picard_iterate: non-finite iterate");
        if (change < tol) return r;
    }
    throw NotConverged("picard_iterate: max_iter exceeded", r.residuals.back());
}

struct VolterraConfig {
    int n_space = 200;
    int n_time = 100;
    double tol = 1e-10;        // tail level used to size the space window
    double max_diag = 0.5;     // bound on (dt/2) max q; the time grid is refined until it holds

    void validate() const {
        require(n_space >= 5 && n_time >= 1, "VolterraConfig: need n_space >= 5, n_time >= 1");
        require(tol > 0.0 && tol < 1.0, "VolterraConfig: tol must be in (0, 1)");
    }
};

/// Solution table u[m][j] on (tau_m, y_j) plus the bond price
struct VolterraSolution {
    std::vector<double> y;
    std::vector<double> tau;
    std::vector<std::vector<double>> u;
    std::size_t spot_index = 0;
    PriceResult result;
};

namespace detail {

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// E[hat(U)] for U ~ N(d, s^2), hat the unit tent on [-1, 1]
inline double hat_gauss(double d, double s) {
    if (s == 0.0) return std::max(0.0, 1.0 - std::abs(d));
    const double c = 1.0 / std::sqrt(2.0 * M_PI);
    auto A = [&](double a) { return norm_cdf((a - d) / s); };
    auto B = [&](double a) {
        double z = (a - d) / s;
        return d * norm_cdf(z) - s * c * std::exp(-0.5 * z * z);
    };
    return (A(0) - A(-1)) + (B(0) - B(-1)) + (A(1) - A(0)) - (B(1) - B(0));
}

/// Weights w[d + n - 1] for offsets d = -(n-1) .. n-1 at heat-time lag dtau
inline std::vector<double> hat_weights(int n, double h, double dtau) {
    std::vector<double> w(2 * n - 1);
    const double s = std::sqrt(2.0 * dtau) / h;
    for (int d = -(n - 1); d <= n - 1; ++d) w[d + n - 1] = hat_gauss(double(d), s);
    return w;
}

/// Uniform grid on [lo, hi] containing `anchor` as a node
inline std::vector<double> anchored_grid(double lo, double hi, double anchor, int n, std::size_t& idx) {
    double h = (hi - lo) / (n - 1);
    long j = std::lround((anchor - lo) / h);
    j = std::clamp(j, 2L, long(n - 3));
    idx = static_cast<std::size_t>(j);
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) y[i] = anchor + (i - j) * h;
    return y;
}

}  // namespace detail

/// Generic marching solver.
///   H(m)  -> free term on the y grid at tau_m
///   q(m)  -> kernel multiplier on the y grid at tau_m
inline std::vector<std::vector<double>> solve_heat_volterra(
    const std::vector<double>& y, const std::vector<double>& tau,
    const std::function<std::vector<double>(std::size_t)>& H,
    const std::function<std::vector<double>(std::size_t)>& q) {
    const int n = static_cast<int>(y.size());
    const std::size_t M = tau.size() - 1;
    const double h = y[1] - y[0];
    const double dt = tau[1] - tau[0];
    for (std::size_t m = 1; m <= M; ++m)
        if (std::abs(tau[m] - tau[m - 1] - dt) > 1e-9 * dt) throw InputError("solve_heat_volterra: uniform tau grid required");
    std::vector<std::vector<double>> W(M + 1);
    for (std::size_t l = 1; l <= M; ++l) W[l] = detail::hat_weights(n, h, l * dt);

    std::vector<std::vector<double>> u(M + 1), qu(M + 1);
    u[0] = H(0);
    {
        auto q0 = q(0);
        qu[0].resize(n);
        for (int j = 0; j < n; ++j) qu[0][j] = q0[j] * u[0][j];
    }
    std::vector<double> acc(n);
    for (std::size_t m = 1; m <= M; ++m) {
        std::vector<double> rhs = H(m);
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const double c = (i == 0 ? 0.5 : 1.0) * dt;
            const auto& w = W[m - i];
            const auto& g = qu[i];
            for (int j = 0; j < n; ++j) {
                const double* wj = &w[j + n - 1];  // wj[-k] pairs with node k
                double s = 0.0;
                for (int k = 0; k < n; ++k) s += wj[-k] * g[k];
                acc[j] += c * s;
            }
        }
        auto qm = q(m);
        u[m].resize(n);
        qu[m].resize(n);
        for (int j = 0; j < n; ++j) {
            double v = (rhs[j] + acc[j]) / (1.0 - 0.5 * dt * qm[j]);
            if (!std::isfinite(v)) throw InternalError("solve_heat_volterra: non-finite value");
            u[m][j] = v;
            qu[m][j] = qm[j] * v;
        }
    }
    return u;
}

/// Heat-kernel smoothing of u0: E[u0(y + sqrt(2 tau) Z)], Z standard normal
class HeatSmoother {
public:
    HeatSmoother() {
        const quad::Rule ref = quad::gauss_legendre(8, 0.0, 1.0);
        const int panels = 40;
        const double h = 20.0 / panels;
        for (int p = 0; p < panels; ++p)
            for (std::size_t i = 0; i < ref.x.size(); ++i) {
                double z = -10.0 + h * (p + ref.x[i]);
                z_.push_back(z);
                w_.push_back(ref.w[i] * h * std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI));
            }
    }

    template <class F>
    double operator()(F&& u0, double y, double tau) const {
        if (tau <= 0.0) return u0(y);
        const double s = std::sqrt(2.0 * tau);
        double r = 0.0;
        for (std::size_t i = 0; i < z_.size(); ++i) r += w_[i] * u0(y + s * z_[i]);
        return r;
    }

private:
    std::vector<double> z_, w_;
};

/// Weights w_i with int_0^tau f(k) (tau - k)^{-1/2} dk = sum w_i f(k_i), exact for f
/// piecewise linear on the nodes k_0 = 0 < ... < k_n = tau
inline std::vector<double> sqrt_kernel_weights(const std::vector<double>& k) {
    require(k.size() >= 2 && k.front() == 0.0, "sqrt_kernel_weights: need nodes starting at 0");
    const double tau = k.back();
    std::vector<double> w(k.size(), 0.0);
    for (std::size_t i = 0; i + 1 < k.size(); ++i) {
        const double a = k[i], b = k[i + 1], h = b - a;
        require(h > 0.0, "sqrt_kernel_weights: nodes must be strictly increasing");
        // with u = tau - k: m0 = int u^{-1/2}, m1 = int k u^{-1/2} over the panel
        const double ua = tau - a, ub = tau - b;
        const double m0 = 2.0 * (std::sqrt(ua) - std::sqrt(ub));
        const double m1 = tau * m0 - (2.0 / 3.0) * (ua * std::sqrt(ua) - ub * std::sqrt(ub));
        w[i] += (b * m0 - m1) / h;
        w[i + 1] += (m1 - a * m0) / h;
    }
    return w;
}

namespace detail {

/// Number of time steps so that (dt/2) max q <= max_diag
inline int refine_steps(int n_time, double tau_max, double qmax, double max_diag) {
    int M = n_time;
    while (0.5 * (tau_max / M) * qmax > max_diag && M < 1 << 20) M *= 2;
    return M;
}

}  // namespace detail

/// MBK: u = e^{-(kappa/sigma^2) rbar} e^{-int_t^T s} F in y = log rbar + I(t), heat time (1/2) int_t^T sigma^2
inline VolterraSolution solve_mbk_volterra(const ModelSpec& m, double T, const VolterraConfig& cfg = {}) {
    Stopwatch sw;
    require(m.kind == ModelKind::MBK, "volterra mbk: MBK model required");
    require(T > 0.0, "volterra: maturity must be > 0");
    m.validate();
    cfg.validate();

    // I(t) = int_0^t (sigma^2/2 - kappa theta~)
    auto I = [&](double t) {
        return 0.5 * m.sigma.int_var(0.0, t) -
               quad::integrate([&](double u) { return m.kappa.value(u) * m.theta_tilde(u); }, 0.0, t);
    };
    auto c = [&](double t) { return m.kappa.value(t) / m.sigma.var(t); };
    auto dc = [&](double t) {
        double v = m.sigma.var(t);
        return m.kappa.derivative(t) / v - m.kappa.value(t) * m.sigma.dvar(t) / (v * v);
    };
    auto heat = [&](double t) { return 0.5 * m.sigma.int_var(t, T); };
    const double tau_max = heat(0.0);
    auto t_of = [&](double s) {
        if (s <= 0.0) return T;
        if (s >= tau_max) return 0.0;
        return quad::solve_monotone(heat, s, 0.0, T);
    };
    const double A = I(T), B = c(T);
    auto u0 = [A, B](double y) { return std::exp(-B * std::exp(y - A)); };

    const double y0 = std::log(m.rbar0());
    const double spread = 8.0 * std::sqrt(tau_max);
    double lo = y0 - spread - 1.0;
    double hi = std::max(y0 + spread, A + std::log(std::log(1.0 / cfg.tol) / B)) + 0.5;

    // kernel q = alpha e^y + beta e^{2y}
    auto alpha_beta = [&](double t, double& al, double& be) {
        double v = m.sigma.var(t), k = m.kappa.value(t), It = I(t);
        double gam = -m.R + k * k * m.theta_tilde(t) / v + dc(t);
        al = 2.0 * gam / v * std::exp(-It);
        be = -k * k / (v * v) * std::exp(-2.0 * It);
    };
    // largest positive q over y is alpha^2 / (4 |beta|)
    double qmax = 0.0;
    for (int i = 0; i <= 50; ++i) {
        double al, be;
        alpha_beta(T * i / 50.0, al, be);
        if (al > 0.0) qmax = std::max(qmax, al * al / (4.0 * -be));
    }
    const int M = detail::refine_steps(cfg.n_time, tau_max, qmax, cfg.max_diag);

    VolterraSolution sol;
    sol.y = detail::anchored_grid(lo, hi, y0, cfg.n_space, sol.spot_index);
    for (int i = 0; i <= M; ++i) sol.tau.push_back(tau_max * i / M);
    std::vector<double> tm(M + 1);
    for (int i = 0; i <= M; ++i) tm[i] = t_of(sol.tau[i]);

    const HeatSmoother smooth;
    auto H = [&](std::size_t k) {
        std::vector<double> r(sol.y.size());
        for (std::size_t j = 0; j < r.size(); ++j) r[j] = smooth(u0, sol.y[j], sol.tau[k]);
        return r;
    };
    auto q = [&](std::size_t k) {
        double al, be;
        alpha_beta(tm[k], al, be);
        std::vector<double> r(sol.y.size());
        for (std::size_t j = 0; j < r.size(); ++j) {
            double e = std::exp(sol.y[j]);
            r[j] = al * e + be * e * e;
        }
        return r;
    };
    sol.u = solve_heat_volterra(sol.y, sol.tau, H, q);
    const double pref = std::exp(c(0.0) * m.rbar0() - m.shift.integrate(0.0, T));
    sol.result.engine = "volterra-mbk";
    sol.result.maturity = T;
    sol.result.price = pref * sol.u.back()[sol.spot_index];
    sol.result.settings = {{"n_space", double(cfg.n_space)}, {"n_time", double(M)}};
    sol.result.wall_clock_ms = sw.ms();
    return sol;
}

/// BK: v = e^{int_t^T s} F in x = a z + b, v = 1 - int int G beta e^{abar xi} v
inline VolterraSolution solve_bk_volterra(const ModelSpec& m, double T, const VolterraConfig& cfg = {},
                                          bool nu_at_maturity = false) {
    Stopwatch sw;
    require(m.kind == ModelKind::BK, "volterra bk: BK model required");
    require(T > 0.0, "volterra: maturity must be > 0");
    m.validate();
    cfg.validate();
    const BkCoefficients co(m, T, nu_at_maturity ? T : 0.0);
    const double tau_max = co.tau(0.0);
    const double x0 = co.x_of(0.0, m.z0());
    const double spread = 8.0 * std::sqrt(tau_max) + 0.5 * co.a(0.0);
    const int M = cfg.n_time;  // q <= 0 everywhere: the implicit diagonal is unconditionally safe

    VolterraSolution sol;
    sol.y = detail::anchored_grid(x0 - spread, x0 + spread, x0, cfg.n_space, sol.spot_index);
    for (int i = 0; i <= M; ++i) sol.tau.push_back(tau_max * i / M);
    std::vector<double> tm(M + 1);
    for (int i = 0; i <= M; ++i) tm[i] = i == 0 ? T : (i == M ? 0.0 : co.t_of_tau(sol.tau[i]));

    auto H = [&](std::size_t) { return std::vector<double>(sol.y.size(), 1.0); };
    auto q = [&](std::size_t k) {
        double be = co.beta(tm[k]), ab = co.abar(tm[k]);
        std::vector<double> r(sol.y.size());
        for (std::size_t j = 0; j < r.size(); ++j) r[j] = -be * std::exp(ab * sol.y[j]);
        return r;
    };
    sol.u = solve_heat_volterra(sol.y, sol.tau, H, q);
    sol.result.engine = "volterra-bk";
    if (T > 2.0) sol.result.warnings.push_back("volterra-bk: uniform heat-time grid under-resolves maturities above about 2 years");
    sol.result.maturity = T;
    sol.result.price = std::exp(-m.shift.integrate(0.0, T)) * sol.u.back()[sol.spot_index];
    sol.result.settings = {{"n_space", double(cfg.n_space)}, {"n_time", double(M)}, {"nu", co.nu()}};
    sol.result.wall_clock_ms = sw.ms();
    return sol;
}

}  // namespace zcb
