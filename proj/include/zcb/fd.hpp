/**
 * @file fd.hpp
 * @brief Crank-Nicolson pricers for the MBK (rbar) and BK (z) bond PDEs
 *
 * Backward PDE  F_t + a F_xx + b F_x + c F = 0,  F(T) = 1.
 * MBK: x = rbar, a = sigma^2 rbar^2 / 2, b = kappa rbar (theta~ - rbar), c = -(s + R rbar);
 *      the rbar = 0 row is the degenerate PDE F_t = s F, F = 0 at space_max.
 * BK:  x = z, a = sigma^2 / 2, b = kappa (theta - z), c = -(s + R e^z);
 *      upwind first-order row at space_min, F = 0 at space_max.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "zcb/errors.hpp"
#include "zcb/models.hpp"
#include "zcb/result.hpp"

namespace zcb {

struct GridSpec {
    int n_space = 100;
    int n_time = 200;
    double space_min = std::numeric_limits<double>::quiet_NaN();  // NaN: automatic
    double space_max = std::numeric_limits<double>::quiet_NaN();
    double concentration = 30.0;  // sinh grading strength toward rbar = 0 (MBK)
    int rannacher_steps = 2;      // CN steps replaced by two implicit half-steps each

    void validate() const {
        require(n_space >= 3, "GridSpec: n_space must be >= 3");
        require(n_time >= 1, "GridSpec: n_time must be >= 1");
        require(concentration > 0.0, "GridSpec: concentration must be > 0");
        if (!std::isnan(space_min) && !std::isnan(space_max))
            require(space_min < space_max, "GridSpec: space_min must be < space_max");
    }
};

/// Price curve over the space nodes at t = 0
struct FdSolution {
    std::vector<double> nodes;
    std::vector<double> values;
    std::size_t spot_index = 0;  // node holding the initial state
    PriceResult result;
};

namespace detail {

struct Tridiag {
    std::vector<double> lo, di, up;  // lo[i] couples i-1, up[i] couples i+1
    explicit Tridiag(std::size_t n) : lo(n, 0.0), di(n, 0.0), up(n, 0.0) {}
};

/// Solve T x = d in place (Thomas); T must be nonsingular
inline void thomas(const Tridiag& T, std::vector<double>& d) {
    const std::size_t n = d.size();
    std::vector<double> c(n);
    double m = T.di[0];
    c[0] = T.up[0] / m;
    d[0] /= m;
    for (std::size_t i = 1; i < n; ++i) {
        m = T.di[i] - T.lo[i] * c[i - 1];
        c[i] = T.up[i] / m;
        d[i] = (d[i] - T.lo[i] * d[i - 1]) / m;
    }
    for (std::size_t i = n - 1; i-- > 0;) d[i] -= c[i] * d[i + 1];
}

/// Solve T^T x = d in place
inline void thomas_transposed(const Tridiag& T, std::vector<double>& d) {
    const std::size_t n = d.size();
    Tridiag U(n);
    for (std::size_t i = 0; i < n; ++i) {
        U.di[i] = T.di[i];
        if (i + 1 < n) U.up[i] = T.lo[i + 1];
        if (i > 0) U.lo[i] = T.up[i - 1];
    }
    thomas(U, d);
}

/// Coefficients of a F'' + b F' + c F at every node
struct Coeffs {
    std::vector<double> a, b, c;
};

/// Spatial operator on a nonuniform grid: central differences inside, with the
/// diffusion raised to |b| h / 2 in cells whose Peclet number exceeds one so the
/// off-diagonals stay nonnegative; both edges are outflow rows (diffusion
/// dropped, drift upwinded, no boundary value).
inline Tridiag assemble(const std::vector<double>& x, const Coeffs& k) {
    const std::size_t n = x.size();
    Tridiag L(n);
    L.di[0] = k.c[0];
    if (k.b[0] > 0.0) {
        L.up[0] = k.b[0] / (x[1] - x[0]);
        L.di[0] -= L.up[0];
    }
    L.di[n - 1] = k.c[n - 1];
    if (k.b[n - 1] < 0.0) {
        L.lo[n - 1] = -k.b[n - 1] / (x[n - 1] - x[n - 2]);
        L.di[n - 1] -= L.lo[n - 1];
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        double hm = x[i] - x[i - 1], hp = x[i + 1] - x[i];
        double b = k.b[i];
        double a = std::max(k.a[i], 0.5 * std::abs(b) * std::max(hm, hp));
        L.lo[i] = 2.0 * a / (hm * (hm + hp)) - b * hp / (hm * (hm + hp));
        L.up[i] = 2.0 * a / (hp * (hm + hp)) + b * hm / (hp * (hm + hp));
        L.di[i] = -2.0 * a / (hm * hp) + b * (hp - hm) / (hm * hp) + k.c[i];
    }
    return L;
}

/// One theta-step matrices: lhs = I - th dt L(t_impl), rhs = I + (1 - th) dt L(t_expl)
struct StepMatrices {
    Tridiag lhs, rhs;
};

inline StepMatrices step_matrices(const Tridiag& Limp, const Tridiag& Lexp, double dt, double th) {
    const std::size_t n = Limp.di.size();
    StepMatrices s{Tridiag(n), Tridiag(n)};
    for (std::size_t i = 0; i < n; ++i) {
        s.lhs.lo[i] = -th * dt * Limp.lo[i];
        s.lhs.di[i] = 1.0 - th * dt * Limp.di[i];
        s.lhs.up[i] = -th * dt * Limp.up[i];
        s.rhs.lo[i] = (1.0 - th) * dt * Lexp.lo[i];
        s.rhs.di[i] = 1.0 + (1.0 - th) * dt * Lexp.di[i];
        s.rhs.up[i] = (1.0 - th) * dt * Lexp.up[i];
    }
    return s;
}

inline std::vector<double> multiply(const Tridiag& T, const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = T.di[i] * v[i];
        if (i > 0) s += T.lo[i] * v[i - 1];
        if (i + 1 < n) s += T.up[i] * v[i + 1];
        r[i] = s;
    }
    return r;
}

inline std::vector<double> multiply_transposed(const Tridiag& T, const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = T.di[i] * v[i];
        if (i > 0) s += T.up[i - 1] * v[i - 1];
        if (i + 1 < n) s += T.lo[i + 1] * v[i + 1];
        r[i] = s;
    }
    return r;
}

/// (dt, theta, t_from, t_to) sequence walking from t = T down to 0
struct Step {
    double t_hi, t_lo, theta;
};

/// Time steps; the implicit Rannacher half-steps sit at the `start_at_maturity` end
inline std::vector<Step> time_steps(double T, int n_time, int rannacher, bool start_at_maturity) {
    std::vector<Step> steps;
    const double dt = T / n_time;
    for (int m = 0; m < n_time; ++m) {
        int idx = start_at_maturity ? m : n_time - 1 - m;
        double hi = T - m * dt, lo = (m + 1 == n_time) ? 0.0 : T - (m + 1) * dt;
        if (idx < rannacher) {
            double mid = 0.5 * (hi + lo);
            steps.push_back({hi, mid, 1.0});
            steps.push_back({mid, lo, 1.0});
        } else {
            steps.push_back({hi, lo, 0.5});
        }
    }
    return steps;
}

using CoeffFn = std::function<Coeffs(double)>;

inline std::vector<double> backward_solve(const std::vector<double>& x, const CoeffFn& coeffs, double T,
                                          const GridSpec& g) {
    std::vector<double> F(x.size(), 1.0);
    double norm0 = 1.0;
    for (const Step& s : time_steps(T, g.n_time, g.rannacher_steps, true)) {
        Tridiag Lhi = assemble(x, coeffs(s.t_hi));
        Tridiag Llo = assemble(x, coeffs(s.t_lo));
        StepMatrices M = step_matrices(Llo, Lhi, s.t_hi - s.t_lo, s.theta);
        std::vector<double> rhs = multiply(M.rhs, F);
        thomas(M.lhs, rhs);
        F.swap(rhs);
        double nrm = 0.0;
        for (double v : F) nrm = std::max(nrm, std::abs(v));
        if (!std::isfinite(nrm) || nrm > 10.0 * norm0)
            throw NotConverged("fd: instability detected, refine the time grid or reduce space_max", nrm);
    }
    return F;
}

inline std::vector<double> mbk_grid(const ModelSpec& m, double T, const GridSpec& g) {
    const double r0 = m.rbar0();
    double rmin = std::isnan(g.space_min) ? 0.0 : g.space_min;
    double rmax = g.space_max;
    if (std::isnan(rmax)) {
        double th = r0;
        for (int i = 0; i <= 200; ++i) th = std::max(th, m.theta_tilde(T * i / 200.0));
        rmax = 8.0 * th;
    }
    require(rmin >= 0.0 && rmin < r0 && r0 < rmax, "fd: grid must bracket rbar0 within [0, space_max]");
    const double c = g.concentration;
    const double A = std::asinh((rmin - 0.0) * c), B = std::asinh(rmax * c);
    std::vector<double> r(g.n_space);
    for (int i = 0; i < g.n_space; ++i) r[i] = std::sinh(A + (B - A) * i / (g.n_space - 1.0)) / c;
    r.front() = rmin;
    r.back() = rmax;
    // move the nearest interior node onto rbar0
    std::size_t j = 1;
    for (std::size_t i = 1; i + 1 < r.size(); ++i)
        if (std::abs(r[i] - r0) < std::abs(r[j] - r0)) j = i;
    r[j] = r0;
    return r;
}

inline std::vector<double> bk_grid(const ModelSpec& m, double T, const GridSpec& g, std::size_t& spot) {
    const double z0 = m.z0();
    const double sd = std::sqrt(m.sigma.int_var(0.0, T));
    double th_lo = z0, th_hi = z0;
    for (int i = 0; i <= 200; ++i) {
        double th = m.theta_bar.value(T * i / 200.0);
        th_lo = std::min(th_lo, th);
        th_hi = std::max(th_hi, th);
    }
    double lo = std::isnan(g.space_min) ? th_lo - 6.0 * sd - 1.0 : g.space_min;
    double hi = std::isnan(g.space_max) ? std::max(th_hi + 6.0 * sd, std::log(40.0 / (m.R * T))) + 1.0 : g.space_max;
    require(lo < z0 && z0 < hi, "fd: grid must bracket z0");
    // uniform grid with z0 on a node
    const int n = g.n_space;
    double h = (hi - lo) / (n - 1);
    long j = std::lround((z0 - lo) / h);
    j = std::clamp(j, 1L, long(n - 2));
    spot = static_cast<std::size_t>(j);
    std::vector<double> z(n);
    for (int i = 0; i < n; ++i) z[i] = z0 + (i - j) * h;
    return z;
}

inline CoeffFn mbk_coeffs(const ModelSpec& m, const std::vector<double>& r, bool discount = true) {
    return [&m, &r, discount](double t) {
        const std::size_t n = r.size();
        Coeffs k{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
        const double v = m.sigma.var(t), kap = m.kappa.value(t), th = m.theta_tilde(t);
        const double s = discount ? m.shift.value(t) : 0.0, R = discount ? m.R : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            k.a[i] = 0.5 * v * r[i] * r[i];
            k.b[i] = kap * r[i] * (th - r[i]);
            k.c[i] = -(s + R * r[i]);
        }
        return k;
    };
}

inline CoeffFn bk_coeffs(const ModelSpec& m, const std::vector<double>& z, bool discount = true) {
    return [&m, &z, discount](double t) {
        const std::size_t n = z.size();
        Coeffs k{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
        const double v = m.sigma.var(t), kap = m.kappa.value(t), th = m.theta_bar.value(t);
        const double s = discount ? m.shift.value(t) : 0.0, R = discount ? m.R : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            k.a[i] = 0.5 * v;
            k.b[i] = kap * (th - z[i]);
            k.c[i] = -(s + R * std::exp(z[i]));
        }
        return k;
    };
}

inline std::size_t index_of(const std::vector<double>& x, double v) {
    std::size_t j = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (std::abs(x[i] - v) < std::abs(x[j] - v)) j = i;
    return j;
}

}  // namespace detail

inline FdSolution zcb_price_fd_mbk(const ModelSpec& m, double T, const GridSpec& g = {}) {
    Stopwatch sw;
    require(m.kind == ModelKind::MBK, "fd mbk: MBK model required");
    require(T > 0.0, "fd: maturity must be > 0");
    g.validate();
    m.validate();
    FdSolution sol;
    sol.nodes = detail::mbk_grid(m, T, g);
    sol.values = detail::backward_solve(sol.nodes, detail::mbk_coeffs(m, sol.nodes), T, g);
    sol.spot_index = detail::index_of(sol.nodes, m.rbar0());
    sol.result.engine = "fd";
    sol.result.maturity = T;
    sol.result.price = sol.values[sol.spot_index];
    sol.result.settings = {{"n_space", double(g.n_space)}, {"n_time", double(g.n_time)},
                           {"space_max", sol.nodes.back()}, {"concentration", g.concentration}};
    sol.result.wall_clock_ms = sw.ms();
    return sol;
}

inline FdSolution zcb_price_fd_bk(const ModelSpec& m, double T, const GridSpec& g = {}) {
    Stopwatch sw;
    require(m.kind == ModelKind::BK, "fd bk: BK model required");
    require(T > 0.0, "fd: maturity must be > 0");
    g.validate();
    m.validate();
    FdSolution sol;
    sol.nodes = detail::bk_grid(m, T, g, sol.spot_index);
    sol.values = detail::backward_solve(sol.nodes, detail::bk_coeffs(m, sol.nodes), T, g);
    sol.result.engine = "fd";
    sol.result.maturity = T;
    sol.result.price = sol.values[sol.spot_index];
    sol.result.settings = {{"n_space", double(g.n_space)}, {"n_time", double(g.n_time)},
                           {"space_min", sol.nodes.front()}, {"space_max", sol.nodes.back()}};
    sol.result.wall_clock_ms = sw.ms();
    return sol;
}

/// Backward price for either model kind
inline FdSolution zcb_price_fd(const ModelSpec& m, double T, const GridSpec& g = {}) {
    return m.kind == ModelKind::MBK ? zcb_price_fd_mbk(m, T, g) : zcb_price_fd_bk(m, T, g);
}

/// Forward (discounted) density; price is its total mass
struct DensitySolution {
    std::vector<double> nodes;
    std::vector<double> density;  // per unit of the space variable
    std::vector<double> mass;     // per node
    double total_mass = 0.0;
    PriceResult result;
};

/// Evolves the discrete adjoint of the backward scheme forward from a unit
/// mass at the initial state, with its implicit start at t = 0.
inline DensitySolution density_forward(const ModelSpec& m, double T, const GridSpec& g = {},
                                       bool discounted = true) {
    Stopwatch sw;
    require(T > 0.0, "fd: maturity must be > 0");
    g.validate();
    m.validate();
    DensitySolution d;
    std::size_t spot = 0;
    if (m.kind == ModelKind::MBK) {
        d.nodes = detail::mbk_grid(m, T, g);
        spot = detail::index_of(d.nodes, m.rbar0());
    } else {
        d.nodes = detail::bk_grid(m, T, g, spot);
    }
    const auto& x = d.nodes;
    detail::CoeffFn coeffs = m.kind == ModelKind::MBK ? detail::mbk_coeffs(m, x, discounted)
                                                      : detail::bk_coeffs(m, x, discounted);
    std::vector<double> psi(x.size(), 0.0);
    psi[spot] = 1.0;
    auto steps = detail::time_steps(T, g.n_time, g.rannacher_steps, false);
    // the backward scheme applies steps from T to 0; its adjoint runs them in reverse
    for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
        detail::Tridiag Lhi = detail::assemble(x, coeffs(it->t_hi));
        detail::Tridiag Llo = detail::assemble(x, coeffs(it->t_lo));
        detail::StepMatrices M = detail::step_matrices(Llo, Lhi, it->t_hi - it->t_lo, it->theta);
        // backward step: F_lo = lhs^{-1} rhs F_hi
        detail::thomas_transposed(M.lhs, psi);
        psi = detail::multiply_transposed(M.rhs, psi);
        for (double v : psi)
            if (v < -1e-10) throw NotConverged("density_forward: negative density, increase rannacher_steps or n_time", v);
    }

    d.mass = psi;
    d.density.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double lo = i > 0 ? x[i - 1] : x[i], hi = i + 1 < x.size() ? x[i + 1] : x[i];
        d.density[i] = psi[i] / (0.5 * (hi - lo));
    }
    d.total_mass = 0.0;
    for (double v : psi) d.total_mass += v;
    d.result.engine = "fd-forward";
    d.result.maturity = T;
    d.result.price = d.total_mass;
    d.result.settings = {{"n_space", double(g.n_space)}, {"n_time", double(g.n_time)}};
    d.result.wall_clock_ms = sw.ms();
    return d;
}

}  // namespace zcb
