/**
 * @file mc.hpp
 * @brief Monte Carlo for BK and MBK: Euler in z or rbar, exact Verhulst paths
 *
 * Each path (or antithetic pair) owns a Mersenne Twister seeded from a
 * splitmix64 hash of (seed, index), and results are reduced in a fixed
 * pairwise order, so estimates do not depend on the thread count.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "zcb/errors.hpp"
#include "zcb/models.hpp"
#include "zcb/parallel.hpp"
#include "zcb/result.hpp"

namespace zcb {

enum class McScheme { EulerZ, EulerR, ExactVerhulst };

inline std::string to_string(McScheme s) {
    switch (s) {
        case McScheme::EulerZ: return "EulerZ";
        case McScheme::EulerR: return "EulerR";
        case McScheme::ExactVerhulst: return "ExactVerhulst";
    }
    return "?";
}

inline McScheme scheme_from_string(const std::string& s) {
    for (McScheme m : {McScheme::EulerZ, McScheme::EulerR, McScheme::ExactVerhulst})
        if (to_string(m) == s) return m;
    throw InputError("unknown MC scheme: " + s);
}

struct McConfig {
    long n_paths = 500000;
    int n_steps = 500;
    std::uint64_t seed = 42;
    std::optional<McScheme> scheme;  // default: EulerZ for BK, EulerR for MBK
    bool antithetic = false;
    int threads = 0;  // 0: thread_count()

    McScheme scheme_for(ModelKind k) const {
        return scheme.value_or(k == ModelKind::BK ? McScheme::EulerZ : McScheme::EulerR);
    }
    int workers() const { return threads > 0 ? threads : thread_count(); }
    void validate() const {
        require(n_paths >= 2, "McConfig: n_paths must be >= 2");
        require(n_steps >= 1, "McConfig: n_steps must be >= 1");
    }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent normal stream for (seed, index)
class PathRng {
    std::mt19937_64 eng_;
    std::normal_distribution<double> nd_;

public:
    PathRng(std::uint64_t seed, std::uint64_t index) : eng_(splitmix64(seed ^ splitmix64(index))) {}
    double normal() { return nd_(eng_); }
};

namespace detail {

/// Deterministic per-step data shared by all paths
struct StepTable {
    double dt = 0.0;
    std::vector<double> t;       // n_steps + 1 times
    std::vector<double> kappa;   // at left end of each step
    std::vector<double> level;   // theta (BK, EulerZ), theta_bar (MBK EulerZ), theta~ (MBK EulerR)
    std::vector<double> vol;     // sigma at left end
    std::vector<double> var;     // sigma^2 at left end
    std::vector<double> lx_mean; // exact Verhulst: mean of log X increment
    std::vector<double> lx_sd;   // exact Verhulst: sd of log X increment
    std::vector<double> kappa_end;
};

inline StepTable make_steps(const ModelSpec& m, double T, int n, McScheme scheme) {
    StepTable s;
    s.dt = T / n;
    for (int i = 0; i <= n; ++i) s.t.push_back(i == n ? T : i * s.dt);
    for (int i = 0; i <= n; ++i) {
        double t = s.t[i];
        s.kappa.push_back(m.kappa.value(t));
        s.vol.push_back(m.sigma.sigma_at(t));
        s.var.push_back(m.sigma.var(t));
        if (m.kind == ModelKind::BK) s.level.push_back(m.theta_bar.value(t));
        else s.level.push_back(scheme == McScheme::EulerZ ? m.theta(t) : m.theta_tilde(t));
    }
    if (scheme == McScheme::ExactVerhulst) {
        for (int i = 0; i < n; ++i) {
            double a = s.t[i], b = s.t[i + 1];
            double drift = quad::integrate([&](double u) { return m.kappa.value(u) * m.theta_tilde(u); }, a, b) +
                           std::log(m.kappa.value(b) / m.kappa.value(a));
            double v = m.sigma.int_var(a, b);
            s.lx_mean.push_back(drift - 0.5 * v);
            s.lx_sd.push_back(std::sqrt(v));
        }
    }
    return s;
}

/// Path state: z for EulerZ, rbar for EulerR, rho = D/X for ExactVerhulst
struct Stepper {
    const ModelSpec& m;
    const StepTable& s;
    McScheme scheme;
    double sqdt;

    Stepper(const ModelSpec& model, const StepTable& st, McScheme sc)
        : m(model), s(st), scheme(sc), sqdt(std::sqrt(st.dt)) {}

    double initial() const {
        switch (scheme) {
            case McScheme::EulerZ: return m.z0();
            case McScheme::EulerR: return m.rbar0();
            case McScheme::ExactVerhulst: return 1.0 / (m.kappa.value(0.0) * m.rbar0());
        }
        return 0.0;
    }

    double rbar(double state, int i) const {
        switch (scheme) {
            case McScheme::EulerZ: return std::exp(state);
            case McScheme::EulerR: return state;
            case McScheme::ExactVerhulst: return 1.0 / (s.kappa[i] * state);
        }
        return 0.0;
    }

    /// Advance from step i to i + 1; `clamped` counts EulerR reflections
    double step(double x, int i, double Z, long& clamped) const {
        const double dt = s.dt, k = s.kappa[i], th = s.level[i], sg = s.vol[i];
        const bool bk = m.kind == ModelKind::BK;
        switch (scheme) {
            case McScheme::EulerZ:
                return x + k * ((bk ? th - x : th - std::exp(x))) * dt + sg * sqdt * Z;
            case McScheme::EulerR: {
                double drift = bk ? x * (k * (th - std::log(x)) + 0.5 * s.var[i]) : k * x * (th - x);
                double y = x + drift * dt + sg * x * sqdt * Z;
                if (y <= 0.0) {
                    ++clamped;
                    y = 1e-12;
                }
                return y;
            }
            case McScheme::ExactVerhulst: {
                double g = std::exp(s.lx_mean[i] + s.lx_sd[i] * Z);
                return (x + 0.5 * dt * (1.0 + g)) / g;
            }
        }
        return x;
    }
};

struct PathOut {
    double discount = 1.0;  // exp(-R * trapezoid of rbar)
    double terminal = 0.0;
    long clamped = 0;
};

inline PathOut run_path(const Stepper& st, PathRng& rng, double sign, std::vector<double>* zbuf) {
    PathOut o;
    const int n = static_cast<int>(st.s.t.size()) - 1;
    double x = st.initial();
    double rb = st.rbar(x, 0);
    double integral = 0.5 * rb;
    for (int i = 0; i < n; ++i) {
        double Z;
        if (zbuf && sign < 0.0) Z = -(*zbuf)[i];
        else {
            Z = rng.normal();
            if (zbuf) (*zbuf)[i] = Z;
        }
        x = st.step(x, i, Z, o.clamped);
        rb = st.rbar(x, i + 1);
        if (!std::isfinite(rb)) {
            std::ostringstream os;
            os << "mc: non-finite rbar at step " << i + 1 << " (t = " << st.s.t[i + 1] << ")";
            throw InternalError(os.str());
        }
        integral += (i + 1 == n) ? 0.5 * rb : rb;
    }
    o.discount = std::exp(-st.m.R * integral * st.s.dt);
    o.terminal = rb;
    return o;
}

/// Per-unit (path or antithetic pair) values in index order
template <class PerUnit>
std::vector<double> collect(long units, int workers, PerUnit&& f) {
    std::vector<double> v(units);
    parallel_for(static_cast<std::size_t>(units), [&](std::size_t u) { v[u] = f(u); }, workers);
    return v;
}

inline void mean_stderr(const std::vector<double>& v, double& mean, double& se) {
    const std::size_t n = v.size();
    mean = pairwise_sum(v.data(), n) / n;
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = (v[i] - mean) * (v[i] - mean);
    se = n > 1 ? std::sqrt(pairwise_sum(d.data(), n) / (n - 1) / n) : 0.0;
}

}  // namespace detail

struct McEstimate {
    double price = 0.0;
    double stderr_ = 0.0;
    long clamped = 0;
    PriceResult result;
};

inline McEstimate zcb_price_mc(const ModelSpec& m, double T, const McConfig& cfg = {}) {
    Stopwatch sw;
    cfg.validate();
    m.validate();
    require(T > 0.0, "mc: maturity must be > 0");
    const McScheme scheme = cfg.scheme_for(m.kind);
    require(!(scheme == McScheme::ExactVerhulst && m.kind == ModelKind::BK), "mc: ExactVerhulst needs an MBK model");
    const detail::StepTable tab = detail::make_steps(m, T, cfg.n_steps, scheme);
    const detail::Stepper st(m, tab, scheme);
    const double sdisc = std::exp(-m.shift.integrate(0.0, T));
    const long units = cfg.antithetic ? cfg.n_paths / 2 : cfg.n_paths;
    std::vector<long> clamps(units, 0);
    auto vals = detail::collect(units, cfg.workers(), [&](std::size_t u) {
        PathRng rng(cfg.seed, u);
        if (!cfg.antithetic) {
            auto o = detail::run_path(st, rng, 1.0, nullptr);
            clamps[u] = o.clamped;
            return o.discount;
        }
        std::vector<double> z(cfg.n_steps);
        auto a = detail::run_path(st, rng, 1.0, &z);
        auto b = detail::run_path(st, rng, -1.0, &z);
        clamps[u] = a.clamped + b.clamped;
        return 0.5 * (a.discount + b.discount);
    });
    McEstimate e;
    detail::mean_stderr(vals, e.price, e.stderr_);
    e.price *= sdisc;
    e.stderr_ *= sdisc;
    for (long c : clamps) e.clamped += c;
    e.result.engine = "mc";
    e.result.maturity = T;
    e.result.price = e.price;
    e.result.error_estimate = e.stderr_;
    e.result.settings = {{"n_paths", double(cfg.n_paths)}, {"n_steps", double(cfg.n_steps)},
                         {"seed", double(cfg.seed)}, {"antithetic", cfg.antithetic ? 1.0 : 0.0},
                         {"clamped", double(e.clamped)}};
    if (e.clamped > 0) e.result.warnings.push_back("EulerR reflected negative rbar values");
    e.result.wall_clock_ms = sw.ms();
    return e;
}

/// Terminal rbar samples (antithetic pairs stored adjacently)
inline std::vector<double> sample_terminal(const ModelSpec& m, double T, const McConfig& cfg) {
    cfg.validate();
    m.validate();
    const McScheme scheme = cfg.scheme_for(m.kind);
    require(!(scheme == McScheme::ExactVerhulst && m.kind == ModelKind::BK), "mc: ExactVerhulst needs an MBK model");
    const detail::StepTable tab = detail::make_steps(m, T, cfg.n_steps, scheme);
    const detail::Stepper st(m, tab, scheme);
    const long units = cfg.antithetic ? cfg.n_paths / 2 : cfg.n_paths;
    std::vector<double> out(cfg.antithetic ? 2 * units : units);
    parallel_for(static_cast<std::size_t>(units), [&](std::size_t u) {
        PathRng rng(cfg.seed, u);
        if (!cfg.antithetic) {
            out[u] = detail::run_path(st, rng, 1.0, nullptr).terminal;
            return;
        }
        std::vector<double> z(cfg.n_steps);
        out[2 * u] = detail::run_path(st, rng, 1.0, &z).terminal;
        out[2 * u + 1] = detail::run_path(st, rng, -1.0, &z).terminal;
    }, cfg.workers());
    return out;
}

/// Terminal samples of the exact Verhulst representation
inline std::vector<double> sample_exact_verhulst(const ModelSpec& m, double T, McConfig cfg) {
    require(m.kind == ModelKind::MBK, "sample_exact_verhulst: MBK model required");
    cfg.scheme = McScheme::ExactVerhulst;
    return sample_terminal(m, T, cfg);
}

/// Per-step statistics of r_BK - r_MBK on shared Gaussian increments
struct PairedStats {
    std::vector<double> t, mean, min, max;
    double overall_min = 0.0;
};

inline PairedStats simulate_paired(const ModelSpec& bk, const ModelSpec& mbk, double T, const McConfig& cfg) {
    cfg.validate();
    require(bk.kind == ModelKind::BK && mbk.kind == ModelKind::MBK, "simulate_paired: need (BK, MBK) models");
    for (int i = 0; i <= 50; ++i) {
        double t = T * i / 50.0;
        require(std::abs(bk.kappa.value(t) - mbk.kappa.value(t)) < 1e-12 &&
                    std::abs(bk.sigma.var(t) - mbk.sigma.var(t)) < 1e-12 &&
                    std::abs(bk.shift.value(t) - mbk.shift.value(t)) < 1e-12,
                "simulate_paired: kappa, sigma and shift must match");
    }
    require(bk.R == mbk.R && bk.r0 == mbk.r0, "simulate_paired: r0 and R must match");
    const int n = cfg.n_steps;
    const auto tb = detail::make_steps(bk, T, n, McScheme::EulerZ);
    const auto tm = detail::make_steps(mbk, T, n, McScheme::EulerZ);
    const detail::Stepper sb(bk, tb, McScheme::EulerZ), sm(mbk, tm, McScheme::EulerZ);

    // fixed blocks of paths, so the reduction order is independent of threads
    constexpr long block = 256;
    const long blocks = (cfg.n_paths + block - 1) / block;
    std::vector<std::vector<double>> bsum(blocks, std::vector<double>(n + 1, 0.0));
    std::vector<std::vector<double>> bmin(blocks, std::vector<double>(n + 1, std::numeric_limits<double>::infinity()));
    std::vector<std::vector<double>> bmax(blocks, std::vector<double>(n + 1, -std::numeric_limits<double>::infinity()));
    parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t b) {
        long clamped = 0;
        for (long p = long(b) * block; p < std::min(cfg.n_paths, long(b + 1) * block); ++p) {
            PathRng rng(cfg.seed, static_cast<std::uint64_t>(p));
            double xb = sb.initial(), xm = sm.initial();
            for (int i = 0; i <= n; ++i) {
                if (i > 0) {
                    double Z = rng.normal();
                    xb = sb.step(xb, i - 1, Z, clamped);
                    xm = sm.step(xm, i - 1, Z, clamped);
                }
                double d = bk.R * (std::exp(xb) - std::exp(xm));
                bsum[b][i] += d;
                bmin[b][i] = std::min(bmin[b][i], d);
                bmax[b][i] = std::max(bmax[b][i], d);
            }
        }
    }, cfg.workers());
    PairedStats ps;
    ps.overall_min = std::numeric_limits<double>::infinity();
    std::vector<double> col(blocks);
    for (int i = 0; i <= n; ++i) {
        double mn = std::numeric_limits<double>::infinity(), mx = -mn;
        for (long b = 0; b < blocks; ++b) {
            col[b] = bsum[b][i];
            mn = std::min(mn, bmin[b][i]);
            mx = std::max(mx, bmax[b][i]);
        }
        ps.t.push_back(tb.t[i]);
        ps.mean.push_back(pairwise_sum(col.data(), col.size()) / cfg.n_paths);
        ps.min.push_back(mn);
        ps.max.push_back(mx);
        ps.overall_min = std::min(ps.overall_min, mn);
    }
    return ps;
}

}  // namespace zcb
