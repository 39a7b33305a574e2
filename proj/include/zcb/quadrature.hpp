#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "zcb/errors.hpp"

namespace zcb::quad {

/// Adaptive Gauss-Kronrod on a finite interval
template <class F>
double integrate(F&& f, double a, double b, double tol = 1e-13) {
    if (a == b) return 0.0;
    double err = 0.0;
    double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, a, b, 15, tol, &err);
    return v;
}

/// Gauss-Legendre nodes and weights on [a, b]
struct Rule {
    std::vector<double> x;
    std::vector<double> w;
};

inline Rule gauss_legendre(int n, double a, double b) {
    // Golub-Welsch is overkill here; Newton on P_n from the Chebyshev guess
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (b + a);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 1; j <= n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        double w = 2.0 / ((1.0 - z * z) * dp * dp);
        r.x[i] = mid - half * z;
        r.x[n - 1 - i] = mid + half * z;
        r.w[i] = r.w[n - 1 - i] = half * w;
    }
    return r;
}

/// Composite Gauss-Legendre with `panels` equal panels of `order` points
template <class F>
double composite_gl(F&& f, double a, double b, int panels, int order = 16) {
    const Rule ref = gauss_legendre(order, 0.0, 1.0);
    const double h = (b - a) / panels;
    double s = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * h;
        for (int i = 0; i < order; ++i) s += ref.w[i] * h * f(lo + h * ref.x[i]);
    }
    return s;
}

/// Monotone root of f on [a, b] by safeguarded bisection/secant
template <class F>
double solve_monotone(F&& f, double target, double a, double b, double tol = 1e-14) {
    double fa = f(a) - target, fb = f(b) - target;
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (fa * fb > 0.0) throw InputError("solve_monotone: target not bracketed");
    for (int it = 0; it < 200; ++it) {
        double m = b - fb * (b - a) / (fb - fa);
        if (!(m > std::min(a, b) && m < std::max(a, b)) || it % 3 == 2) m = 0.5 * (a + b);
        double fm = f(m) - target;
        if (fm == 0.0) return m;
        if ((fm < 0.0) == (fa < 0.0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
        if (std::abs(b - a) <= tol * (1.0 + std::abs(m))) return 0.5 * (a + b);
    }
    return 0.5 * (a + b);
}

}  // namespace zcb::quad
