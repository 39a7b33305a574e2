/**
 * @file special.hpp
 * @brief Complex log-Gamma, Kummer M/U and Whittaker M/W functions
 *
 * Whittaker W with purely imaginary second index is evaluated from the
 * Laplace-type integral on a rotated ray, which removes most of the
 * cancellation that defeats the connection formula for large |mu|.
 */

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "zcb/errors.hpp"
#include "zcb/quadrature.hpp"

namespace zcb {

using Complex = std::complex<double>;

namespace detail {

inline bool is_nonpositive_integer(Complex z) {
    return z.imag() == 0.0 && z.real() <= 0.0 && z.real() == std::round(z.real());
}

// Godfrey's Lanczos coefficients, g = 607/128, n = 15
inline constexpr double lanczos_g = 607.0 / 128.0;
inline constexpr std::array<double, 15> lanczos_c = {
    0.99999999999999709182,      57.156235665862923517,      -59.597960355475491248,
    14.136097974741747174,       -0.49191381609762019978,    0.33994649984811888699e-4,
    0.46523628927048575665e-4,   -0.98374475304879564677e-4, 0.15808870322491248884e-3,
    -0.21026444172410488319e-3,  0.21743961811521264320e-3,  -0.16431810653676389022e-3,
    0.84418223983852743293e-4,   -0.26190838401581408670e-4, 0.36899182659531622704e-5};

inline Complex ln_gamma_right(Complex z) {
    z -= 1.0;
    Complex x = lanczos_c[0];
    for (std::size_t i = 1; i < lanczos_c.size(); ++i) x += lanczos_c[i] / (z + double(i));
    Complex t = z + lanczos_g + 0.5;
    return 0.5 * std::log(2.0 * M_PI) + (z + 0.5) * std::log(t) - t + std::log(x);
}

}  // namespace detail

/// log Gamma(z); throws PoleError at non-positive integers
inline Complex ln_gamma(Complex z) {
    if (detail::is_nonpositive_integer(z)) throw PoleError("ln_gamma: pole at non-positive integer");
    if (z.real() < 0.5) {
        // Gamma(z) Gamma(1-z) = pi / sin(pi z)
        return std::log(M_PI) - std::log(std::sin(M_PI * z)) - detail::ln_gamma_right(1.0 - z);
    }
    return detail::ln_gamma_right(z);
}

inline Complex gamma_fn(Complex z) { return std::exp(ln_gamma(z)); }

/// 1/Gamma(z), zero at the poles
inline Complex rgamma(Complex z) {
    if (detail::is_nonpositive_integer(z)) return 0.0;
    return std::exp(-ln_gamma(z));
}

/// Gamma(1/2 - y + i w) Gamma(1/2 - y - i w)
inline Complex gamma_pair(double y, Complex omega) {
    const Complex i(0.0, 1.0);
    Complex a = 0.5 - y + i * omega, b = 0.5 - y - i * omega;
    if (omega.imag() == 0.0) {
        // conjugate pair: |Gamma(a)|^2, real by construction
        Complex la = ln_gamma(a);
        return std::exp(2.0 * la.real());
    }
    return std::exp(ln_gamma(a) + ln_gamma(b));
}

/// Kummer 1F1(a; b; x) by its power series
inline Complex kummer_m(Complex a, Complex b, double x) {
    if (detail::is_nonpositive_integer(b)) throw PoleError("kummer_m: b is a non-positive integer");
    Complex term = 1.0, sum = 1.0;
    double peak = 1.0;
    for (int n = 0; n < 10000; ++n) {
        term *= (a + double(n)) / (b + double(n)) * (x / (n + 1.0));
        sum += term;
        peak = std::max(peak, std::abs(term));
        if (std::abs(term) < 1e-17 * std::abs(sum) && n > 2) {
            if (peak > 1e8 * std::abs(sum))
                throw NotConverged("kummer_m: cancellation in power series", peak / std::abs(sum));
            return sum;
        }
        if (term == 0.0) return sum;
    }
    throw NotConverged("kummer_m: series did not converge", std::abs(term));
}

/// M_{k,mu}(x) = e^{-x/2} x^{mu+1/2} 1F1(1/2 + mu - k; 1 + 2 mu; x)
inline Complex whittaker_m(double k, Complex mu, double x) {
    require(x > 0.0, "whittaker_m: x must be > 0");
    return std::exp(-0.5 * x + (mu + 0.5) * std::log(x)) * kummer_m(0.5 + mu - k, 1.0 + 2.0 * mu, x);
}

namespace detail {

/// J(p, q, x) = int_0^inf e^{-u} u^p (1 + u/x)^q du, Re p > -1.
///
/// The ray is rotated by angle phi (|phi| < pi/2, chosen from the
/// imaginary parts) so that oscillation is traded for decay. The piece
/// [0, delta] uses the Taylor expansion of e^{-u}(1+u/x)^q; the rest uses
/// composite Gauss-Legendre in log(rho).
inline Complex laplace_power_integral(Complex p, Complex q, double x) {
    if (!(p.real() > -1.0)) throw NotConverged("laplace_power_integral: needs Re p > -1");
    const double im = p.imag() + q.imag();
    const double phi = (M_PI / 3.0) * std::max(-1.0, std::min(1.0, im));
    const Complex rot = std::polar(1.0, phi);
    const Complex i(0.0, 1.0);

    // Taylor part on |u| <= delta, radius of convergence x
    const double delta = std::min(0.5, 0.25 * x);
    std::vector<Complex> h(1, 1.0);
    std::vector<double> e(1, 1.0);
    Complex head = 0.0;
    const Complex logd = std::log(delta) + i * phi;
    for (int n = 0; n < 400; ++n) {
        if (n > 0) {
            h.push_back(h.back() * (q - double(n - 1)) / (n * x));
            e.push_back(-e.back() / n);
        }
        Complex c = 0.0;
        for (int j = 0; j <= n; ++j) c += e[j] * h[n - j];
        Complex term = c * std::exp((p + double(n + 1)) * logd) / (p + double(n + 1));
        head += term;
        if (n > 4 && std::abs(term) < 1e-18 * std::abs(head)) break;
    }

    // Tail in v = log rho, panels of width 0.25, until negligible
    static const quad::Rule gl = quad::gauss_legendre(16, 0.0, 1.0);
    const double width = 0.25;
    const double cphi = std::cos(phi);
    Complex tail = 0.0;
    double v0 = std::log(delta);
    for (int panel = 0; panel < 2000; ++panel) {
        Complex ps = 0.0;
        for (std::size_t j = 0; j < gl.x.size(); ++j) {
            double v = v0 + width * gl.x[j];
            double rho = std::exp(v);
            Complex u = rho * rot;
            Complex lf = -u + p * (v + i * phi) + q * std::log(1.0 + u / x);
            ps += gl.w[j] * width * std::exp(lf) * u;  // du = u dv along the ray
        }
        tail += ps;
        v0 += width;
        double rho = std::exp(v0);
        if (rho * cphi > 40.0 && std::abs(ps) < 1e-18 * std::abs(head + tail)) break;
        if (panel == 1999) throw NotConverged("laplace_power_integral: tail not converged", std::abs(ps));
    }
    return head + tail;
}

}  // namespace detail

/// W_{k,mu}(x) from e^{-x/2} x^k / Gamma(1/2 + mu - k) * J(mu - k - 1/2, mu + k - 1/2, x)
inline Complex whittaker_w(double k, Complex mu, double x) {
    require(x > 0.0, "whittaker_w: x must be > 0");
    // W is even in mu; use the representative with Re(mu) >= 0
    if (mu.real() < 0.0 || (mu.real() == 0.0 && mu.imag() < 0.0)) mu = -mu;
    if (!((0.5 + mu - k).real() > 0.0))
        throw NotConverged("whittaker_w: integral representation needs Re(1/2 + mu - k) > 0");
    Complex J = detail::laplace_power_integral(mu - k - 0.5, mu + k - 0.5, x);
    return std::exp(-0.5 * x + k * std::log(x) - ln_gamma(0.5 + mu - k)) * J;
}

/// Kummer U(a, b, x).
///
/// Large x: asymptotic series. Otherwise the connection formula through
/// 1F1 when b is safely non-integer; near-integer b (or heavy cancellation)
/// falls back to the Laplace integral, which needs Re a > 0.
inline Complex kummer_u(Complex a, Complex b, double x) {
    require(x > 0.0, "kummer_u: x must be > 0");
    // asymptotic x^{-a} sum (a)_n (a-b+1)_n / n! (-x)^{-n}
    {
        Complex term = 1.0, sum = 1.0;
        double last = 1.0;
        for (int n = 0; n < 200; ++n) {
            term *= (a + double(n)) * (a - b + double(n + 1)) / ((n + 1.0) * -x);
            double at = std::abs(term);
            if (at > last) break;
            sum += term;
            last = at;
            if (at < 1e-16 * std::abs(sum)) return std::exp(-a * std::log(x)) * sum;
        }
    }
    const double dist = std::abs(b - std::round(b.real()));
    if (dist > 1e-3) {
        try {
            Complex t1 = std::exp(ln_gamma(1.0 - b) - ln_gamma(a - b + 1.0)) * kummer_m(a, b, x);
            Complex t2 = std::exp(ln_gamma(b - 1.0) - ln_gamma(a) + (1.0 - b) * std::log(x)) *
                         kummer_m(a - b + 1.0, 2.0 - b, x);
            Complex u = t1 + t2;
            if (std::max(std::abs(t1), std::abs(t2)) < 1e4 * std::abs(u)) return u;
        } catch (const NotConverged&) {
        } catch (const PoleError&) {
        }
    }
    if (!(a.real() > 0.0)) throw NotConverged("kummer_u: parameter region not supported");
    return std::exp(-a * std::log(x) - ln_gamma(a)) * detail::laplace_power_integral(a - 1.0, b - a - 1.0, x);
}

}  // namespace zcb
