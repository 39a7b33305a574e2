#include <gtest/gtest.h>

#include <cmath>

#include "zcb/config.hpp"
#include "zcb/fd.hpp"
#include "zcb/rdtm.hpp"

using namespace zcb;

namespace {

ModelSpec appC() { return model_from_json(preset("appC").at("model")); }

/// Same model with all term functions as opaque callables, forcing the quadrature path
ModelSpec appC_numeric() {
    ModelSpec m = appC();
    const ModelSpec src = m;
    m.kappa = TermFunction::custom([src](double t) { return src.kappa.value(t); });
    m.theta_bar = TermFunction::custom([src](double t) { return src.theta_bar.value(t); });
    m.sigma = Volatility::sigma(TermFunction::custom([src](double t) { return src.sigma.sigma_at(t); }));
    return m;
}

}  // namespace

TEST(BkCoefficients, ClosedFormMatchesQuadrature) {
    for (double nu : {0.0, 1.0}) {
        const BkCoefficients a(appC(), 1.0, nu), b(appC_numeric(), 1.0, nu);
        ASSERT_TRUE(a.closed_form());
        ASSERT_FALSE(b.closed_form());
        for (double t : {0.0, 0.2, 0.6, 1.0}) {
            EXPECT_NEAR(a.a(t), b.a(t), 1e-12 * a.a(t));
            EXPECT_NEAR(a.b(t), b.b(t), 1e-12 * (1.0 + std::abs(a.b(t))));
            EXPECT_NEAR(a.beta(t), b.beta(t), 1e-12 * a.beta(t));
            EXPECT_NEAR(a.tau(t), b.tau(t), 1e-12 * (1.0 + a.tau(t)));
        }
    }
}

TEST(BkCoefficients, AnchorAndRoundTrip) {
    const BkCoefficients c(appC(), 2.0, 0.0);
    EXPECT_DOUBLE_EQ(c.a(0.0), 1.0);
    EXPECT_DOUBLE_EQ(c.b(0.0), 0.0);
    EXPECT_DOUBLE_EQ(c.tau(2.0), 0.0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        double t = 2.0 * i / 99.0;
        worst = std::max(worst, std::abs(c.t_of_tau(c.tau(t)) - t));
    }
    EXPECT_LT(worst, 1e-10);
    const BkCoefficients n(appC_numeric(), 2.0, 0.0);
    EXPECT_NEAR(n.t_of_tau(n.tau(0.7)), 0.7, 1e-10);
}

TEST(BkCoefficients, BetaFromDefinition) {
    // beta = 2 R e^{-b/a} / (sigma^2 a^2)
    const ModelSpec m = appC();
    const BkCoefficients c(m, 1.0, 0.0);
    for (double t : {0.0, 0.5, 1.0}) {
        double a = c.a(t), b = c.b(t);
        double want = 2.0 * m.R * std::exp(-b / a) / (m.sigma.var(t) * a * a);
        EXPECT_NEAR(c.beta(t), want, 1e-12 * want);
    }
}

TEST(Rdtm, ZeroHeatTimeGivesOnlyLeadingTerm) {
    const BkCoefficients c(appC(), 1.0, 0.0);
    const auto W = rdtm_terms(c, {}, 0.0, -4.6);
    ASSERT_EQ(W.size(), 3u);
    EXPECT_EQ(W[0], 1.0);
    EXPECT_EQ(W[1], 0.0);
    EXPECT_EQ(W[2], 0.0);
}

TEST(Rdtm, ExponentIdentity) {
    // (a_s + a_k)^2 (tau - s) + a_k^2 (s - k) = 2 a_s a_k (tau - s) + a_s^2 (tau - s) + a_k^2 (tau - k)
    for (double as : {0.3, 1.0, 2.5})
        for (double ak : {0.7, 1.9}) {
            const double tau = 1.3, s = 0.8, k = 0.35;
            double lhs = (as + ak) * (as + ak) * (tau - s) + ak * ak * (s - k);
            double rhs = 2 * as * ak * (tau - s) + as * as * (tau - s) + ak * ak * (tau - k);
            EXPECT_NEAR(lhs, rhs, 1e-14);
        }
}

TEST(Rdtm, FirstTermToyClosedForm) {
    // sigma = sqrt 2 and kappa -> 0 give a = 1, tau = T - t; constant theta = 0 and R = 1
    // make beta = 2 R / sigma^2 = 1 and abar = 1, so W_1 = -e^x (e^tau - 1)
    ModelSpec m;
    m.kind = ModelKind::BK;
    m.kappa = TermFunction::constant(1e-300);
    m.theta_bar = TermFunction::constant(0.0);
    m.sigma = Volatility::variance(TermFunction::constant(2.0));
    m.r0 = 0.01;
    m.R = 1.0;
    const BkCoefficients c(m, 1.0, 0.0);
    const double x = -1.3, tau = 0.8;
    const auto W = rdtm_terms(c, {1, NuAnchor::Zero, 24}, tau, x);
    const double want = -std::exp(x) * (std::exp(tau) - 1.0);
    EXPECT_LT(std::abs(W[1] / want - 1.0), 1e-10);
}

TEST(Rdtm, ShortMaturitiesMatchPublished) {
    RdtmConfig one{1, NuAnchor::Zero, 24}, two{2, NuAnchor::Zero, 24};
    EXPECT_NEAR(zcb_price_rdtm(appC(), 1.0 / 12, one).price, 0.9990, 2e-3);
    EXPECT_NEAR(zcb_price_rdtm(appC(), 1.0 / 12, two).price, 0.9990, 2e-3);
    EXPECT_NEAR(zcb_price_rdtm(appC(), 0.3, one).price, 0.9950, 2e-3);
    EXPECT_NEAR(zcb_price_rdtm(appC(), 0.3, two).price, 0.9949, 2e-3);
    GridSpec g;
    g.n_space = 300;
    for (double T : {1.0 / 12, 0.3}) EXPECT_NEAR(zcb_price_rdtm(appC(), T).price, zcb_price_fd(appC(), T, g).result.price, 1e-4);
}

TEST(Rdtm, SecondOrderNearFd) {
    GridSpec g;
    g.n_space = 300;
    for (double T : {0.3, 0.5, 1.0}) {
        const double fd = zcb_price_fd(appC(), T, g).result.price;
        EXPECT_LT(std::abs(zcb_price_rdtm(appC(), T).price - fd) / fd, 0.005) << T;
    }
}

TEST(Rdtm, OrderGapShrinksQuadratically) {
    auto gap = [](double T) {
        return std::abs(zcb_price_rdtm(appC(), T, {2, NuAnchor::Zero, 24}).price -
                        zcb_price_rdtm(appC(), T, {1, NuAnchor::Zero, 24}).price);
    };
    const double T1 = 1.0 / 52, T2 = 0.5;
    EXPECT_GE(std::log(gap(T2) / gap(T1)) / std::log(T2 / T1), 1.8);
}

TEST(Rdtm, NuSensitivity) {
    for (double T : {0.3, 1.0})
        EXPECT_LT(std::abs(zcb_price_rdtm(appC(), T, {2, NuAnchor::Zero, 24}).price -
                           zcb_price_rdtm(appC(), T, {2, NuAnchor::Maturity, 24}).price),
                  5e-3);
}

TEST(Rdtm, LongMaturityWarns) {
    const auto r = zcb_price_rdtm(appC(), 5.0);
    EXPECT_FALSE(r.warnings.empty());
    EXPECT_LE(zcb_price_rdtm(appC(), 1.0).price, 1.0);
}

TEST(Rdtm, Rejects) {
    EXPECT_THROW(zcb_price_rdtm(appC(), 1.0, {3, NuAnchor::Zero, 24}), InputError);
    EXPECT_THROW(zcb_price_rdtm(appC(), 1.0, {2, NuAnchor::Zero, 4}), InputError);
    EXPECT_THROW(zcb_price_rdtm(model_from_json(preset("numE").at("model")), 1.0), InputError);
    ModelSpec m = appC();
    m.sigma = Volatility::sigma(TermFunction::constant(5.0));
    EXPECT_THROW(zcb_price_rdtm(m, 50.0), NotConverged);
}
