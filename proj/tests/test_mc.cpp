#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "zcb/closedform.hpp"
#include "zcb/config.hpp"
#include "zcb/fd.hpp"
#include "zcb/mc.hpp"

using namespace zcb;

namespace {

ModelSpec numE() { return model_from_json(preset("numE").at("model")); }

void moments(const std::vector<double>& v, double& mean, double& var) {
    mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= v.size() - 1;
}

}  // namespace

TEST(PathRng, Reproducible) {
    PathRng a(7, 3), b(7, 3), c(7, 4);
    double x = a.normal();
    EXPECT_EQ(x, b.normal());
    EXPECT_NE(x, c.normal());
}

TEST(Mc, SchemeNames) {
    for (McScheme s : {McScheme::EulerZ, McScheme::EulerR, McScheme::ExactVerhulst})
        EXPECT_EQ(scheme_from_string(to_string(s)), s);
    EXPECT_THROW(scheme_from_string("Milstein"), InputError);
}

TEST(Mc, ExactVerhulstUnbiasedAgainstClosedForm) {
    McConfig cfg;
    cfg.n_paths = 20000;
    cfg.n_steps = 200;
    cfg.scheme = McScheme::ExactVerhulst;
    ClosedFormEngine cf(numE());
    for (double T : {0.5, 2.0}) {
        const auto e = zcb_price_mc(numE(), T, cfg);
        EXPECT_LT(std::abs(e.price - cf.price(T).price), 3.0 * e.stderr_) << "T=" << T;
    }
}

TEST(Mc, EulerBkAgainstFd) {
    const ModelSpec bk = model_from_json(preset("appC").at("model"));
    McConfig cfg;
    cfg.n_paths = 20000;
    cfg.n_steps = 200;
    const auto e = zcb_price_mc(bk, 1.0, cfg);
    GridSpec g;
    g.n_space = 300;
    EXPECT_LT(std::abs(e.price - zcb_price_fd(bk, 1.0, g).result.price), 3.0 * e.stderr_ + 2e-4);
}

TEST(Mc, DeterministicAcrossThreadCounts) {
    McConfig cfg;
    cfg.n_paths = 3000;
    cfg.n_steps = 50;
    cfg.threads = 1;
    const auto a = zcb_price_mc(numE(), 1.0, cfg);
    cfg.threads = 4;
    const auto b = zcb_price_mc(numE(), 1.0, cfg);
    EXPECT_EQ(a.price, b.price);
    EXPECT_EQ(a.stderr_, b.stderr_);
}

TEST(Mc, AntitheticReducesError) {
    McConfig cfg;
    cfg.n_paths = 4000;
    cfg.n_steps = 50;
    const auto plain = zcb_price_mc(numE(), 1.0, cfg);
    cfg.antithetic = true;
    const auto anti = zcb_price_mc(numE(), 1.0, cfg);
    EXPECT_LT(anti.stderr_, plain.stderr_);
}

TEST(Mc, ExactAndEulerTerminalDistributionsAgree) {
    McConfig cfg;
    cfg.n_paths = 20000;
    cfg.n_steps = 500;
    cfg.scheme = McScheme::EulerR;
    const auto eu = sample_terminal(numE(), 1.0, cfg);
    cfg.seed = 4242;
    const auto ex = sample_exact_verhulst(numE(), 1.0, cfg);
    double m1, v1, m2, v2;
    moments(eu, m1, v1);
    moments(ex, m2, v2);
    const double n = cfg.n_paths;
    EXPECT_LT(std::abs(m1 - m2), 3.0 * std::sqrt((v1 + v2) / n));
    // variance of the sample variance ~ 2 v^2 / n for near-normal data; use the fourth moment
    auto m4 = [](const std::vector<double>& v, double m) {
        double s = 0.0;
        for (double x : v) s += std::pow(x - m, 4);
        return s / v.size();
    };
    const double se_v = std::sqrt((m4(eu, m1) - v1 * v1) / n + (m4(ex, m2) - v2 * v2) / n);
    EXPECT_LT(std::abs(v1 - v2), 3.0 * se_v);
}

TEST(Mc, StationaryGammaMean) {
    // kappa = 0.5, theta~ = 0.5, sigma = 0.3: q = -2.28, Gamma(4.56, 0.09), mean 0.41
    const ModelSpec m = model_from_json(preset("stationary").at("model"));
    const auto rep = classify_regime(m, 10.0);
    ASSERT_EQ(rep.classification, Regime::StationaryGamma);
    McConfig cfg;
    cfg.n_paths = 20000;
    cfg.n_steps = 400;
    const auto x = sample_exact_verhulst(m, 200.0, cfg);
    double mean, var;
    moments(x, mean, var);
    EXPECT_NEAR(mean, rep.shape * rep.scale, 0.05 * rep.shape * rep.scale);
}

TEST(Mc, PairedDominance) {
    const ModelSpec mbk = numE();
    McConfig cfg;
    cfg.n_paths = 1000;
    cfg.n_steps = 200;
    const auto ps = simulate_paired(bk_twin(mbk), mbk, 1.0, cfg);
    EXPECT_GE(ps.overall_min, -1e-12);
    EXPECT_EQ(ps.t.size(), 201u);
}

TEST(Mc, PairedDeterministic) {
    const ModelSpec mbk = numE();
    McConfig cfg;
    cfg.n_paths = 600;
    cfg.n_steps = 20;
    cfg.threads = 1;
    const auto a = simulate_paired(bk_twin(mbk), mbk, 1.0, cfg);
    cfg.threads = 3;
    const auto b = simulate_paired(bk_twin(mbk), mbk, 1.0, cfg);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.min, b.min);
}

TEST(Mc, EulerRNoReflectionsAtDefaultSteps) {
    McConfig cfg;
    cfg.n_paths = 20000;
    for (double T : {1.0, 5.0}) EXPECT_EQ(zcb_price_mc(numE(), T, cfg).clamped, 0) << T;
}

TEST(Mc, Rejects) {
    McConfig cfg;
    cfg.n_paths = 1;
    EXPECT_THROW(zcb_price_mc(numE(), 1.0, cfg), InputError);
    cfg.n_paths = 100;
    cfg.scheme = McScheme::ExactVerhulst;
    EXPECT_THROW(zcb_price_mc(model_from_json(preset("appC").at("model")), 1.0, cfg), InputError);
}
