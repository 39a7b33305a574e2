#include <gtest/gtest.h>

#include <cmath>

#include "zcb/closedform.hpp"
#include "zcb/config.hpp"
#include "zcb/fd.hpp"

using namespace zcb;

namespace {

ModelSpec numE() { return model_from_json(preset("numE").at("model")); }
ModelSpec appC(bool variance = false) { return model_from_json(preset(variance ? "appC-var" : "appC").at("model")); }

double bp(double a, double b) { return (a - b) / a * 1e4; }

const double kT[] = {1.0 / 12, 0.3, 0.5, 1, 2, 5, 10, 20, 30, 50};
const double kRef[] = {0.997672472225449, 0.992837594177785, 0.989393270332173, 0.983112662972991,
                       0.975204698894168, 0.96318033525001,  0.953815049238737, 0.945152720198622,
                       0.940789234294776, 0.936378211354391};
// published analytic minus FD gaps in bp
const double kPublishedGap[] = {-0.0385, -0.0625, -0.0713, -0.0929, -0.2377, -0.2818};

}  // namespace

TEST(Tridiag, ThomasSolvesAndTransposes) {
    detail::Tridiag A(4);
    A.lo = {0.0, -1.0, -0.5, -1.0};
    A.di = {4.0, 4.0, 3.0, 5.0};
    A.up = {-1.0, -2.0, -1.0, 0.0};
    std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
    auto b = detail::multiply(A, x);
    detail::thomas(A, b);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(b[i], x[i], 1e-14);
    auto bt = detail::multiply_transposed(A, x);
    detail::thomas_transposed(A, bt);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(bt[i], x[i], 1e-14);
}

TEST(FdMbk, GapToClosedFormWithinTwicePublished) {
    for (int i = 0; i < 6; ++i) {
        const double fd = zcb_price_fd(numE(), kT[i]).result.price;
        EXPECT_LE(std::abs(bp(kRef[i], fd)), 2.0 * std::abs(kPublishedGap[i])) << "T=" << kT[i];
    }
}

TEST(FdMbk, LongMaturitiesBelowTwentyBp) {
    for (int i = 6; i < 10; ++i)
        EXPECT_LT(std::abs(bp(kRef[i], zcb_price_fd(numE(), kT[i]).result.price)), 20.0) << "T=" << kT[i];
}

TEST(FdMbk, GridRefinement) {
    GridSpec fine;
    fine.n_space = 200;
    fine.n_time = 400;
    for (int i = 0; i < 6; ++i)
        EXPECT_LT(std::abs(bp(zcb_price_fd(numE(), kT[i]).result.price, zcb_price_fd(numE(), kT[i], fine).result.price)),
                  1.0);
}

TEST(FdMbk, SpotNodeAndMonotoneCurve) {
    const auto s = zcb_price_fd(numE(), 1.0);
    EXPECT_NEAR(s.nodes[s.spot_index], 1.0, 1e-14);
    EXPECT_EQ(s.nodes.front(), 0.0);
    for (std::size_t i = 1; i < s.values.size(); ++i) EXPECT_LE(s.values[i], s.values[i - 1] + 1e-12);
}

TEST(FdForward, AgreesWithBackward) {
    for (double T : {0.5, 1.0, 5.0}) {
        const auto f = density_forward(numE(), T);
        EXPECT_LT(std::abs(bp(f.result.price, zcb_price_fd(numE(), T).result.price)), 0.01) << "T=" << T;
        for (double v : f.mass) EXPECT_GE(v, -1e-10);
    }
}

TEST(FdForward, UndiscountedMassIsOne) {
    const auto f = density_forward(numE(), 2.0, {}, false);
    EXPECT_NEAR(f.total_mass, 1.0, 1e-10);
}

TEST(FdForward, NegativeDensityIsReported) {
    GridSpec g;
    g.rannacher_steps = 0;
    g.n_time = 20;
    EXPECT_THROW(density_forward(numE(), 50.0, g), NotConverged);
}

TEST(FdBk, AppCVarianceReading) {
    // published FD row; reproduced by the sigma^2(t) = 0.5 e^{-0.2 t} reading
    const double T[] = {1.0 / 12, 0.3, 0.5, 1.0, 5.0};
    const double want[] = {0.9990, 0.9938, 0.9839, 0.9216, 0.0444};
    GridSpec g;
    g.n_space = 300;
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(zcb_price_fd(appC(true), T[i], g).result.price, want[i], 1e-3) << T[i];
}

TEST(FdBk, AppCSigmaReadingConverged) {
    // independent exact-OU Monte Carlo: 0.98433, 0.92480 +- 3e-5
    GridSpec g;
    g.n_space = 400;
    g.n_time = 400;
    EXPECT_NEAR(zcb_price_fd(appC(), 0.5, g).result.price, 0.98433, 1e-4);
    EXPECT_NEAR(zcb_price_fd(appC(), 1.0, g).result.price, 0.92480, 1e-4);
}

TEST(FdBk, ForwardMatchesBackward) {
    const auto f = density_forward(appC(), 1.0);
    EXPECT_NEAR(f.result.price, zcb_price_fd(appC(), 1.0).result.price, 1e-6);
    for (double v : f.mass) EXPECT_GE(v, -1e-10);
}

TEST(FdBk, DriftDominatedCellsConvergeWithRefinement) {
    // artificial diffusion only where the cell Peclet number exceeds one
    GridSpec g;
    g.n_space = 300;
    const double p300 = zcb_price_fd(appC(), 1.0, g).result.price;
    g.n_space = 800;
    EXPECT_NEAR(p300, zcb_price_fd(appC(), 1.0, g).result.price, 2e-5);
}

TEST(Fd, RejectsBadGrid) {
    GridSpec g;
    g.n_space = 2;
    EXPECT_THROW(zcb_price_fd(numE(), 1.0, g), InputError);
    EXPECT_THROW(zcb_price_fd(numE(), 0.0), InputError);
}
