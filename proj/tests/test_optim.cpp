#include <gtest/gtest.h>

#include "dpl/dpl.hpp"

using namespace dpl;

TEST(Sgd, TwoParameterTrajectory)
{
    Vector theta{1.0, -2.0}, v{0.0, 0.0};
    const SgdConfig cfg{0.9, 1e-4};
    const double lr = 0.1;
    // Gradient of f = 0.5 * (3 x^2 + y^2), stepped by hand in parallel.
    long double x = 1.0L, y = -2.0L, vx = 0.0L, vy = 0.0L;
    for (int k = 0; k < 25; ++k)
    {
        const Vector g{3.0 * theta[0], theta[1]};
        sgd_momentum_step(theta, g, v, lr, cfg);
        const long double dx = 3.0L * x + 1e-4L * x, dy = y + 1e-4L * y;
        vx = 0.9L * vx + dx;
        vy = 0.9L * vy + dy;
        x -= 0.1L * vx;
        y -= 0.1L * vy;
        ASSERT_NEAR(theta[0], static_cast<double>(x), 1e-12);
        ASSERT_NEAR(theta[1], static_cast<double>(y), 1e-12);
    }
}

TEST(Sgd, FirstStepValues)
{
    Vector theta{2.0}, v{0.0};
    sgd_momentum_step(theta, Vector{0.5}, v, 0.01, {0.9, 0.1});
    EXPECT_DOUBLE_EQ(v[0], 0.7);
    EXPECT_DOUBLE_EQ(theta[0], 2.0 - 0.007);
    sgd_momentum_step(theta, Vector{0.5}, v, 0.01, {0.9, 0.0});
    EXPECT_DOUBLE_EQ(v[0], 0.9 * 0.7 + 0.5);
}

TEST(Sgd, ZeroGradientDecaysTowardZero)
{
    Vector theta{5.0}, v{0.0};
    for (int k = 0; k < 2000; ++k)
        sgd_momentum_step(theta, Vector{0.0}, v, 0.5, {0.9, 0.01});
    EXPECT_LT(std::fabs(theta[0]), 5.0 * 0.5);
    EXPECT_GT(theta[0], -5.0);
}

TEST(Decay, MilestoneFactor)
{
    const MultiStepDecay d;
    EXPECT_EQ(d.factor(0), 1.0);
    EXPECT_EQ(d.factor(999), 1.0);
    EXPECT_DOUBLE_EQ(d.factor(1000), 0.95);
    EXPECT_DOUBLE_EQ(d.factor(2999), 0.95 * 0.95);
    EXPECT_DOUBLE_EQ(d.factor(3000), std::pow(0.95, 3));
    EXPECT_EQ((MultiStepDecay{0.5, 0}.factor(5000)), 1.0);
}

TEST(SgdMomentum, BuffersPerTensorAndLearningRates)
{
    double a = 1.0, ga = 1.0, b = 1.0, gb = 1.0;
    std::vector<TensorRef> ts{{"a", {&a, 1}, {&ga, 1}, {1}}, {"b", {&b, 1}, {&gb, 1}, {1}}};
    SgdMomentum opt({0.0, 0.0});
    opt.step(ts, [](std::size_t i) { return i == 0 ? 0.1 : 0.001; });
    EXPECT_DOUBLE_EQ(a, 0.9);
    EXPECT_DOUBLE_EQ(b, 0.999);
    ASSERT_EQ(opt.buffers().size(), 2u);
    EXPECT_EQ(opt.buffers()[0][0], 1.0);
}
