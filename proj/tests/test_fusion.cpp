#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace dpl;

TEST(FusionWeights, Examples)
{
    FusionParams p;
    p.theta_fidelity = p.theta_diversity = 0.0;
    const auto w0 = fusion_weights(p);
    EXPECT_EQ(w0.fidelity, 0.5);
    EXPECT_EQ(w0.diversity, 0.5);
    const auto w = fusion_weights(FusionParams{});
    EXPECT_NEAR(w.fidelity, 0.8, 1e-15);
    EXPECT_NEAR(w.diversity, 0.2, 1e-15);
}

TEST(FusionWeights, MonotoneTowardOne)
{
    FusionParams p;
    double prev = 0.0;
    for (double th = -10.0; th <= 40.0; th += 0.5)
    {
        p.theta_fidelity = th;
        const double w = fusion_weights(p).fidelity;
        EXPECT_GE(w, prev);
        EXPECT_LE(w, 1.0);
        prev = w;
    }
    EXPECT_EQ(prev, 1.0);
}

TEST(Fuse, Examples)
{
    const Vector out = fuse(Vector{1, 0}, Vector{0, 1}, FusionParams{});
    EXPECT_NEAR(out[0], 0.8, 1e-15);
    EXPECT_NEAR(out[1], 0.2, 1e-15);
    const Vector p{0.3, -2.0, 5.0};
    FusionParams q;
    q.theta_fidelity = 3.0;
    q.theta_diversity = -7.0;
    const Vector same = fuse(p, p, q);
    for (int i = 0; i < 3; ++i)
        EXPECT_NEAR(same[i], p[i], 4e-16 * std::fabs(p[i]));
    q.theta_diversity = 3.0;
    const Vector h = fuse(Vector{2, 4}, Vector{0, 0}, q);
    EXPECT_DOUBLE_EQ(h[0], 1.0);
    EXPECT_DOUBLE_EQ(h[1], 2.0);
    EXPECT_THROW(fuse(Vector{1}, Vector{1, 2}, q), std::invalid_argument);
}

TEST(Fuse, ConvexityAndNormalization)
{
    RngStream r(1, 1);
    for (int k = 0; k < 500; ++k)
    {
        FusionParams p;
        p.theta_fidelity = r.uniform(-6, 6);
        p.theta_diversity = r.uniform(-6, 6);
        const auto w = fusion_weights(p);
        const double s = w.fidelity + w.diversity;
        EXPECT_NEAR(w.fidelity / s + w.diversity / s, 1.0, 1e-15);
        const Vector a = sample_standard_normal(r, 10), b = sample_standard_normal(r, 10);
        const Vector f = fuse(a, b, p);
        for (std::size_t i = 0; i < 10; ++i)
        {
            EXPECT_GE(f[i], std::min(a[i], b[i]) - 1e-15);
            EXPECT_LE(f[i], std::max(a[i], b[i]) + 1e-15);
        }
    }
}

TEST(FuseBackward, MatchesFiniteDifferences)
{
    RngStream r(2, 2);
    for (int k = 0; k < 50; ++k)
    {
        FusionParams p;
        p.theta_fidelity = r.uniform(-3, 3);
        p.theta_diversity = r.uniform(-3, 3);
        const Vector a = sample_standard_normal(r, 12), b = sample_standard_normal(r, 12),
                     g = sample_standard_normal(r, 12);
        auto loss = [&] { return dot(fuse(a, b, p), g); };
        p.zero_grad();
        fuse_backward(a, b, g, p);
        const double fdf = oracle::central_difference(&p.theta_fidelity, 1e-5, loss);
        const double fdd = oracle::central_difference(&p.theta_diversity, 1e-5, loss);
        EXPECT_LT(oracle::relative_error(p.grad_fidelity, fdf), 1e-6);
        EXPECT_LT(oracle::relative_error(p.grad_diversity, fdd), 1e-6);
    }
}

TEST(FuseBackward, AccumulatesAndZeroes)
{
    FusionParams p;
    const Vector a{1, 0}, b{0, 1}, g{1, 1};
    fuse_backward(a, b, g, p);
    const double once = p.grad_fidelity;
    fuse_backward(a, b, g, p);
    EXPECT_DOUBLE_EQ(p.grad_fidelity, 2 * once);
    p.zero_grad();
    EXPECT_EQ(p.grad_fidelity, 0.0);
    EXPECT_EQ(p.grad_diversity, 0.0);
}
