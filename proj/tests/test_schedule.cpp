#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace dpl;

TEST(CosineSchedule, MatchesDirectFormula)
{
    for (int T : {1, 5, 10, 20, 50, 200})
    {
        const auto s = build_cosine_schedule(T);
        const auto o = oracle::cosine_schedule(T);
        ASSERT_EQ(s.steps(), T);
        for (int t = 1; t <= T; ++t)
        {
            EXPECT_NEAR(s.beta(t), static_cast<double>(o.beta[t]), 1e-14) << "T=" << T << " t=" << t;
            EXPECT_NEAR(s.alpha_bar(t), static_cast<double>(o.alpha_bar[t]), 1e-13) << "T=" << T << " t=" << t;
        }
    }
}

TEST(CosineSchedule, FrozenReferenceValues)
{
    const auto s = build_cosine_schedule(20);
    EXPECT_NEAR(s.beta(1), 0.0079927213157811923566, 1e-15);
    EXPECT_NEAR(s.alpha_bar(10), 0.52477613371274305842, 1e-14);
    EXPECT_NEAR(s.alpha_bar(20), 0.1829781237046682711, 1e-14);
}

TEST(CosineSchedule, ClippingAndMonotonicity)
{
    for (int T : {2, 10, 20, 50, 1000})
    {
        const auto s = build_cosine_schedule(T);
        ASSERT_EQ(s.alpha_bar(0), 1.0);
        double prod = 1.0;
        for (int t = 1; t <= T; ++t)
        {
            ASSERT_GE(s.beta(t), 0.001);
            ASSERT_LE(s.beta(t), 0.1);
            ASSERT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
            ASSERT_GT(s.alpha_bar(t), 0.0);
            prod *= 1.0 - s.beta(t);
            ASSERT_NEAR(s.alpha_bar(t), prod, 1e-15);
            ASSERT_DOUBLE_EQ(s.alpha(t), 1.0 - s.beta(t));
            if (t > 1)
            {
                ASSERT_GE(s.beta(t), s.beta(t - 1));
            }
        }
    }
    // The upper clip is active at the end of short schedules.
    EXPECT_DOUBLE_EQ(build_cosine_schedule(20).beta(20), 0.1);
}

TEST(CosineSchedule, RejectsBadArguments)
{
    EXPECT_THROW(build_cosine_schedule(0), std::invalid_argument);
    EXPECT_THROW(build_cosine_schedule(10, 0.008, 0.2, 0.1), std::invalid_argument);
    const auto s = build_cosine_schedule(20);
    EXPECT_THROW(s.beta(0), std::invalid_argument);
    EXPECT_THROW(s.beta(21), std::invalid_argument);
    EXPECT_THROW(s.alpha_bar(-1), std::invalid_argument);
}

TEST(PosteriorCoefficients, MatchGaussianProductOracle)
{
    const auto s = build_cosine_schedule(20);
    RngStream r(4, 4);
    for (int t = 1; t <= 20; ++t)
    {
        const auto c = posterior_coefficients(s, t);
        for (int k = 0; k < 20; ++k)
        {
            const double x0 = r.uniform(-3, 3), xt = r.uniform(-3, 3);
            const auto o = oracle::gaussian_product_posterior(x0, xt, s.beta(t), s.alpha_bar(t - 1));
            ASSERT_NEAR(c.coef_p0 * x0 + c.coef_pt * xt, static_cast<double>(o.mean), 1e-12) << "t=" << t;
            ASSERT_NEAR(c.sigma, static_cast<double>(o.stddev), 1e-12) << "t=" << t;
        }
    }
}

TEST(PosteriorCoefficients, BoundaryAndFrozenValues)
{
    const auto s = build_cosine_schedule(20);
    const auto c1 = posterior_coefficients(s, 1);
    EXPECT_EQ(c1.coef_p0, 1.0);
    EXPECT_EQ(c1.coef_pt, 0.0);
    EXPECT_EQ(c1.sigma, 0.0);
    const auto c20 = posterior_coefficients(s, 20);
    EXPECT_NEAR(c20.coef_p0, 0.055187998655542281449, 1e-14);
    EXPECT_NEAR(c20.coef_pt, 0.92507611160590669053, 1e-14);
    EXPECT_NEAR(c20.sigma, 0.31226844870435806643, 1e-14);
    EXPECT_THROW(posterior_coefficients(s, 0), std::invalid_argument);
    EXPECT_THROW(posterior_coefficients(s, 21), std::invalid_argument);
}

TEST(PosteriorCoefficients, SigmaBelowBeta)
{
    const auto s = build_cosine_schedule(50);
    for (int t = 1; t <= 50; ++t)
    {
        const auto c = posterior_coefficients(s, t);
        EXPECT_LE(c.sigma * c.sigma, s.beta(t) + 1e-15);
        EXPECT_GE(c.coef_p0, 0.0);
        EXPECT_GE(c.coef_pt, 0.0);
    }
}
