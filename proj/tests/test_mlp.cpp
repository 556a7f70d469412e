#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace dpl;

namespace
{
Mlp random_mlp(const std::vector<std::size_t>& widths, std::uint64_t seed)
{
    Mlp m(widths);
    auto r = derive_stream(seed, StreamDomain::init, 1);
    m.initialize(r, false);
    for (auto& L : m.layers())
        r.fill_normal(L.bias, 0.3);
    return m;
}
} // namespace

TEST(Mlp, MatchesDenseOracle)
{
    const Mlp m = random_mlp({9, 12, 7, 5}, 1);
    RngStream r(1, 1);
    for (int k = 0; k < 20; ++k)
    {
        const Vector x = sample_standard_normal(r, 9);
        const Vector y = m.evaluate(x), want = oracle::dense_forward(m, x);
        for (std::size_t i = 0; i < y.size(); ++i)
            ASSERT_NEAR(y[i], want[i], 1e-12 * std::max(1.0, std::fabs(want[i])));
    }
}

TEST(Mlp, ForwardEqualsEvaluate)
{
    Mlp m = random_mlp({4, 6, 3}, 2);
    const Vector x{0.1, -0.2, 0.3, 0.5};
    EXPECT_EQ(m.forward(x), m.evaluate(x));
}

TEST(Mlp, ZeroOutputInitialization)
{
    Mlp m({6, 8, 4});
    auto r = derive_stream(3, StreamDomain::init, 0);
    m.initialize(r, true);
    for (double v : m.evaluate(Vector(6, 1.7)))
        EXPECT_EQ(v, 0.0);
    double ss = 0.0;
    for (double w : m.layers()[0].weight.data)
        ss += w * w;
    EXPECT_GT(ss, 0.0);
}

TEST(Mlp, InitializationVarianceIsInverseFanIn)
{
    Mlp m({400, 300, 2});
    auto r = derive_stream(4, StreamDomain::init, 0);
    m.initialize(r, false);
    const auto s = vector_stats(m.layers()[0].weight.data);
    EXPECT_NEAR(s.stddev * s.stddev, 1.0 / 400.0, 0.05 / 400.0);
    EXPECT_NEAR(s.mean, 0.0, 1e-3);
}

TEST(Mlp, BackwardWithoutForwardIsContractViolation)
{
    Mlp m = random_mlp({3, 4, 2}, 5);
    EXPECT_THROW(m.backward(Vector{1, 1}), std::logic_error);
    m.forward(Vector{1, 2, 3});
    m.backward(Vector{1, 1});
    EXPECT_THROW(m.backward(Vector{1, 1}), std::logic_error);
}

TEST(Mlp, ZeroUpstreamGivesZeroGradients)
{
    Mlp m = random_mlp({5, 6, 3}, 6);
    m.forward(Vector(5, 0.4));
    const Vector gin = m.backward(Vector(3, 0.0));
    for (double g : gin)
        EXPECT_EQ(g, 0.0);
    std::vector<TensorRef> t;
    m.collect_tensors("m", t);
    for (const auto& ref : t)
        for (double g : ref.grads)
            EXPECT_EQ(g, 0.0);
}

TEST(Mlp, GradientsMatchFiniteDifferences)
{
    Mlp m = random_mlp({10, 14, 12, 6}, 7);
    RngStream r(7, 7);
    const Vector x = sample_standard_normal(r, 10);
    const Vector target = sample_standard_normal(r, 6);
    auto loss = [&] {
        const Vector y = m.evaluate(x);
        return squared_distance(y, target);
    };
    const Vector y = m.forward(x);
    Vector up(6);
    for (std::size_t i = 0; i < 6; ++i)
        up[i] = 2.0 * (y[i] - target[i]);
    const Vector gin = m.backward(up);

    std::vector<TensorRef> tensors;
    m.collect_tensors("m", tensors);
    int checked = 0;
    for (const auto& t : tensors)
        for (std::size_t i = 0; i < t.values.size(); i += 2)
        {
            const double fd = oracle::central_difference(&t.values[i], 1e-5, loss);
            ASSERT_LT(oracle::relative_error(t.grads[i], fd), 1e-4) << t.name << "[" << i << "]";
            ++checked;
        }
    EXPECT_GE(checked, 100);

    Vector xc = x;
    auto loss_x = [&] { return squared_distance(m.evaluate(xc), target); };
    for (std::size_t i = 0; i < xc.size(); ++i)
        EXPECT_LT(oracle::relative_error(gin[i], oracle::central_difference(&xc[i], 1e-5, loss_x)), 1e-4);
}

TEST(Mlp, CollectTensorsNamesAndShapes)
{
    Mlp m({3, 5, 2});
    std::vector<TensorRef> t;
    m.collect_tensors("net", t);
    ASSERT_EQ(t.size(), 4u);
    EXPECT_EQ(t[0].name, "net.layer0.weight");
    EXPECT_EQ(t[0].shape, (std::vector<std::size_t>{5, 3}));
    EXPECT_EQ(t[3].name, "net.layer1.bias");
    EXPECT_EQ(t[3].values.size(), 2u);
}
