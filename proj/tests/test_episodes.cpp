#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"

using namespace dpl;

namespace
{
GeneratorConfig small(double sep, double jitter, double pix, int dim)
{
    GeneratorConfig g;
    g.dim = dim;
    g.separation = sep;
    g.class_jitter = jitter;
    g.pixel_noise = pix;
    return g;
}
} // namespace

TEST(Generator, NoiselessForegroundIsClassMean)
{
    const auto cfg = small(3.0, 0.0, 0.0, 12);
    const auto bank = make_class_bank(cfg);
    RngStream r(1, 1);
    const Episode ep = generate_episode(r, cfg, bank);
    const double n = static_cast<double>(ep.support.mask.count());
    const auto p = extract_prototype(ep.support.features, ep.support.mask);
    for (int c = 0; c < 12; ++c)
        EXPECT_NEAR(p.vector[c], bank.foreground[ep.class_id][c] * n / (n + 1e-5), 1e-14);
    for (std::size_t pix = 0; pix < ep.query.features.plane(); ++pix)
    {
        if (!ep.query.mask.values[pix])
            continue;
        for (int c = 0; c < 12; ++c)
            ASSERT_EQ(ep.query.features.values[c * ep.query.features.plane() + pix], ep.foreground_mean[c]);
    }
}

TEST(Generator, ClassBankGeometry)
{
    const auto cfg = small(2.0, 1.0, 0.5, 64);
    const auto bank = make_class_bank(cfg);
    EXPECT_NEAR(norm(bank.background), cfg.background_norm, 1e-12);
    ASSERT_EQ(bank.foreground.size(), static_cast<std::size_t>(cfg.num_classes));
    for (const auto& fg : bank.foreground)
        EXPECT_NEAR(std::sqrt(squared_distance(fg, bank.background)), 2.0, 1e-12);
}

TEST(Generator, DeterministicPerStream)
{
    const auto cfg = small(2.0, 1.0, 0.5, 16);
    RngStream a(3, 3), b(3, 3), c(3, 4);
    const Episode x = generate_episode(a, cfg), y = generate_episode(b, cfg), z = generate_episode(c, cfg);
    EXPECT_EQ(x.support.features.values, y.support.features.values);
    EXPECT_EQ(x.query.mask.values, y.query.mask.values);
    EXPECT_NE(x.support.features.values, z.support.features.values);
}

TEST(Generator, MasksNonEmptyAndIndependent)
{
    const auto cfg = small(2.0, 1.0, 0.5, 8);
    const auto bank = make_class_bank(cfg);
    int differ = 0;
    for (std::uint64_t k = 0; k < 200; ++k)
    {
        RngStream r(4, k);
        const Episode ep = generate_episode(r, cfg, bank);
        ASSERT_GT(ep.query.mask.count(), 0u);
        ASSERT_GT(ep.support.mask.count(), 0u);
        ASSERT_LT(ep.query.mask.count(), ep.query.mask.values.size());
        differ += ep.query.mask.values != ep.support.mask.values;
        ASSERT_GE(ep.class_id, 0);
        ASSERT_LT(ep.class_id, cfg.num_classes);
    }
    EXPECT_GT(differ, 190);
}

TEST(Generator, SeparableEpisodesAreNearlyPerfect)
{
    const auto cfg = small(10.0, 0.0, 0.1, 16);
    const auto bank = make_class_bank(cfg);
    for (std::uint64_t k = 0; k < 20; ++k)
    {
        RngStream r(5, k);
        const Episode ep = generate_episode(r, cfg, bank);
        EXPECT_GT(oracle::nearest_centroid_dice(ep), 99.0);
        const auto fg = extract_prototype(ep.support.features, ep.support.mask);
        const auto bg = extract_prototype(ep.support.features, ep.support.mask.complement());
        EXPECT_GT(dice_score(threshold(predict_segmentation(ep.query.features, fg, bg)), ep.query.mask), 99.0);
    }
}

TEST(Generator, BackgroundPixelNoiseStd)
{
    const auto cfg = small(2.0, 1.0, 0.7, 16);
    RngStream r(6, 6);
    const Episode ep = generate_episode(r, cfg);
    std::vector<double> dev;
    const auto& f = ep.support.features;
    for (std::size_t pix = 0; pix < f.plane(); ++pix)
        if (!ep.support.mask.values[pix])
            for (int c = 0; c < f.channels; ++c)
                dev.push_back(f.values[c * f.plane() + pix] - ep.background_mean[c]);
    ASSERT_GE(dev.size(), 10000u);
    const auto s = vector_stats(dev);
    EXPECT_LT(std::fabs(s.stddev / 0.7 - 1.0), 0.05);
}

TEST(Generator, ForegroundJitterScale)
{
    // Per-image jitter has norm about class_jitter * separation.
    const auto cfg = small(2.0, 1.0, 0.0, 64);
    const auto bank = make_class_bank(cfg);
    double acc = 0.0;
    const int n = 400;
    for (int k = 0; k < n; ++k)
    {
        RngStream r(7, static_cast<std::uint64_t>(k));
        const Episode ep = generate_episode(r, cfg, bank);
        const auto p = extract_prototype(ep.support.features, ep.support.mask, 1e-12);
        acc += squared_distance(p.vector, ep.foreground_mean);
    }
    EXPECT_NEAR(std::sqrt(acc / n), 2.0, 0.1);
}

TEST(Generator, RejectsDegenerateConfig)
{
    GeneratorConfig g;
    g.height = 7;
    EXPECT_THROW(g.validate(), std::invalid_argument);
    g = {};
    g.separation = 0.0;
    EXPECT_THROW(g.validate(), std::invalid_argument);
    g = {};
    g.pixel_noise = -1.0;
    EXPECT_THROW(g.validate(), std::invalid_argument);
    g = {};
    RngStream r(1, 1);
    GeneratorConfig other = g;
    other.dim = 8;
    EXPECT_THROW(generate_episode(r, other, make_class_bank(g)), std::invalid_argument);
}

TEST(Dice, Examples)
{
    Mask a(2, 3), b(2, 3);
    EXPECT_EQ(dice_score(a, b), 100.0);
    a.at(0, 0) = 1;
    b.at(1, 1) = 1;
    EXPECT_EQ(dice_score(a, b), 0.0);
    Mask p(2, 3), g(2, 3);
    p.values = {1, 1, 1, 0, 0, 0};
    g.values = {0, 1, 1, 1, 0, 0};
    EXPECT_NEAR(dice_score(p, g), 66.666666666666667, 1e-12);
    EXPECT_EQ(dice_score(g, g), 100.0);
    EXPECT_THROW(dice_score(Mask(2, 2), Mask(2, 3)), std::invalid_argument);
}

TEST(Dice, SymmetryBoundsAndIdentity)
{
    RngStream r(8, 8);
    for (int k = 0; k < 500; ++k)
    {
        Mask a(4, 4), b(4, 4);
        const double pa = r.uniform(0, 1), pb = r.uniform(0, 1);
        for (std::size_t i = 0; i < 16; ++i)
        {
            a.values[i] = r.uniform(0, 1) < pa;
            b.values[i] = r.uniform(0, 1) < pb;
        }
        const double d = dice_score(a, b);
        EXPECT_EQ(d, dice_score(b, a));
        EXPECT_GE(d, 0.0);
        EXPECT_LE(d, 100.0);
        EXPECT_EQ(d == 100.0, a.values == b.values);
    }
}

TEST(EpisodeIo, RoundTripAndLayout)
{
    const auto cfg = small(2.0, 1.0, 0.5, 3);
    GeneratorConfig c = cfg;
    c.height = 8;
    c.width = 9;
    c.blob_radius_min = 2;
    c.blob_radius_max = 3;
    RngStream r(9, 9);
    const Episode ep = generate_episode(r, c);
    std::stringstream ss;
    write_episode(ss, ep);
    const std::string bytes = ss.str();
    ASSERT_EQ(bytes.size(), 12u + 2 * 3 * 8 * 9 * 8 + 2 * 8 * 9);
    EXPECT_EQ(static_cast<unsigned char>(bytes[0]), 3);
    EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 8);
    EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 9);
    double first;
    std::memcpy(&first, bytes.data() + 12, 8);
    EXPECT_EQ(first, ep.support.features.at(0, 0, 0));
    const Episode back = read_episode(ss);
    EXPECT_EQ(back.support.features.values, ep.support.features.values);
    EXPECT_EQ(back.query.features.values, ep.query.features.values);
    EXPECT_EQ(back.support.mask.values, ep.support.mask.values);
    EXPECT_EQ(back.query.mask.values, ep.query.mask.values);

    std::stringstream cut(bytes.substr(0, bytes.size() - 5));
    EXPECT_THROW(read_episode(cut), std::runtime_error);
}
