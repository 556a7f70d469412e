#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "dpl/numerics.hpp"
#include "dpl/prototype.hpp"

namespace dpl
{

/// Synthetic one-shot benchmark parameters.
///
/// Each generator seed fixes a bank of `num_classes` class means shared by
/// all episodes (the recurring "organs"), plus a common background mean:
///   mu_bg      = background anchor, |mu_bg| = background_norm
///   mu_fg(c)   = mu_bg + separation * u_c,  |u_c| = 1
/// Every image adds its own class jitter to foreground pixels with
/// per-component std class_jitter * separation / sqrt(D), so the jitter norm
/// is about class_jitter times the class separation.
struct GeneratorConfig
{
    int dim = 64;
    int height = 32;
    int width = 32;
    double separation = 2.0;   // |mu_fg - mu_bg|
    double class_jitter = 1.0;
    double pixel_noise = 0.5;
    double background_norm = 4.0;
    int num_classes = 4;
    int blob_count_min = 1;
    int blob_count_max = 2;
    double blob_radius_min = 4.0;
    double blob_radius_max = 9.0;
    std::uint64_t seed = 2024;

    void validate() const
    {
        require(dim >= 1, "GeneratorConfig: dim must be >= 1");
        require(height >= 8 && width >= 8, "GeneratorConfig: height and width must be >= 8");
        require(separation > 0.0, "GeneratorConfig: separation must be positive");
        require(class_jitter >= 0.0 && pixel_noise >= 0.0, "GeneratorConfig: noise levels must be non-negative");
        require(background_norm >= 0.0, "GeneratorConfig: background_norm must be non-negative");
        require(num_classes >= 1, "GeneratorConfig: num_classes must be >= 1");
        require(blob_count_min >= 1 && blob_count_min <= blob_count_max, "GeneratorConfig: invalid blob count range");
        require(blob_radius_min >= 1.0 && blob_radius_min <= blob_radius_max,
                "GeneratorConfig: invalid blob radius range (min must be >= 1)");
    }
};

struct LabeledImage
{
    FeatureMap features;
    Mask mask;
};

struct Episode
{
    LabeledImage support;
    LabeledImage query;
    int class_id = 0;
    Vector foreground_mean;
    Vector background_mean;
};

struct ClassBank
{
    Vector background;
    std::vector<Vector> foreground;
};

inline ClassBank make_class_bank(const GeneratorConfig& cfg)
{
    cfg.validate();
    auto rng = derive_stream(cfg.seed, StreamDomain::class_bank, 0);
    const auto d = static_cast<std::size_t>(cfg.dim);
    auto unit = [&](Vector v) {
        const double n = norm(v);
        for (double& x : v)
            x /= n;
        return v;
    };
    ClassBank bank;
    bank.background = unit(sample_standard_normal(rng, d));
    for (double& x : bank.background)
        x *= cfg.background_norm;
    for (int c = 0; c < cfg.num_classes; ++c)
    {
        Vector u = unit(sample_standard_normal(rng, d));
        for (std::size_t i = 0; i < d; ++i)
            u[i] = bank.background[i] + cfg.separation * u[i];
        bank.foreground.push_back(std::move(u));
    }
    return bank;
}

/// Union of random rotated ellipses; the first blob always covers the pixel
/// nearest its center, so the mask is never empty.
inline Mask sample_blob_mask(RngStream& rng, const GeneratorConfig& cfg)
{
    Mask m(cfg.height, cfg.width);
    const auto blobs = rng.uniform_int(cfg.blob_count_min, cfg.blob_count_max);
    for (std::int64_t b = 0; b < blobs; ++b)
    {
        const double cy = rng.uniform(0.25 * cfg.height, 0.75 * cfg.height);
        const double cx = rng.uniform(0.25 * cfg.width, 0.75 * cfg.width);
        const double ry = rng.uniform(cfg.blob_radius_min, cfg.blob_radius_max);
        const double rx = rng.uniform(cfg.blob_radius_min, cfg.blob_radius_max);
        const double angle = rng.uniform(0.0, std::numbers::pi);
        const double ca = std::cos(angle), sa = std::sin(angle);
        for (int h = 0; h < cfg.height; ++h)
            for (int w = 0; w < cfg.width; ++w)
            {
                const double dy = h - cy, dx = w - cx;
                const double u = (dx * ca + dy * sa) / rx;
                const double v = (-dx * sa + dy * ca) / ry;
                if (u * u + v * v <= 1.0)
                    m.at(h, w) = 1;
            }
    }
    return m;
}

namespace detail
{
inline FeatureMap render_image(RngStream& rng, const GeneratorConfig& cfg, const Mask& mask, const Vector& mu_fg,
                               const Vector& mu_bg)
{
    const auto d = static_cast<std::size_t>(cfg.dim);
    Vector fg = mu_fg;
    const double jitter = cfg.class_jitter * cfg.separation / std::sqrt(static_cast<double>(cfg.dim));
    if (jitter > 0.0)
    {
        Vector j(d);
        rng.fill_normal(j, jitter);
        for (std::size_t i = 0; i < d; ++i)
            fg[i] += j[i];
    }
    FeatureMap x(cfg.dim, cfg.height, cfg.width);
    const std::size_t plane = x.plane();
    for (std::size_t c = 0; c < d; ++c)
    {
        std::span<double> row(x.values.data() + c * plane, plane);
        if (cfg.pixel_noise > 0.0)
            rng.fill_normal(row, cfg.pixel_noise);
        for (std::size_t pix = 0; pix < plane; ++pix)
            row[pix] += mask.values[pix] ? fg[c] : mu_bg[c];
    }
    return x;
}
} // namespace detail

inline Episode generate_episode(RngStream& rng, const GeneratorConfig& cfg, const ClassBank& bank)
{
    cfg.validate();
    require(bank.foreground.size() == static_cast<std::size_t>(cfg.num_classes) &&
                bank.background.size() == static_cast<std::size_t>(cfg.dim),
            "generate_episode: class bank does not match config");
    Episode ep;
    ep.class_id = static_cast<int>(rng.uniform_int(0, cfg.num_classes - 1));
    ep.foreground_mean = bank.foreground[ep.class_id];
    ep.background_mean = bank.background;
    ep.support.mask = sample_blob_mask(rng, cfg);
    ep.query.mask = sample_blob_mask(rng, cfg);
    ep.support.features = detail::render_image(rng, cfg, ep.support.mask, ep.foreground_mean, ep.background_mean);
    ep.query.features = detail::render_image(rng, cfg, ep.query.mask, ep.foreground_mean, ep.background_mean);
    return ep;
}

inline Episode generate_episode(RngStream& rng, const GeneratorConfig& cfg)
{
    return generate_episode(rng, cfg, make_class_bank(cfg));
}

/// 2|P & G| / (|P| + |G|) * 100; both empty scores 100.
inline double dice_score(const Mask& pred, const Mask& gt)
{
    require(pred.height == gt.height && pred.width == gt.width && pred.values.size() == gt.values.size(),
            "dice_score: shape mismatch");
    std::size_t inter = 0, sp = 0, sg = 0;
    for (std::size_t i = 0; i < pred.values.size(); ++i)
    {
        const bool p = pred.values[i] != 0, g = gt.values[i] != 0;
        inter += p && g;
        sp += p;
        sg += g;
    }
    if (sp + sg == 0)
        return 100.0;
    return 200.0 * static_cast<double>(inter) / static_cast<double>(sp + sg);
}

// ---------------------------------------------------------------------------
// Flat binary layout (little-endian):
//   u32 D, u32 H, u32 W
//   f64 support features [D][H][W], f64 query features [D][H][W]
//   u8  support mask [H][W], u8 query mask [H][W]
// ---------------------------------------------------------------------------

namespace detail
{
inline void put_u32(std::ostream& os, std::uint32_t v)
{
    const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                       static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
    os.write(b, 4);
}

inline void put_f64(std::ostream& os, double d)
{
    const auto v = std::bit_cast<std::uint64_t>(d);
    char b[8];
    for (int i = 0; i < 8; ++i)
        b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os.write(b, 8);
}

inline void read_exact(std::istream& is, char* dst, std::size_t n)
{
    is.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n)
        throw std::runtime_error("episode file truncated");
}

inline std::uint32_t get_u32(std::istream& is)
{
    unsigned char b[4];
    read_exact(is, reinterpret_cast<char*>(b), 4);
    return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline double get_f64(std::istream& is)
{
    unsigned char b[8];
    read_exact(is, reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(v);
}
} // namespace detail

inline void write_episode(std::ostream& os, const Episode& ep)
{
    const auto& f = ep.support.features;
    require(ep.query.features.channels == f.channels && ep.query.features.height == f.height &&
                ep.query.features.width == f.width,
            "write_episode: support and query shapes differ");
    detail::put_u32(os, static_cast<std::uint32_t>(f.channels));
    detail::put_u32(os, static_cast<std::uint32_t>(f.height));
    detail::put_u32(os, static_cast<std::uint32_t>(f.width));
    for (double v : ep.support.features.values)
        detail::put_f64(os, v);
    for (double v : ep.query.features.values)
        detail::put_f64(os, v);
    os.write(reinterpret_cast<const char*>(ep.support.mask.values.data()),
             static_cast<std::streamsize>(ep.support.mask.values.size()));
    os.write(reinterpret_cast<const char*>(ep.query.mask.values.data()),
             static_cast<std::streamsize>(ep.query.mask.values.size()));
}

/// Reads the layout written by write_episode. class_id and the generating
/// means are not part of the layout and come back zero/empty.
inline Episode read_episode(std::istream& is)
{
    const auto d = static_cast<int>(detail::get_u32(is));
    const auto h = static_cast<int>(detail::get_u32(is));
    const auto w = static_cast<int>(detail::get_u32(is));
    if (d < 1 || h < 1 || w < 1 || static_cast<std::uint64_t>(d) * h * w > (1ULL << 28))
        throw std::runtime_error("episode file has an implausible header");
    Episode ep;
    for (LabeledImage* img : {&ep.support, &ep.query})
    {
        img->features = FeatureMap(d, h, w);
        for (double& v : img->features.values)
            v = detail::get_f64(is);
    }
    for (LabeledImage* img : {&ep.support, &ep.query})
    {
        img->mask = Mask(h, w);
        detail::read_exact(is, reinterpret_cast<char*>(img->mask.values.data()), img->mask.values.size());
        for (auto v : img->mask.values)
            if (v > 1)
                throw std::runtime_error("episode file mask is not binary");
    }
    return ep;
}

} // namespace dpl
