#pragma once

#include <cstdint>
#include <vector>

#include "dpl/numerics.hpp"

namespace dpl
{

/// C x H x W feature map stored channel-major: index (c, h, w) = (c*H + h)*W + w.
struct FeatureMap
{
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> values;

    FeatureMap() = default;
    FeatureMap(int c, int h, int w) : channels(c), height(h), width(w), values(static_cast<std::size_t>(c) * h * w) {}

    std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
    double& at(int c, int h, int w) { return values[c * plane() + static_cast<std::size_t>(h) * width + w]; }
    double at(int c, int h, int w) const { return values[c * plane() + static_cast<std::size_t>(h) * width + w]; }

    /// Copies the feature vector of pixel index `pix` (= h*W + w) into out.
    void gather(std::size_t pix, std::span<double> out) const
    {
        const std::size_t stride = plane();
        for (int c = 0; c < channels; ++c)
            out[c] = values[c * stride + pix];
    }
};

struct Mask
{
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> values;

    Mask() = default;
    Mask(int h, int w, std::uint8_t fill = 0) : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}

    std::uint8_t& at(int h, int w) { return values[static_cast<std::size_t>(h) * width + w]; }
    std::uint8_t at(int h, int w) const { return values[static_cast<std::size_t>(h) * width + w]; }

    std::size_t count() const
    {
        std::size_t n = 0;
        for (auto v : values)
            n += v;
        return n;
    }

    Mask complement() const
    {
        Mask m(height, width);
        for (std::size_t i = 0; i < values.size(); ++i)
            m.values[i] = values[i] ? 0 : 1;
        return m;
    }
};

struct Prototype
{
    Vector vector;
    int class_id = 0;
};

/// Per-pixel {background, foreground} probabilities, pixel-major.
struct ProbMap
{
    int height = 0;
    int width = 0;
    std::vector<double> values; // [pix*2 + 0] = background, [pix*2 + 1] = foreground

    ProbMap() = default;
    ProbMap(int h, int w) : height(h), width(w), values(static_cast<std::size_t>(h) * w * 2) {}

    std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
    double background(std::size_t pix) const { return values[2 * pix]; }
    double foreground(std::size_t pix) const { return values[2 * pix + 1]; }
};

inline constexpr double default_prototype_eps = 1e-5;
inline constexpr double default_temperature = 20.0;

/// Masked average pooling: sum_hw X(:,h,w) Y(h,w) / (sum_hw Y(h,w) + eps).
inline Prototype extract_prototype(const FeatureMap& features, const Mask& mask, double eps = default_prototype_eps,
                                   int class_id = 0)
{
    require(features.height == mask.height && features.width == mask.width,
            "extract_prototype: feature map and mask shapes differ");
    require(mask.values.size() == features.plane(), "extract_prototype: mask storage size mismatch");
    require(eps > 0.0, "extract_prototype: eps must be positive");

    Prototype p;
    p.class_id = class_id;
    p.vector.assign(features.channels, 0.0);
    const std::size_t plane = features.plane();
    double weight = 0.0;
    for (std::size_t i = 0; i < plane; ++i)
        weight += mask.values[i];
    for (int c = 0; c < features.channels; ++c)
    {
        const double* row = features.values.data() + c * plane;
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i)
            if (mask.values[i])
                acc += row[i];
        p.vector[c] = acc / (weight + eps);
    }
    return p;
}

inline double cosine_similarity(std::span<const double> a, std::span<const double> b)
{
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0)
        return 0.0;
    return dot(a, b) / (na * nb);
}

/// Two-way cosine-softmax head: s_c = temperature * cos(x_hw, prototype_c).
inline ProbMap predict_segmentation(const FeatureMap& features, const Prototype& fg, const Prototype& bg,
                                    double temperature = default_temperature)
{
    require(temperature > 0.0, "predict_segmentation: temperature must be positive");
    require(fg.vector.size() == static_cast<std::size_t>(features.channels) && bg.vector.size() == fg.vector.size(),
            "predict_segmentation: prototype dimension does not match feature channels");

    ProbMap out(features.height, features.width);
    Vector x(features.channels);
    const double nf = norm(fg.vector);
    const double nb = norm(bg.vector);
    for (std::size_t pix = 0; pix < out.pixels(); ++pix)
    {
        features.gather(pix, x);
        const double nx = norm(x);
        const double cf = (nx == 0.0 || nf == 0.0) ? 0.0 : dot(x, fg.vector) / (nx * nf);
        const double cb = (nx == 0.0 || nb == 0.0) ? 0.0 : dot(x, bg.vector) / (nx * nb);
        const double diff = temperature * (cf - cb);
        out.values[2 * pix + 1] = sigmoid(diff);
        out.values[2 * pix] = sigmoid(-diff);
    }
    return out;
}

/// Hard mask from the head: foreground where it is strictly more probable.
inline Mask threshold(const ProbMap& probs)
{
    Mask m(probs.height, probs.width);
    for (std::size_t pix = 0; pix < probs.pixels(); ++pix)
        m.values[pix] = probs.foreground(pix) > probs.background(pix) ? 1 : 0;
    return m;
}

} // namespace dpl
