#pragma once

#include <cmath>
#include <vector>

#include "dpl/prototype.hpp"

namespace dpl
{

struct LossBreakdown
{
    double seg = 0.0;
    double align = 0.0;
    double diffusion = 0.0;
    double total = 0.0;
    double beta = 0.0;
};

inline constexpr double log_clamp = 1e-12;

/// Pixel-averaged cross-entropy over {background, foreground}.
inline double segmentation_loss(const ProbMap& pred, const Mask& gt)
{
    require(pred.height == gt.height && pred.width == gt.width, "segmentation_loss: shape mismatch");
    double acc = 0.0;
    for (std::size_t pix = 0; pix < pred.pixels(); ++pix)
    {
        const double p = gt.values[pix] ? pred.foreground(pix) : pred.background(pix);
        acc -= std::log(std::clamp(p, log_clamp, 1.0));
    }
    return acc / static_cast<double>(pred.pixels());
}

struct SegmentationGradient
{
    double loss = 0.0;
    Vector grad_fg;
    Vector grad_bg;
};

/// Cross-entropy of the cosine-softmax head and its gradient w.r.t. both
/// prototypes. The loss value is identical to
/// segmentation_loss(predict_segmentation(...), gt).
inline SegmentationGradient segmentation_loss_gradient(const FeatureMap& features, const Prototype& fg,
                                                       const Prototype& bg, const Mask& gt,
                                                       double temperature = default_temperature)
{
    require(features.height == gt.height && features.width == gt.width, "segmentation_loss: shape mismatch");
    require(temperature > 0.0, "segmentation_loss: temperature must be positive");
    const std::size_t dim = features.channels;
    require(fg.vector.size() == dim && bg.vector.size() == dim, "segmentation_loss: prototype dimension mismatch");

    SegmentationGradient out;
    out.grad_fg.assign(dim, 0.0);
    out.grad_bg.assign(dim, 0.0);
    const double nf = norm(fg.vector);
    const double nb = norm(bg.vector);
    const std::size_t pixels = features.plane();
    const double inv_n = 1.0 / static_cast<double>(pixels);

    // d cos(x, p) / dp = x / (|x||p|) - cos * p / |p|^2
    auto accumulate = [&](Vector& g, const Vector& x, double nx, const Vector& p, double np, double cosv, double coef) {
        if (nx == 0.0 || np == 0.0 || coef == 0.0)
            return;
        const double a = coef / (nx * np);
        const double b = coef * cosv / (np * np);
        for (std::size_t i = 0; i < dim; ++i)
            g[i] += a * x[i] - b * p[i];
    };

    Vector x(dim);
    for (std::size_t pix = 0; pix < pixels; ++pix)
    {
        features.gather(pix, x);
        const double nx = norm(x);
        const double cf = (nx == 0.0 || nf == 0.0) ? 0.0 : dot(x, fg.vector) / (nx * nf);
        const double cb = (nx == 0.0 || nb == 0.0) ? 0.0 : dot(x, bg.vector) / (nx * nb);
        const double diff = temperature * (cf - cb);
        const double p_fg = sigmoid(diff);
        const double p_bg = sigmoid(-diff);
        const bool is_fg = gt.values[pix] != 0;
        const double p_true = is_fg ? p_fg : p_bg;
        out.loss -= std::log(std::clamp(p_true, log_clamp, 1.0)) * inv_n;
        if (p_true < log_clamp)
            continue; // clamped: locally constant
        // dL/ds_fg = p_fg - y_fg, dL/ds_bg = p_bg - y_bg
        const double ds_fg = (p_fg - (is_fg ? 1.0 : 0.0)) * inv_n * temperature;
        const double ds_bg = (p_bg - (is_fg ? 0.0 : 1.0)) * inv_n * temperature;
        accumulate(out.grad_fg, x, nx, fg.vector, nf, cf, ds_fg);
        accumulate(out.grad_bg, x, nx, bg.vector, nb, cb, ds_bg);
    }
    return out;
}

/// (1/K) sum_k |support_k - query_k|^2
inline double alignment_loss(const std::vector<Prototype>& support, const std::vector<Prototype>& query)
{
    require(!support.empty() && support.size() == query.size(), "alignment_loss: prototype lists differ in length");
    double acc = 0.0;
    for (std::size_t k = 0; k < support.size(); ++k)
    {
        require_same_size(support[k].vector, query[k].vector, "alignment_loss");
        acc += squared_distance(support[k].vector, query[k].vector);
    }
    return acc / static_cast<double>(support.size());
}

/// Gradient of alignment_loss w.r.t. support prototype k (the query gradient is its negation).
inline Vector alignment_gradient(const std::vector<Prototype>& support, const std::vector<Prototype>& query,
                                 std::size_t k)
{
    require(k < support.size() && support.size() == query.size(), "alignment_gradient: bad index");
    const double scale = 2.0 / static_cast<double>(support.size());
    Vector g(support[k].vector.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = scale * (support[k].vector[i] - query[k].vector[i]);
    return g;
}

/// |eps_true - eps_enhanced|^2
inline double diffusion_loss(std::span<const double> eps_true, std::span<const double> eps_enhanced)
{
    require_same_size(eps_true, eps_enhanced, "diffusion_loss");
    return squared_distance(eps_true, eps_enhanced);
}

/// d/d(eps_enhanced) of diffusion_loss.
inline Vector diffusion_loss_gradient(std::span<const double> eps_true, std::span<const double> eps_enhanced)
{
    require_same_size(eps_true, eps_enhanced, "diffusion_loss_gradient");
    Vector g(eps_true.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = 2.0 * (eps_enhanced[i] - eps_true[i]);
    return g;
}

inline constexpr double default_beta = 0.02;

inline LossBreakdown total_loss(double seg, double align, double diffusion, double beta = default_beta)
{
    return {seg, align, diffusion, seg + align + beta * diffusion, beta};
}

} // namespace dpl
