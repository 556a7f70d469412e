#pragma once

#include <cmath>
#include <utility>

#include "dpl/numerics.hpp"

namespace dpl
{

/// Learnable logits of the fidelity/diversity weights. Defaults start at
/// sigmoid weights (0.8, 0.2).
struct FusionParams
{
    double theta_fidelity = std::log(4.0);
    double theta_diversity = -std::log(4.0);
    double grad_fidelity = 0.0;
    double grad_diversity = 0.0;

    void zero_grad() { grad_fidelity = grad_diversity = 0.0; }
};

struct FusionWeights
{
    double fidelity;
    double diversity;
};

inline FusionWeights fusion_weights(const FusionParams& params)
{
    return {sigmoid(params.theta_fidelity), sigmoid(params.theta_diversity)};
}

/// (w_f p0 + w_d p_diff) / (w_f + w_d)
inline Vector fuse(std::span<const double> p0, std::span<const double> p_diff, const FusionParams& params)
{
    require_same_size(p0, p_diff, "fuse");
    const auto w = fusion_weights(params);
    const double s = w.fidelity + w.diversity;
    const double a = w.fidelity / s;
    const double b = w.diversity / s;
    Vector out(p0.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = a * p0[i] + b * p_diff[i];
    return out;
}

/// Given dL/dp_enhanced, accumulates dL/dtheta into params (p0 and p_diff held fixed).
inline void fuse_backward(std::span<const double> p0, std::span<const double> p_diff,
                          std::span<const double> grad_enhanced, FusionParams& params)
{
    require_same_size(p0, p_diff, "fuse_backward");
    require_same_size(p0, grad_enhanced, "fuse_backward");
    const auto w = fusion_weights(params);
    const double s = w.fidelity + w.diversity;
    // d p_enh / d w_f = w_d (p0 - p_diff) / s^2, d p_enh / d w_d = w_f (p_diff - p0) / s^2
    double g_diff = 0.0;
    for (std::size_t i = 0; i < p0.size(); ++i)
        g_diff += grad_enhanced[i] * (p0[i] - p_diff[i]);
    const double dwf = w.diversity * g_diff / (s * s);
    const double dwd = -w.fidelity * g_diff / (s * s);
    params.grad_fidelity += dwf * w.fidelity * (1.0 - w.fidelity);
    params.grad_diversity += dwd * w.diversity * (1.0 - w.diversity);
}

} // namespace dpl
