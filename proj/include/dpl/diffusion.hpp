#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "dpl/denoiser.hpp"
#include "dpl/geometry.hpp"
#include "dpl/schedule.hpp"

namespace dpl
{

/// p_t = sqrt(alpha_bar_t) p0 + sqrt(1 - alpha_bar_t) eps
inline Vector forward_diffuse(std::span<const double> p0, int t, std::span<const double> eps,
                              const NoiseSchedule& sched)
{
    require(t >= 1 && t <= sched.steps(), "forward_diffuse: timestep out of range");
    require_same_size(p0, eps, "forward_diffuse");
    const double a = std::sqrt(sched.alpha_bar(t));
    const double b = std::sqrt(1.0 - sched.alpha_bar(t));
    Vector out(p0.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = a * p0[i] + b * eps[i];
    return out;
}

/// Inverts the forward process given a noise estimate.
inline Vector predict_p0(std::span<const double> p_t, int t, std::span<const double> eps_pred,
                         const NoiseSchedule& sched)
{
    require(t >= 1 && t <= sched.steps(), "predict_p0: timestep out of range");
    require_same_size(p_t, eps_pred, "predict_p0");
    const double a = std::sqrt(sched.alpha_bar(t));
    const double b = std::sqrt(1.0 - sched.alpha_bar(t));
    Vector out(p_t.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = (p_t[i] - b * eps_pred[i]) / a;
    return out;
}

/// One ancestral step p_t -> p_{t-1}. z is ignored at t = 1.
inline Vector reverse_step(std::span<const double> p_t, int t, std::span<const double> eps_enhanced,
                           std::span<const double> z, const NoiseSchedule& sched)
{
    require(t >= 1 && t <= sched.steps(), "reverse_step: timestep out of range");
    const Vector p0_hat = predict_p0(p_t, t, eps_enhanced, sched);
    const PosteriorCoefficients c = posterior_coefficients(sched, t);
    Vector out(p_t.size());
    const bool use_z = t > 1 && !z.empty() && c.sigma != 0.0;
    if (use_z)
        require_same_size(p_t, z, "reverse_step");
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = c.coef_p0 * p0_hat[i] + c.coef_pt * p_t[i] + (use_z ? c.sigma * z[i] : 0.0);
    return out;
}

/// Which stages of the enhancement run. All off is the plain-prototype baseline.
struct PipelineToggles
{
    bool forward = true;
    bool reverse = true;
    bool spatial = true;
    bool fusion = true;

    bool any_enhancement() const { return forward || reverse; }
    bool operator==(const PipelineToggles&) const = default;
};

/// Start timestep: sampled uniformly from {1..T} unless fixed.
struct TimestepPolicy
{
    std::optional<int> fixed;

    int draw(RngStream& rng, int steps) const
    {
        if (fixed)
        {
            require(*fixed >= 1 && *fixed <= steps, "TimestepPolicy: fixed timestep out of range");
            return *fixed;
        }
        return static_cast<int>(rng.uniform_int(1, steps));
    }
};

struct EnhanceOptions
{
    PipelineToggles toggles;
    TimestepPolicy t_policy;
    bool deterministic = false; // suppress z draws
    double alpha_scale = default_alpha_scale;
};

/// Denoising-objective sample (t, eps, p_t) the trainer regresses eps_theta on.
struct DiffusionSample
{
    int t = 0;
    Vector eps;
    Vector p_t;
};

struct EnhancementTrace
{
    int t_start = 0;
    Vector noise;               // injected forward noise, or the pure-noise start without forward
    std::vector<Vector> states; // p_{t_start}, p_{t_start - 1}, ..., p_0
    Vector p_diff;
    Vector condition;           // c_spatial; empty when injection is off
    bool forward_applied = false;
    bool reverse_applied = false;
    bool spatial_applied = false;
    std::optional<DiffusionSample> training_sample;
};

struct Enhancement
{
    Vector p_diff;
    EnhancementTrace trace;
};

/// Runs t_start, ..., 1 of the reverse chain. `predictor(p_t, t)` returns the
/// (possibly conditioned) noise estimate. z is drawn from rng for t > 1 unless
/// deterministic. Returns states p_{t_start} .. p_0.
template <class Predictor>
std::vector<Vector> run_reverse_chain(Vector start, int t_start, const NoiseSchedule& sched, Predictor&& predictor,
                                      RngStream* rng, bool deterministic)
{
    std::vector<Vector> states;
    states.reserve(static_cast<std::size_t>(t_start) + 1);
    states.push_back(std::move(start));
    Vector z;
    for (int t = t_start; t >= 1; --t)
    {
        const Vector& cur = states.back();
        const Vector eps = predictor(std::span<const double>(cur), t);
        if (t > 1 && !deterministic && rng != nullptr)
        {
            z.assign(cur.size(), 0.0);
            rng->fill_normal(z);
        }
        else
            z.clear();
        states.push_back(reverse_step(cur, t, eps, z, sched));
    }
    return states;
}

/// Forward-noise p0 at a sampled timestep, then denoise back to t = 0 with
/// the conditioned denoiser. Disabled stages follow the toggles:
///   no forward  -> reverse chain starts from pure noise at t = T
///   no reverse  -> p_diff is the forward-noised p_t
///   neither     -> p_diff = p0, nothing is drawn
inline Enhancement enhance_prototype(std::span<const double> p0, const NoiseSchedule& sched, const DenoiserNet& net,
                                     const ConditionEncoder& enc, RngStream& rng, const EnhanceOptions& opt = {})
{
    require(net.dim() == p0.size(), "enhance_prototype: denoiser dimension mismatch");
    const int steps = sched.steps();
    Enhancement out;
    EnhancementTrace& tr = out.trace;

    const bool fwd = opt.toggles.forward;
    const bool rev = opt.toggles.reverse;
    if (!fwd && !rev)
    {
        out.p_diff.assign(p0.begin(), p0.end());
        tr.p_diff = out.p_diff;
        tr.states.push_back(out.p_diff);
        return out;
    }

    const int drawn_t = opt.t_policy.draw(rng, steps);
    tr.noise = sample_standard_normal(rng, p0.size());
    tr.forward_applied = fwd;

    Vector start;
    if (fwd)
    {
        tr.t_start = drawn_t;
        start = forward_diffuse(p0, drawn_t, tr.noise, sched);
    }
    else
    {
        tr.t_start = steps;
        start = tr.noise;
    }

    if (!rev)
    {
        tr.states.push_back(start);
        out.p_diff = std::move(start);
        tr.p_diff = out.p_diff;
        return out;
    }

    tr.reverse_applied = true;
    if (opt.toggles.spatial)
    {
        enc.check(p0);
        tr.condition = spatial_condition(enc, p0).values;
        tr.spatial_applied = true;
    }
    const SpatialCondition cond{tr.condition};
    auto predictor = [&](std::span<const double> p_t, int t) {
        return predict_noise_conditioned(net, p_t, t, cond, steps, opt.alpha_scale);
    };
    tr.states = run_reverse_chain(start, tr.t_start, sched, predictor, &rng, opt.deterministic);
    out.p_diff = tr.states.back();
    tr.p_diff = out.p_diff;

    if (fwd)
        tr.training_sample = DiffusionSample{tr.t_start, tr.noise, tr.states.front()};
    else
    {
        // Without a forward stage the chain start carries no p0; the denoising
        // objective still needs a forward-noised sample of p0.
        DiffusionSample s;
        s.t = opt.t_policy.draw(rng, steps);
        s.eps = sample_standard_normal(rng, p0.size());
        s.p_t = forward_diffuse(p0, s.t, s.eps, sched);
        tr.training_sample = std::move(s);
    }
    return out;
}

} // namespace dpl
