#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpl/denoiser.hpp"
#include "dpl/diffusion.hpp"
#include "dpl/fusion.hpp"
#include "dpl/geometry.hpp"
#include "dpl/mlp.hpp"
#include "dpl/schedule.hpp"

namespace dpl
{

/// Everything that determines tensor shapes and the noise schedule.
struct ModelConfig
{
    int dim = 64;
    int time_dim = static_cast<int>(default_time_dim);
    int steps = 20;
    double cosine_offset = 0.008;
    double clip_lo = 0.001;
    double clip_hi = 0.1;

    bool operator==(const ModelConfig&) const = default;
};

/// Trainable state: denoiser, condition encoder and fusion logits, plus the
/// fixed noise schedule they were trained against.
struct Model
{
    ModelConfig config;
    NoiseSchedule schedule;
    DenoiserNet denoiser;
    ConditionEncoder encoder;
    FusionParams fusion;

    Model() = default;

    explicit Model(const ModelConfig& cfg)
        : config(cfg), schedule(build_cosine_schedule(cfg.steps, cfg.cosine_offset, cfg.clip_lo, cfg.clip_hi)),
          denoiser(static_cast<std::size_t>(cfg.dim), static_cast<std::size_t>(cfg.time_dim)),
          encoder(static_cast<std::size_t>(cfg.dim))
    {
        require(cfg.dim >= 1, "ModelConfig: dim must be >= 1");
    }

    /// Hidden layers ~ N(0, 1/fan_in); output layers of both networks start at
    /// zero so an untrained model predicts zero noise and zero condition.
    static Model initialized(const ModelConfig& cfg, std::uint64_t seed)
    {
        Model m(cfg);
        auto rng = derive_stream(seed, StreamDomain::init, 0);
        m.denoiser.mlp().initialize(rng, true);
        m.encoder.mlp().initialize(rng, true);
        return m;
    }

    /// Stable ordering used by the optimizer and the checkpoint format.
    std::vector<TensorRef> tensors()
    {
        std::vector<TensorRef> out;
        denoiser.mlp().collect_tensors("denoiser", out);
        encoder.mlp().collect_tensors("encoder", out);
        out.push_back({"fusion.theta_fidelity", {&fusion.theta_fidelity, 1}, {&fusion.grad_fidelity, 1}, {1}});
        out.push_back({"fusion.theta_diversity", {&fusion.theta_diversity, 1}, {&fusion.grad_diversity, 1}, {1}});
        return out;
    }

    void zero_grad()
    {
        denoiser.mlp().zero_grad();
        encoder.mlp().zero_grad();
        fusion.zero_grad();
    }
};

struct PipelineResult
{
    Vector enhanced; // final prototype used for matching
    Vector p_diff;
    EnhancementTrace trace;
    bool enhancement_invoked = false;
    bool fusion_invoked = false;
};

/// Enhance then fuse, following the toggles. With every toggle off the
/// result is p0 and neither stage runs.
inline PipelineResult run_pipeline(std::span<const double> p0, const Model& model, RngStream& rng,
                                   const EnhanceOptions& opt)
{
    PipelineResult r;
    if (opt.toggles.any_enhancement())
    {
        Enhancement e = enhance_prototype(p0, model.schedule, model.denoiser, model.encoder, rng, opt);
        r.p_diff = std::move(e.p_diff);
        r.trace = std::move(e.trace);
        r.enhancement_invoked = true;
    }
    else
        r.p_diff.assign(p0.begin(), p0.end());

    if (opt.toggles.fusion && r.enhancement_invoked)
    {
        r.enhanced = fuse(p0, r.p_diff, model.fusion);
        r.fusion_invoked = true;
    }
    else
        r.enhanced = r.p_diff;
    return r;
}

} // namespace dpl
