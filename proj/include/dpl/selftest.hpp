#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "dpl/trainer.hpp"

namespace dpl
{

struct SelfTestResult
{
    std::string name;
    bool ok = false;
    std::string detail;
};

/// Quick sanity checks covering each stage; runs in well under a second.
inline std::vector<SelfTestResult> run_selftest()
{
    std::vector<SelfTestResult> out;
    auto check = [&](const std::string& name, const std::function<std::string()>& fn) {
        try
        {
            const std::string err = fn();
            out.push_back({name, err.empty(), err});
        }
        catch (const std::exception& e)
        {
            out.push_back({name, false, e.what()});
        }
    };

    const NoiseSchedule sched = build_cosine_schedule(20);

    check("schedule", [&]() -> std::string {
        for (int t = 1; t <= sched.steps(); ++t)
        {
            if (sched.beta(t) < 0.001 || sched.beta(t) > 0.1)
                return "beta out of clip range at t=" + std::to_string(t);
            if (!(sched.alpha_bar(t) < sched.alpha_bar(t - 1)))
                return "alpha_bar not decreasing at t=" + std::to_string(t);
        }
        return {};
    });

    check("round-trip", [&]() -> std::string {
        auto rng = derive_stream(7, StreamDomain::init, 99);
        const Vector p0 = sample_standard_normal(rng, 16);
        const Vector eps = sample_standard_normal(rng, 16);
        const Vector start = forward_diffuse(p0, 20, eps, sched);
        auto oracle = [&](std::span<const double> p_t, int t) {
            Vector e(p_t.size());
            const double a = std::sqrt(sched.alpha_bar(t)), b = std::sqrt(1.0 - sched.alpha_bar(t));
            for (std::size_t i = 0; i < e.size(); ++i)
                e[i] = (p_t[i] - a * p0[i]) / b;
            return e;
        };
        const auto states = run_reverse_chain(start, 20, sched, oracle, nullptr, true);
        const double err = std::sqrt(squared_distance(states.back(), p0)) / norm(p0);
        return err < 1e-8 ? std::string{} : "relative error " + std::to_string(err);
    });

    check("fusion", []() -> std::string {
        const Vector out = fuse(Vector{1.0, 0.0}, Vector{0.0, 1.0}, FusionParams{});
        return std::abs(out[0] - 0.8) < 1e-12 && std::abs(out[1] - 0.2) < 1e-12 ? std::string{}
                                                                               : "default weights are not (0.8, 0.2)";
    });

    check("dice", []() -> std::string {
        Mask a(8, 8), b(8, 8);
        a.at(1, 1) = a.at(1, 2) = a.at(1, 3) = 1;
        b.at(1, 2) = b.at(1, 3) = b.at(2, 3) = 1;
        const double d = dice_score(a, b);
        return std::abs(d - 200.0 / 3.0) < 1e-9 && d == dice_score(b, a) ? std::string{} : "unexpected dice";
    });

    check("train-determinism", []() -> std::string {
        RunConfig cfg;
        cfg.iterations = 5;
        cfg.model.dim = cfg.generator.dim = 8;
        cfg.generator.height = cfg.generator.width = 12;
        cfg.generator.blob_radius_min = 2;
        cfg.generator.blob_radius_max = 4;
        const Checkpoint a = train(cfg), b = train(cfg);
        const EvalReport ra = evaluate(a, cfg, 4, 1), rb = evaluate(b, cfg, 4, 2);
        if (checkpoint_to_json(a) != checkpoint_to_json(b))
            return "repeated training differs";
        return ra.dice == rb.dice ? std::string{} : "evaluation depends on thread count";
    });
    return out;
}

} // namespace dpl
