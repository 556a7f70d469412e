#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpl/diffusion.hpp"
#include "dpl/episodes.hpp"
#include "dpl/model.hpp"

namespace dpl
{

/// Raised for malformed or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig
{
    int iterations = 3000;
    double lr_head = 1e-3;    // denoiser + encoder
    double lr_fusion = 1e-7;  // fusion logits
    double momentum = 0.9;
    double weight_decay = 1e-4;
    double lr_gamma = 0.95;
    int lr_milestone_every = 1000;
    double beta = 0.02;
    double alpha_scale = 0.1;
    double temperature = 20.0;
    double prototype_eps = 1e-5;
    ModelConfig model;
    GeneratorConfig generator;
    PipelineToggles toggles;
    bool deterministic = false;
    std::optional<int> fixed_t;
    std::uint64_t seed = 1;          // training streams and init
    std::uint64_t eval_seed = 1000;  // held-out episode streams
    int eval_episodes = 100;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    int log_interval = 100;
    int threads = 1;

    EnhanceOptions enhance_options() const
    {
        EnhanceOptions o;
        o.toggles = toggles;
        o.deterministic = deterministic;
        o.alpha_scale = alpha_scale;
        o.t_policy.fixed = fixed_t;
        return o;
    }

    void validate() const
    {
        auto check = [](bool ok, const std::string& msg) {
            if (!ok)
                throw ConfigError("config: " + msg);
        };
        check(iterations >= 0, "iterations must be >= 0");
        check(lr_head > 0.0 && lr_fusion > 0.0, "learning rates must be positive");
        check(momentum >= 0.0 && momentum < 1.0, "momentum must lie in [0, 1)");
        check(weight_decay >= 0.0, "weight_decay must be >= 0");
        check(lr_gamma > 0.0, "lr_gamma must be positive");
        check(beta >= 0.0, "beta must be >= 0");
        check(alpha_scale >= 0.0, "alpha_scale must be >= 0");
        check(temperature > 0.0, "temperature must be positive");
        check(prototype_eps > 0.0, "prototype_eps must be positive");
        check(model.dim == generator.dim, "model.dim must equal generator.dim");
        check(model.steps >= 1, "model.steps must be >= 1");
        check(model.time_dim >= 2 && model.time_dim % 2 == 0, "model.time_dim must be even and >= 2");
        check(model.clip_lo > 0.0 && model.clip_lo < model.clip_hi && model.clip_hi < 1.0, "invalid beta clip range");
        check(!fixed_t || (*fixed_t >= 1 && *fixed_t <= model.steps), "fixed_t must lie in [1, T]");
        check(eval_episodes >= 0, "eval_episodes must be >= 0");
        check(log_interval >= 1, "log_interval must be >= 1");
        check(threads >= 1, "threads must be >= 1");
        try
        {
            generator.validate();
        }
        catch (const std::invalid_argument& e)
        {
            throw ConfigError(e.what());
        }
    }
};

// ---------------------------------------------------------------------------
// JSON mapping. Missing keys keep their defaults; unknown keys are rejected.
// ---------------------------------------------------------------------------

namespace detail
{
inline void reject_unknown(const nlohmann::json& j, const nlohmann::json& known, const std::string& where)
{
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.contains(it.key()))
            throw ConfigError("config: unknown key '" + where + it.key() + "'");
}

template <class T>
void read_if(const nlohmann::json& j, const char* key, T& out)
{
    if (j.contains(key))
        out = j.at(key).get<T>();
}
} // namespace detail

inline void to_json(nlohmann::json& j, const ModelConfig& m)
{
    j = {{"dim", m.dim},         {"time_dim", m.time_dim}, {"steps", m.steps},
         {"cosine_offset", m.cosine_offset}, {"clip_lo", m.clip_lo}, {"clip_hi", m.clip_hi}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& m)
{
    detail::reject_unknown(j, nlohmann::json(ModelConfig{}), "model.");
    detail::read_if(j, "dim", m.dim);
    detail::read_if(j, "time_dim", m.time_dim);
    detail::read_if(j, "steps", m.steps);
    detail::read_if(j, "cosine_offset", m.cosine_offset);
    detail::read_if(j, "clip_lo", m.clip_lo);
    detail::read_if(j, "clip_hi", m.clip_hi);
}

inline void to_json(nlohmann::json& j, const GeneratorConfig& g)
{
    j = {{"dim", g.dim},
         {"height", g.height},
         {"width", g.width},
         {"separation", g.separation},
         {"class_jitter", g.class_jitter},
         {"pixel_noise", g.pixel_noise},
         {"background_norm", g.background_norm},
         {"num_classes", g.num_classes},
         {"blob_count_min", g.blob_count_min},
         {"blob_count_max", g.blob_count_max},
         {"blob_radius_min", g.blob_radius_min},
         {"blob_radius_max", g.blob_radius_max},
         {"seed", g.seed}};
}

inline void from_json(const nlohmann::json& j, GeneratorConfig& g)
{
    detail::reject_unknown(j, nlohmann::json(GeneratorConfig{}), "generator.");
    detail::read_if(j, "dim", g.dim);
    detail::read_if(j, "height", g.height);
    detail::read_if(j, "width", g.width);
    detail::read_if(j, "separation", g.separation);
    detail::read_if(j, "class_jitter", g.class_jitter);
    detail::read_if(j, "pixel_noise", g.pixel_noise);
    detail::read_if(j, "background_norm", g.background_norm);
    detail::read_if(j, "num_classes", g.num_classes);
    detail::read_if(j, "blob_count_min", g.blob_count_min);
    detail::read_if(j, "blob_count_max", g.blob_count_max);
    detail::read_if(j, "blob_radius_min", g.blob_radius_min);
    detail::read_if(j, "blob_radius_max", g.blob_radius_max);
    detail::read_if(j, "seed", g.seed);
}

inline void to_json(nlohmann::json& j, const PipelineToggles& t)
{
    j = {{"forward", t.forward}, {"reverse", t.reverse}, {"spatial", t.spatial}, {"fusion", t.fusion}};
}

inline void from_json(const nlohmann::json& j, PipelineToggles& t)
{
    detail::reject_unknown(j, nlohmann::json(PipelineToggles{}), "toggles.");
    detail::read_if(j, "forward", t.forward);
    detail::read_if(j, "reverse", t.reverse);
    detail::read_if(j, "spatial", t.spatial);
    detail::read_if(j, "fusion", t.fusion);
}

inline void to_json(nlohmann::json& j, const RunConfig& c)
{
    j = {{"iterations", c.iterations},
         {"lr_head", c.lr_head},
         {"lr_fusion", c.lr_fusion},
         {"momentum", c.momentum},
         {"weight_decay", c.weight_decay},
         {"lr_gamma", c.lr_gamma},
         {"lr_milestone_every", c.lr_milestone_every},
         {"beta", c.beta},
         {"alpha_scale", c.alpha_scale},
         {"temperature", c.temperature},
         {"prototype_eps", c.prototype_eps},
         {"model", c.model},
         {"generator", c.generator},
         {"toggles", c.toggles},
         {"deterministic", c.deterministic},
         {"fixed_t", c.fixed_t ? nlohmann::json(*c.fixed_t) : nlohmann::json(nullptr)},
         {"seed", c.seed},
         {"eval_seed", c.eval_seed},
         {"eval_episodes", c.eval_episodes},
         {"seeds", c.seeds},
         {"log_interval", c.log_interval},
         {"threads", c.threads}};
}

inline void from_json(const nlohmann::json& j, RunConfig& c)
{
    detail::reject_unknown(j, nlohmann::json(RunConfig{}), "");
    detail::read_if(j, "iterations", c.iterations);
    detail::read_if(j, "lr_head", c.lr_head);
    detail::read_if(j, "lr_fusion", c.lr_fusion);
    detail::read_if(j, "momentum", c.momentum);
    detail::read_if(j, "weight_decay", c.weight_decay);
    detail::read_if(j, "lr_gamma", c.lr_gamma);
    detail::read_if(j, "lr_milestone_every", c.lr_milestone_every);
    detail::read_if(j, "beta", c.beta);
    detail::read_if(j, "alpha_scale", c.alpha_scale);
    detail::read_if(j, "temperature", c.temperature);
    detail::read_if(j, "prototype_eps", c.prototype_eps);
    detail::read_if(j, "model", c.model);
    detail::read_if(j, "generator", c.generator);
    detail::read_if(j, "toggles", c.toggles);
    detail::read_if(j, "deterministic", c.deterministic);
    if (j.contains("fixed_t"))
    {
        if (j.at("fixed_t").is_null())
            c.fixed_t.reset();
        else
            c.fixed_t = j.at("fixed_t").get<int>();
    }
    detail::read_if(j, "seed", c.seed);
    detail::read_if(j, "eval_seed", c.eval_seed);
    detail::read_if(j, "eval_episodes", c.eval_episodes);
    detail::read_if(j, "seeds", c.seeds);
    detail::read_if(j, "log_interval", c.log_interval);
    detail::read_if(j, "threads", c.threads);
}

inline RunConfig parse_run_config(const std::string& text)
{
    RunConfig c;
    try
    {
        c = nlohmann::json::parse(text).get<RunConfig>();
    }
    catch (const ConfigError&)
    {
        throw;
    }
    catch (const std::exception& e)
    {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

inline RunConfig load_run_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

/// FNV-1a over the canonical JSON of the model block.
inline std::uint64_t config_hash(const ModelConfig& m)
{
    const std::string s = nlohmann::json(m).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s)
    {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hash_hex(std::uint64_t h)
{
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4)
        s[i] = digits[h & 0xF];
    return s;
}

} // namespace dpl
