#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpl/checkpoint.hpp"
#include "dpl/config.hpp"
#include "dpl/episodes.hpp"
#include "dpl/losses.hpp"
#include "dpl/model.hpp"
#include "dpl/optim.hpp"
#include "dpl/parallel.hpp"

namespace dpl
{

/// Non-finite loss or parameters (CLI exit code 3).
class NumericFailure : public std::runtime_error
{
public:
    NumericFailure(const std::string& what, int iteration, std::uint64_t seed)
        : std::runtime_error(what), iteration(iteration), seed(seed)
    {
    }
    int iteration;
    std::uint64_t seed;
};

struct MetricsRecord
{
    int iteration = 0; // iterations completed
    LossBreakdown loss;  // mean over the logging interval
    std::vector<double> class_dice; // NaN for classes not seen in the interval
    double mean_dice = 0.0;
    double wall_seconds = 0.0;
};

inline void write_metrics_header(std::ostream& os, int num_classes)
{
    os << "iteration,seg,align,diffusion,total,beta";
    for (int c = 0; c < num_classes; ++c)
        os << ",dice_class" << c;
    os << ",mean_dice,wall_seconds\n";
}

inline void write_metrics_row(std::ostream& os, const MetricsRecord& r)
{
    os << r.iteration << ',' << r.loss.seg << ',' << r.loss.align << ',' << r.loss.diffusion << ',' << r.loss.total
       << ',' << r.loss.beta;
    for (double d : r.class_dice)
        os << ',' << (std::isnan(d) ? std::string("") : std::to_string(d));
    os << ',' << r.mean_dice << ',' << r.wall_seconds << '\n';
}

struct EpisodePrototypes
{
    Prototype support_fg;
    Prototype support_bg;
    Prototype query_fg;
};

inline EpisodePrototypes episode_prototypes(const Episode& ep, double eps)
{
    return {extract_prototype(ep.support.features, ep.support.mask, eps, ep.class_id),
            extract_prototype(ep.support.features, ep.support.mask.complement(), eps, -1),
            extract_prototype(ep.query.features, ep.query.mask, eps, ep.class_id)};
}

struct EpisodeOutcome
{
    LossBreakdown loss;
    double dice = 0.0;
    int class_id = 0;
    PipelineResult support;
    PipelineResult query;
};

/// Runs the full training pipeline on one episode and accumulates gradients:
/// seg + align into the fusion logits (p_diff held constant), beta * diffusion
/// into denoiser and encoder. Gradients are added to whatever is already in
/// the model's accumulators.
inline EpisodeOutcome accumulate_episode_gradients(Model& model, const RunConfig& cfg, const Episode& ep,
                                                   RngStream& enhance_rng)
{
    const EnhanceOptions opt = cfg.enhance_options();
    const EpisodePrototypes protos = episode_prototypes(ep, cfg.prototype_eps);

    EpisodeOutcome out;
    out.class_id = ep.class_id;
    out.support = run_pipeline(protos.support_fg.vector, model, enhance_rng, opt);
    out.query = run_pipeline(protos.query_fg.vector, model, enhance_rng, opt);

    const Prototype fg{out.support.enhanced, ep.class_id};
    const Prototype query_fg{out.query.enhanced, ep.class_id};
    const SegmentationGradient seg =
        segmentation_loss_gradient(ep.query.features, fg, protos.support_bg, ep.query.mask, cfg.temperature);
    const std::vector<Prototype> sup_list{fg}, qry_list{query_fg};
    const double align = alignment_loss(sup_list, qry_list);
    const Vector g_align = alignment_gradient(sup_list, qry_list, 0);

    if (out.support.fusion_invoked)
    {
        Vector g = seg.grad_fg;
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += g_align[i];
        fuse_backward(protos.support_fg.vector, out.support.p_diff, g, model.fusion);
    }
    if (out.query.fusion_invoked)
    {
        Vector g(g_align.size());
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] = -g_align[i];
        fuse_backward(protos.query_fg.vector, out.query.p_diff, g, model.fusion);
    }

    // Denoising objective on each enhancement's (t, eps, p_t) sample.
    std::vector<std::pair<const Vector*, const DiffusionSample*>> samples;
    for (const auto* r : {&out.support, &out.query})
        if (r->trace.training_sample)
            samples.emplace_back(r == &out.support ? &protos.support_fg.vector : &protos.query_fg.vector,
                                 &*r->trace.training_sample);
    double diffusion = 0.0;
    const int steps = model.schedule.steps();
    for (const auto& [p0, s] : samples)
    {
        Vector eps = predict_noise_for_training(model.denoiser, s->p_t, s->t);
        double alpha = 0.0;
        if (opt.toggles.spatial)
        {
            alpha = injection_strength(s->t, steps, cfg.alpha_scale);
            const auto g_norm = normalize_constraints(compute_constraints(*p0), p0->size());
            const SpatialCondition c = encode_condition_for_training(model.encoder, *p0, g_norm);
            for (std::size_t i = 0; i < eps.size(); ++i)
                eps[i] += alpha * c.values[i];
        }
        diffusion += diffusion_loss(s->eps, eps);
        Vector g = diffusion_loss_gradient(s->eps, eps);
        const double scale = cfg.beta / static_cast<double>(samples.size());
        for (double& v : g)
            v *= scale;
        backward(model.denoiser, g);
        if (opt.toggles.spatial)
        {
            for (double& v : g)
                v *= alpha;
            model.encoder.mlp().backward(g);
        }
    }
    if (!samples.empty())
        diffusion /= static_cast<double>(samples.size());

    out.loss = total_loss(seg.loss, align, diffusion, cfg.beta);
    out.dice = dice_score(threshold(predict_segmentation(ep.query.features, fg, protos.support_bg, cfg.temperature)),
                          ep.query.mask);
    return out;
}

class Trainer
{
public:
    explicit Trainer(const RunConfig& cfg)
        : cfg_(cfg), bank_(make_class_bank(cfg.generator)), model_(Model::initialized(cfg.model, cfg.seed)),
          opt_(SgdConfig{cfg.momentum, cfg.weight_decay})
    {
        cfg_.validate();
        opt_.ensure_buffers(model_.tensors());
    }

    /// Resumes from a checkpoint; cfg must describe the same model.
    Trainer(const Checkpoint& ckpt, const RunConfig& cfg)
        : cfg_(cfg), bank_(make_class_bank(cfg.generator)), model_(ckpt.model),
          opt_(SgdConfig{cfg.momentum, cfg.weight_decay}), iteration_(ckpt.iteration)
    {
        cfg_.validate();
        if (config_hash(cfg.model) != ckpt.config_hash)
            throw ConfigError("refusing to resume: config hash " + hash_hex(config_hash(cfg.model)) +
                              " does not match checkpoint " + hash_hex(ckpt.config_hash));
        opt_.ensure_buffers(model_.tensors());
        if (ckpt.momentum.size() == opt_.buffers().size())
            opt_.buffers() = ckpt.momentum;
    }

    int iteration() const { return iteration_; }
    const Model& model() const { return model_; }
    const RunConfig& config() const { return cfg_; }

    EpisodeOutcome step()
    {
        const int i = iteration_;
        auto ep_rng = derive_stream(cfg_.seed, StreamDomain::train_episode, static_cast<std::uint64_t>(i));
        const Episode ep = generate_episode(ep_rng, cfg_.generator, bank_);
        auto enh_rng = derive_stream(cfg_.seed, StreamDomain::train_enhance, static_cast<std::uint64_t>(i));

        model_.zero_grad();
        EpisodeOutcome out = accumulate_episode_gradients(model_, cfg_, ep, enh_rng);
        if (!std::isfinite(out.loss.total))
            throw NumericFailure("non-finite loss at iteration " + std::to_string(i) + " (seed " +
                                     std::to_string(cfg_.seed) + ", episode stream " +
                                     std::to_string(ep_rng.stream_id()) + ")",
                                 i, cfg_.seed);

        const double decay = MultiStepDecay{cfg_.lr_gamma, cfg_.lr_milestone_every}.factor(i);
        auto tensors = model_.tensors();
        const std::size_t fusion_begin = tensors.size() - 2;
        opt_.step(tensors, [&](std::size_t k) { return (k >= fusion_begin ? cfg_.lr_fusion : cfg_.lr_head) * decay; });
        for (const auto& t : tensors)
            if (!all_finite(t.values))
                throw NumericFailure("non-finite parameter " + t.name + " after iteration " + std::to_string(i), i,
                                     cfg_.seed);
        ++iteration_;
        return out;
    }

    using MetricsSink = std::function<void(const MetricsRecord&)>;

    void run_until(int target, const MetricsSink& sink = {})
    {
        const auto start = std::chrono::steady_clock::now();
        const int classes = cfg_.generator.num_classes;
        LossBreakdown acc;
        std::vector<double> dice_sum(classes, 0.0);
        std::vector<int> dice_n(classes, 0);
        int n = 0;
        while (iteration_ < target)
        {
            const EpisodeOutcome o = step();
            acc.seg += o.loss.seg;
            acc.align += o.loss.align;
            acc.diffusion += o.loss.diffusion;
            acc.total += o.loss.total;
            dice_sum[o.class_id] += o.dice;
            ++dice_n[o.class_id];
            ++n;
            if (sink && (iteration_ % cfg_.log_interval == 0 || iteration_ == target))
            {
                MetricsRecord r;
                r.iteration = iteration_;
                r.loss = {acc.seg / n, acc.align / n, acc.diffusion / n, acc.total / n, cfg_.beta};
                double all = 0.0;
                for (int c = 0; c < classes; ++c)
                {
                    r.class_dice.push_back(dice_n[c] ? dice_sum[c] / dice_n[c]
                                                     : std::numeric_limits<double>::quiet_NaN());
                    all += dice_sum[c];
                }
                r.mean_dice = all / n;
                r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                sink(r);
                acc = {};
                std::fill(dice_sum.begin(), dice_sum.end(), 0.0);
                std::fill(dice_n.begin(), dice_n.end(), 0);
                n = 0;
            }
        }
    }

    Checkpoint checkpoint() const
    {
        Checkpoint c;
        c.config = cfg_;
        c.model = model_;
        c.momentum = opt_.buffers();
        c.iteration = iteration_;
        c.rng_cursor = static_cast<std::uint64_t>(iteration_);
        c.config_hash = config_hash(cfg_.model);
        return c;
    }

private:
    RunConfig cfg_;
    ClassBank bank_;
    Model model_;
    SgdMomentum opt_;
    int iteration_ = 0;
};

inline Checkpoint train(const RunConfig& cfg, const Trainer::MetricsSink& sink = {})
{
    Trainer t(cfg);
    t.run_until(cfg.iterations, sink);
    return t.checkpoint();
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct EvalReport
{
    int episodes = 0;
    double mean_dice = 0.0;
    double std_dice = 0.0;
    std::vector<double> dice;    // per episode, in episode order
    std::vector<int> class_ids;  // per episode
    std::vector<double> class_mean_dice; // NaN for absent classes
    std::vector<int> class_count;
    double final_fidelity_weight = 0.0;
    double final_diversity_weight = 0.0;
    std::optional<EnhancementTrace> first_trace;
};

/// Scores held-out episodes (eval_seed streams). Each episode owns its
/// streams, so results do not depend on `threads`.
inline EvalReport evaluate(const Checkpoint& ckpt, const RunConfig& cfg, int n_episodes, unsigned threads = 1,
                           bool keep_first_trace = false)
{
    cfg.validate();
    if (config_hash(cfg.model) != ckpt.config_hash)
        throw ConfigError("refusing to evaluate: config hash " + hash_hex(config_hash(cfg.model)) +
                          " does not match checkpoint " + hash_hex(ckpt.config_hash));
    require(n_episodes >= 0, "evaluate: negative episode count");

    const ClassBank bank = make_class_bank(cfg.generator);
    const EnhanceOptions opt = cfg.enhance_options();
    const Model& model = ckpt.model;

    EvalReport rep;
    rep.episodes = n_episodes;
    rep.dice.assign(n_episodes, 0.0);
    rep.class_ids.assign(n_episodes, 0);
    std::optional<EnhancementTrace> trace0;

    parallel_for(static_cast<std::size_t>(n_episodes), threads, [&](std::size_t j) {
        auto ep_rng = derive_stream(cfg.eval_seed, StreamDomain::eval_episode, j);
        const Episode ep = generate_episode(ep_rng, cfg.generator, bank);
        auto enh_rng = derive_stream(cfg.eval_seed, StreamDomain::eval_enhance, j);
        const EpisodePrototypes protos = episode_prototypes(ep, cfg.prototype_eps);
        PipelineResult r = run_pipeline(protos.support_fg.vector, model, enh_rng, opt);
        const Prototype fg{r.enhanced, ep.class_id};
        rep.dice[j] =
            dice_score(threshold(predict_segmentation(ep.query.features, fg, protos.support_bg, cfg.temperature)),
                       ep.query.mask);
        rep.class_ids[j] = ep.class_id;
        if (j == 0 && keep_first_trace)
            trace0 = std::move(r.trace);
    });

    const int classes = cfg.generator.num_classes;
    std::vector<double> sums(classes, 0.0);
    rep.class_count.assign(classes, 0);
    double sum = 0.0;
    for (int j = 0; j < n_episodes; ++j)
    {
        sum += rep.dice[j];
        sums[rep.class_ids[j]] += rep.dice[j];
        ++rep.class_count[rep.class_ids[j]];
    }
    if (n_episodes > 0)
    {
        rep.mean_dice = sum / n_episodes;
        double ss = 0.0;
        for (double d : rep.dice)
            ss += (d - rep.mean_dice) * (d - rep.mean_dice);
        rep.std_dice = std::sqrt(ss / n_episodes);
    }
    for (int c = 0; c < classes; ++c)
        rep.class_mean_dice.push_back(rep.class_count[c] ? sums[c] / rep.class_count[c]
                                                         : std::numeric_limits<double>::quiet_NaN());
    const auto w = fusion_weights(model.fusion);
    rep.final_fidelity_weight = w.fidelity;
    rep.final_diversity_weight = w.diversity;
    rep.first_trace = std::move(trace0);
    return rep;
}

inline nlohmann::json trace_to_json(const EnhancementTrace& t)
{
    return {{"t_start", t.t_start},
            {"forward_applied", t.forward_applied},
            {"reverse_applied", t.reverse_applied},
            {"spatial_applied", t.spatial_applied},
            {"noise", t.noise},
            {"condition", t.condition},
            {"states", t.states},
            {"p_diff", t.p_diff}};
}

inline nlohmann::json report_to_json(const EvalReport& r)
{
    nlohmann::json classes = nlohmann::json::array();
    for (std::size_t c = 0; c < r.class_mean_dice.size(); ++c)
        classes.push_back({{"class_id", c},
                           {"episodes", r.class_count[c]},
                           {"mean_dice", std::isnan(r.class_mean_dice[c]) ? nlohmann::json(nullptr)
                                                                           : nlohmann::json(r.class_mean_dice[c])}});
    nlohmann::json j = {{"episodes", r.episodes},
                        {"mean_dice", r.mean_dice},
                        {"std_dice", r.std_dice},
                        {"per_episode_dice", r.dice},
                        {"per_class", classes},
                        {"fusion_weights", {{"fidelity", r.final_fidelity_weight}, {"diversity", r.final_diversity_weight}}}};
    if (r.first_trace)
        j["trace"] = trace_to_json(*r.first_trace);
    return j;
}

} // namespace dpl
