// Enhances one support prototype with an untrained model and compares the
// plain and enhanced prototypes on the query image.
#include <cstdio>

#include "dpl/dpl.hpp"

int main()
{
    dpl::RunConfig cfg;
    const dpl::Model model = dpl::Model::initialized(cfg.model, cfg.seed);
    auto ep_rng = dpl::derive_stream(cfg.seed, dpl::StreamDomain::eval_episode, 0);
    const dpl::Episode ep = dpl::generate_episode(ep_rng, cfg.generator);
    const auto protos = dpl::episode_prototypes(ep, cfg.prototype_eps);

    auto rng = dpl::derive_stream(cfg.seed, dpl::StreamDomain::eval_enhance, 0);
    const dpl::PipelineResult r = dpl::run_pipeline(protos.support_fg.vector, model, rng, cfg.enhance_options());

    auto dice_with = [&](const dpl::Vector& fg) {
        const auto probs = dpl::predict_segmentation(ep.query.features, {fg, ep.class_id}, protos.support_bg);
        return dpl::dice_score(dpl::threshold(probs), ep.query.mask);
    };
    std::printf("class %d, t_start %d\n", ep.class_id, r.trace.t_start);
    std::printf("cos(p0, p_diff)     = %.4f\n", dpl::cosine_similarity(protos.support_fg.vector, r.p_diff));
    std::printf("cos(p0, p_enhanced) = %.4f\n", dpl::cosine_similarity(protos.support_fg.vector, r.enhanced));
    std::printf("dice plain    = %.2f\n", dice_with(protos.support_fg.vector));
    std::printf("dice enhanced = %.2f\n", dice_with(r.enhanced));
}
