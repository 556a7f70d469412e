#pragma once

#include "dpl/dpl.hpp"

namespace fixture
{

/// Small enough that a full train + evaluate finishes in well under a second.
inline dpl::RunConfig tiny(int iterations = 20)
{
    dpl::RunConfig c;
    c.iterations = iterations;
    c.model.dim = 8;
    c.generator.dim = 8;
    c.generator.height = 12;
    c.generator.width = 12;
    c.generator.blob_radius_min = 2;
    c.generator.blob_radius_max = 4;
    c.eval_episodes = 8;
    c.log_interval = 5;
    return c;
}

/// Well separated classes where matching is close to trivial.
inline dpl::RunConfig easy()
{
    dpl::RunConfig c;
    c.iterations = 200;
    c.model.dim = 16;
    c.generator.dim = 16;
    c.generator.separation = 10.0;
    c.generator.class_jitter = 0.0;
    c.generator.pixel_noise = 0.1;
    c.eval_episodes = 50;
    return c;
}

inline bool same_tensors(const dpl::Model& a, const dpl::Model& b)
{
    dpl::Model x = a, y = b;
    auto ta = x.tensors(), tb = y.tensors();
    if (ta.size() != tb.size())
        return false;
    for (std::size_t i = 0; i < ta.size(); ++i)
        if (!std::equal(ta[i].values.begin(), ta[i].values.end(), tb[i].values.begin(), tb[i].values.end()))
            return false;
    return true;
}

} // namespace fixture
