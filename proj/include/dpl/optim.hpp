#pragma once

#include <cmath>
#include <vector>

#include "dpl/mlp.hpp"

namespace dpl
{

struct SgdConfig
{
    double momentum = 0.9;
    double weight_decay = 1e-4;
};

/// d = g + wd * theta;  v = mu * v + d;  theta -= lr * v
inline void sgd_momentum_step(std::span<double> params, std::span<const double> grads, std::span<double> velocity,
                              double lr, const SgdConfig& cfg)
{
    for (std::size_t i = 0; i < params.size(); ++i)
    {
        const double d = grads[i] + cfg.weight_decay * params[i];
        velocity[i] = cfg.momentum * velocity[i] + d;
        params[i] -= lr * velocity[i];
    }
}

/// lr(it) = base * gamma^floor(it / milestone_every)
struct MultiStepDecay
{
    double gamma = 0.95;
    int milestone_every = 1000;

    double factor(int iteration) const
    {
        if (milestone_every <= 0)
            return 1.0;
        return std::pow(gamma, iteration / milestone_every);
    }
};

/// Momentum buffers for a fixed list of tensors, matched by position.
class SgdMomentum
{
public:
    SgdMomentum() = default;
    explicit SgdMomentum(SgdConfig cfg) : cfg_(cfg) {}

    const SgdConfig& config() const { return cfg_; }
    std::vector<Vector>& buffers() { return velocity_; }
    const std::vector<Vector>& buffers() const { return velocity_; }

    void ensure_buffers(const std::vector<TensorRef>& tensors)
    {
        if (velocity_.size() == tensors.size())
            return;
        velocity_.clear();
        for (const auto& t : tensors)
            velocity_.emplace_back(t.values.size(), 0.0);
    }

    /// lr_for(i) gives the learning rate of tensor i.
    template <class LrFor>
    void step(const std::vector<TensorRef>& tensors, LrFor&& lr_for)
    {
        ensure_buffers(tensors);
        for (std::size_t i = 0; i < tensors.size(); ++i)
            sgd_momentum_step(tensors[i].values, tensors[i].grads, velocity_[i], lr_for(i), cfg_);
    }

private:
    SgdConfig cfg_;
    std::vector<Vector> velocity_;
};

} // namespace dpl
