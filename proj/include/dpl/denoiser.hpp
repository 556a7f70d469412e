#pragma once

#include <cmath>

#include "dpl/geometry.hpp"
#include "dpl/mlp.hpp"

namespace dpl
{

inline constexpr std::size_t default_time_dim = 32;

/// Sinusoidal timestep features: [sin(t w_k), cos(t w_k)], w_k = 10000^(-k/(E/2)).
class TimeEmbedding
{
public:
    explicit TimeEmbedding(std::size_t dim = default_time_dim) : dim_(dim)
    {
        require(dim >= 2 && dim % 2 == 0, "TimeEmbedding: dimension must be even and >= 2");
    }

    std::size_t dim() const { return dim_; }

    void embed(int t, std::span<double> out) const
    {
        const std::size_t half = dim_ / 2;
        for (std::size_t k = 0; k < half; ++k)
        {
            const double freq = std::pow(10000.0, -static_cast<double>(k) / static_cast<double>(half));
            out[k] = std::sin(t * freq);
            out[k + half] = std::cos(t * freq);
        }
    }

    Vector operator()(int t) const
    {
        Vector v(dim_);
        embed(t, v);
        return v;
    }

private:
    std::size_t dim_;
};

/// eps_theta(p_t, t): R^{D+E} -> R^D with two tanh hidden layers of width 2D.
class DenoiserNet
{
public:
    DenoiserNet() = default;
    explicit DenoiserNet(std::size_t dim, std::size_t time_dim = default_time_dim)
        : dim_(dim), embedding_(time_dim), mlp_({dim + time_dim, 2 * dim, 2 * dim, dim})
    {
    }

    std::size_t dim() const { return dim_; }
    const TimeEmbedding& embedding() const { return embedding_; }
    Mlp& mlp() { return mlp_; }
    const Mlp& mlp() const { return mlp_; }

    Vector input(std::span<const double> p_t, int t) const
    {
        require(p_t.size() == dim_, "DenoiserNet: input dimension " + std::to_string(p_t.size()) +
                                        " does not match network dimension " + std::to_string(dim_));
        require(t >= 0, "DenoiserNet: negative timestep");
        Vector in(dim_ + embedding_.dim());
        std::copy(p_t.begin(), p_t.end(), in.begin());
        embedding_.embed(t, std::span<double>(in).subspan(dim_));
        return in;
    }

private:
    std::size_t dim_ = 0;
    TimeEmbedding embedding_;
    Mlp mlp_;
};

inline Vector predict_noise(const DenoiserNet& net, std::span<const double> p_t, int t)
{
    return net.mlp().evaluate(net.input(p_t, t));
}

/// eps_enhanced = eps_theta(p_t, t) + alpha_t * c_spatial.
inline Vector predict_noise_conditioned(const DenoiserNet& net, std::span<const double> p_t, int t,
                                        const SpatialCondition& condition, int steps,
                                        double alpha_scale = default_alpha_scale)
{
    Vector eps = predict_noise(net, p_t, t);
    if (condition.values.empty())
        return eps;
    require_same_size(eps, condition.values, "predict_noise_conditioned");
    const double a = injection_strength(t, steps, alpha_scale);
    for (std::size_t i = 0; i < eps.size(); ++i)
        eps[i] += a * condition.values[i];
    return eps;
}

/// Forward pass that caches activations; pair with backward().
inline Vector predict_noise_for_training(DenoiserNet& net, std::span<const double> p_t, int t)
{
    return net.mlp().forward(net.input(p_t, t));
}

/// Accumulates parameter gradients for the loss whose gradient w.r.t. the
/// network output is `upstream`; returns the gradient w.r.t. [p_t; embed(t)].
inline Vector backward(DenoiserNet& net, std::span<const double> upstream)
{
    return net.mlp().backward(upstream);
}

} // namespace dpl
