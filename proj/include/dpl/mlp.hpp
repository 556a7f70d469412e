#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpl/numerics.hpp"

namespace dpl
{

struct DenseLayer
{
    Matrix weight;
    Vector bias;
    Matrix grad_weight;
    Vector grad_bias;

    DenseLayer() = default;
    DenseLayer(std::size_t in, std::size_t out)
        : weight(out, in), bias(out, 0.0), grad_weight(out, in), grad_bias(out, 0.0)
    {
    }

    std::size_t in() const { return weight.cols; }
    std::size_t out() const { return weight.rows; }
};

/// Named view of one parameter tensor and its gradient accumulator.
struct TensorRef
{
    std::string name;
    std::span<double> values;
    std::span<double> grads;
    std::vector<std::size_t> shape;
};

/// Perceptron with tanh hidden layers and a linear output layer.
///
/// forward() caches the activations of the last call; backward() consumes
/// that cache, accumulates parameter gradients and returns d(loss)/d(input).
class Mlp
{
public:
    Mlp() = default;

    explicit Mlp(const std::vector<std::size_t>& widths)
    {
        require(widths.size() >= 2, "Mlp: need at least input and output widths");
        for (std::size_t i = 0; i + 1 < widths.size(); ++i)
            layers_.emplace_back(widths[i], widths[i + 1]);
    }

    std::size_t input_dim() const { return layers_.front().in(); }
    std::size_t output_dim() const { return layers_.back().out(); }
    std::size_t depth() const { return layers_.size(); }

    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }

    /// Weights ~ N(0, 1/fan_in), biases zero. The output layer is left at
    /// zero when zero_output is set.
    void initialize(RngStream& rng, bool zero_output)
    {
        for (std::size_t l = 0; l < layers_.size(); ++l)
        {
            auto& layer = layers_[l];
            std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
            if (zero_output && l + 1 == layers_.size())
                std::fill(layer.weight.data.begin(), layer.weight.data.end(), 0.0);
            else
                rng.fill_normal(layer.weight.data, 1.0 / std::sqrt(static_cast<double>(layer.in())));
        }
    }

    /// Forward pass without touching the cache.
    Vector evaluate(std::span<const double> x) const
    {
        require(x.size() == input_dim(), "Mlp: input dimension mismatch");
        Vector cur(x.begin(), x.end());
        Vector next;
        for (std::size_t l = 0; l < layers_.size(); ++l)
        {
            const auto& layer = layers_[l];
            next.assign(layer.out(), 0.0);
            affine(layer.weight, cur, layer.bias, next);
            if (l + 1 < layers_.size())
                for (double& v : next)
                    v = std::tanh(v);
            cur.swap(next);
        }
        return cur;
    }

    Vector forward(std::span<const double> x)
    {
        require(x.size() == input_dim(), "Mlp: input dimension mismatch");
        acts_.resize(layers_.size() + 1);
        acts_[0].assign(x.begin(), x.end());
        for (std::size_t l = 0; l < layers_.size(); ++l)
        {
            const auto& layer = layers_[l];
            acts_[l + 1].assign(layer.out(), 0.0);
            affine(layer.weight, acts_[l], layer.bias, acts_[l + 1]);
            if (l + 1 < layers_.size())
                for (double& v : acts_[l + 1])
                    v = std::tanh(v);
        }
        cached_ = true;
        return acts_.back();
    }

    Vector backward(std::span<const double> upstream)
    {
        if (!cached_)
            throw std::logic_error("Mlp::backward called without a preceding forward pass");
        require(upstream.size() == output_dim(), "Mlp: upstream gradient dimension mismatch");

        Vector delta(upstream.begin(), upstream.end());
        for (std::size_t l = layers_.size(); l-- > 0;)
        {
            auto& layer = layers_[l];
            const Vector& input = acts_[l];
            for (std::size_t r = 0; r < layer.out(); ++r)
            {
                const double d = delta[r];
                layer.grad_bias[r] += d;
                if (d == 0.0)
                    continue;
                double* g = layer.grad_weight.data.data() + r * layer.in();
                for (std::size_t c = 0; c < layer.in(); ++c)
                    g[c] += d * input[c];
            }
            Vector prev(layer.in(), 0.0);
            for (std::size_t r = 0; r < layer.out(); ++r)
            {
                const double d = delta[r];
                if (d == 0.0)
                    continue;
                const double* w = layer.weight.data.data() + r * layer.in();
                for (std::size_t c = 0; c < layer.in(); ++c)
                    prev[c] += w[c] * d;
            }
            if (l > 0)
                for (std::size_t c = 0; c < prev.size(); ++c)
                    prev[c] *= 1.0 - input[c] * input[c]; // input is tanh output of layer l-1
            delta.swap(prev);
        }
        cached_ = false;
        return delta;
    }

    void zero_grad()
    {
        for (auto& layer : layers_)
        {
            std::fill(layer.grad_weight.data.begin(), layer.grad_weight.data.end(), 0.0);
            std::fill(layer.grad_bias.begin(), layer.grad_bias.end(), 0.0);
        }
    }

    void collect_tensors(const std::string& prefix, std::vector<TensorRef>& out)
    {
        for (std::size_t l = 0; l < layers_.size(); ++l)
        {
            auto& layer = layers_[l];
            const std::string base = prefix + ".layer" + std::to_string(l);
            out.push_back({base + ".weight", layer.weight.data, layer.grad_weight.data, {layer.out(), layer.in()}});
            out.push_back({base + ".bias", layer.bias, layer.grad_bias, {layer.out()}});
        }
    }

private:
    std::vector<DenseLayer> layers_;
    std::vector<Vector> acts_;
    bool cached_ = false;
};

} // namespace dpl
