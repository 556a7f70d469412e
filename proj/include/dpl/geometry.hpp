#pragma once

#include <array>
#include <cmath>

#include "dpl/mlp.hpp"
#include "dpl/numerics.hpp"
#include "dpl/prototype.hpp"

namespace dpl
{

/// Feature-statistic proxies for location and shape of the class.
struct GeometricConstraints
{
    double spatial_x = 0.0;   // tanh(mean) / 2, in [-0.5, 0.5]
    double spatial_y = 0.0;   // tanh(std) / 2, in [0, 0.5]
    double compactness = 1.0; // exp(-std), in (0, 1]
    double elongation = 0.0;  // max|p - mean| / (mean|p - mean| + eps), in [0, D]

    std::array<double, 4> raw() const { return {spatial_x, spatial_y, compactness, elongation}; }
};

using NormalizedConstraints = std::array<double, 4>;

struct SpatialCondition
{
    Vector values;
};

inline constexpr double default_elongation_eps = 1e-8;

inline GeometricConstraints compute_constraints(std::span<const double> p, double eps = default_elongation_eps)
{
    require(!p.empty(), "compute_constraints: empty prototype");
    require(eps > 0.0, "compute_constraints: eps must be positive");
    const VectorStats s = vector_stats(p);
    GeometricConstraints g;
    g.spatial_x = std::tanh(s.mean) * 0.5;
    g.spatial_y = std::tanh(s.stddev) * 0.5;
    g.compactness = std::exp(-s.stddev);
    g.elongation = s.max_abs_dev / (s.mean_abs_dev + eps);
    return g;
}

inline GeometricConstraints compute_constraints(const Prototype& p, double eps = default_elongation_eps)
{
    return compute_constraints(p.vector, eps);
}

/// Maps each component to [0, 1] using its analytic range: spatial terms
/// shift by +0.5, compactness is already in (0, 1], elongation is bounded by D.
inline NormalizedConstraints normalize_constraints(const GeometricConstraints& g, std::size_t dim)
{
    require(dim >= 1, "normalize_constraints: D must be >= 1");
    auto unit = [](double v) { return std::clamp(v, 0.0, 1.0); };
    return {unit(g.spatial_x + 0.5), unit(g.spatial_y + 0.5), unit(g.compactness),
            std::min(g.elongation / static_cast<double>(dim), 1.0)};
}

/// f_enc: R^{D+4} -> R^D, one tanh hidden layer of width D.
class ConditionEncoder
{
public:
    ConditionEncoder() = default;
    explicit ConditionEncoder(std::size_t dim) : dim_(dim), mlp_({dim + 4, dim, dim}) {}

    std::size_t dim() const { return dim_; }
    Mlp& mlp() { return mlp_; }
    const Mlp& mlp() const { return mlp_; }

    static Vector concat(std::span<const double> p0, const NormalizedConstraints& g)
    {
        Vector in(p0.begin(), p0.end());
        in.insert(in.end(), g.begin(), g.end());
        return in;
    }

    void check(std::span<const double> p0) const
    {
        require(p0.size() == dim_, "ConditionEncoder: prototype dimension " + std::to_string(p0.size()) +
                                       " does not match encoder dimension " + std::to_string(dim_));
    }

private:
    std::size_t dim_ = 0;
    Mlp mlp_;
};

inline SpatialCondition encode_condition(const ConditionEncoder& enc, std::span<const double> p0,
                                         const NormalizedConstraints& g_norm)
{
    enc.check(p0);
    return {enc.mlp().evaluate(ConditionEncoder::concat(p0, g_norm))};
}

/// Same as encode_condition but caches activations for a following backward().
inline SpatialCondition encode_condition_for_training(ConditionEncoder& enc, std::span<const double> p0,
                                                      const NormalizedConstraints& g_norm)
{
    enc.check(p0);
    return {enc.mlp().forward(ConditionEncoder::concat(p0, g_norm))};
}

/// Full conditioning path: statistics -> normalization -> encoder.
inline SpatialCondition spatial_condition(const ConditionEncoder& enc, std::span<const double> p0)
{
    return encode_condition(enc, p0, normalize_constraints(compute_constraints(p0), p0.size()));
}

inline constexpr double default_alpha_scale = 0.1;

/// alpha_t = scale * (1 - t/T): strongest guidance at the start of denoising.
inline double injection_strength(int t, int steps, double scale = default_alpha_scale)
{
    require(steps >= 1, "injection_strength: T must be >= 1");
    require(t >= 0 && t <= steps, "injection_strength: t must lie in [0, T]");
    return scale * (1.0 - static_cast<double>(t) / steps);
}

} // namespace dpl
