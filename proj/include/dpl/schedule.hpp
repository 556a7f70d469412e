#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "dpl/numerics.hpp"

namespace dpl
{

/// Precomputed cosine noise schedule. Tables are indexed by timestep t in
/// [0, T]; index 0 holds the boundary values (beta_0 unused, alpha_bar_0 = 1).
class NoiseSchedule
{
public:
    NoiseSchedule() = default;

    int steps() const { return static_cast<int>(betas_.size()) - 1; }

    double beta(int t) const { return betas_.at(checked(t, 1)); }
    double alpha(int t) const { return 1.0 - beta(t); }
    double alpha_bar(int t) const { return alpha_bars_.at(checked(t, 0)); }

    const std::vector<double>& betas() const { return betas_; }
    const std::vector<double>& alpha_bars() const { return alpha_bars_; }

private:
    friend NoiseSchedule build_cosine_schedule(int, double, double, double);

    std::size_t checked(int t, int lo) const
    {
        require(t >= lo && t <= steps(), "timestep " + std::to_string(t) + " outside [" + std::to_string(lo) +
                                             ", " + std::to_string(steps()) + "]");
        return static_cast<std::size_t>(t);
    }

    std::vector<double> betas_;
    std::vector<double> alpha_bars_;
};

/// Cosine schedule alpha_bar(t) = f(t)/f(0), f(t) = cos^2(((t/T + s)/(1 + s)) pi/2).
/// Betas are clipped after derivation and alpha_bar is rebuilt from the clipped
/// betas, so the stored tables always satisfy alpha_bar_t = prod (1 - beta_i).
inline NoiseSchedule build_cosine_schedule(int steps, double offset = 0.008, double clip_lo = 0.001,
                                           double clip_hi = 0.1)
{
    require(steps >= 1, "build_cosine_schedule: T must be >= 1");
    require(clip_lo > 0.0 && clip_lo < clip_hi && clip_hi < 1.0,
            "build_cosine_schedule: need 0 < clip_lo < clip_hi < 1");
    require(offset >= 0.0, "build_cosine_schedule: offset must be non-negative");

    const double total = steps;
    auto f = [&](int t) {
        const double c = std::cos(((t / total + offset) / (1.0 + offset)) * std::numbers::pi / 2.0);
        return c * c;
    };
    const double f0 = f(0);

    NoiseSchedule s;
    s.betas_.assign(steps + 1, 0.0);
    s.alpha_bars_.assign(steps + 1, 1.0);
    double prev_raw = 1.0;
    for (int t = 1; t <= steps; ++t)
    {
        const double raw = f(t) / f0;
        s.betas_[t] = std::clamp(1.0 - raw / prev_raw, clip_lo, clip_hi);
        s.alpha_bars_[t] = s.alpha_bars_[t - 1] * (1.0 - s.betas_[t]);
        prev_raw = raw;
    }
    return s;
}

struct PosteriorCoefficients
{
    double coef_p0 = 0.0;
    double coef_pt = 0.0;
    double sigma = 0.0;
};

/// Coefficients of q(p_{t-1} | p_t, p_0): mean = coef_p0 * p0 + coef_pt * p_t,
/// standard deviation sigma (posterior variance, so sigma_1 = 0).
inline PosteriorCoefficients posterior_coefficients(const NoiseSchedule& sched, int t)
{
    require(t >= 1 && t <= sched.steps(), "posterior_coefficients: timestep out of range");
    const double beta = sched.beta(t);
    const double ab_t = sched.alpha_bar(t);
    const double ab_prev = sched.alpha_bar(t - 1);
    const double denom = 1.0 - ab_t;
    PosteriorCoefficients c;
    // At t = 1, 1 - alpha_bar_1 == beta_1 analytically; avoid the rounding in 1 - (1 - beta).
    c.coef_p0 = t == 1 ? 1.0 : std::sqrt(ab_prev) * beta / denom;
    c.coef_pt = std::sqrt(1.0 - beta) * (1.0 - ab_prev) / denom;
    c.sigma = std::sqrt(beta * (1.0 - ab_prev) / denom);
    return c;
}

} // namespace dpl
