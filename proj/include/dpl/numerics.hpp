#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpl
{

using Vector = std::vector<double>;

/// Dense row-major matrix.
struct Matrix
{
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

inline void require(bool condition, const std::string& message)
{
    if (!condition)
        throw std::invalid_argument(message);
}

inline void require_same_size(std::span<const double> a, std::span<const double> b, const char* what)
{
    if (a.size() != b.size())
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()) + ")");
}

inline double dot(std::span<const double> a, std::span<const double> b)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += a[i] * b[i];
    return acc;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double squared_distance(std::span<const double> a, std::span<const double> b)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

inline bool all_finite(std::span<const double> v)
{
    for (double x : v)
        if (!std::isfinite(x))
            return false;
    return true;
}

/// out = W x + b
inline void affine(const Matrix& w, std::span<const double> x, std::span<const double> b, std::span<double> out)
{
    for (std::size_t r = 0; r < w.rows; ++r)
    {
        const double* wr = w.data.data() + r * w.cols;
        double acc = b[r];
        for (std::size_t c = 0; c < w.cols; ++c)
            acc += wr[c] * x[c];
        out[r] = acc;
    }
}

inline double sigmoid(double x)
{
    if (x >= 0.0)
        return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

constexpr std::uint64_t mix64(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Counter-based random stream. Output n is a pure function of
/// (seed, stream_id, n), so streams can be created in any order on any
/// thread and still produce the same numbers.
class RngStream
{
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id), key_(mix64(seed ^ mix64(stream_id + 0x9E3779B97F4A7C15ULL)))
    {
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }
    std::uint64_t cursor() const { return counter_; }
    void set_cursor(std::uint64_t c) { counter_ = c; }

    std::uint64_t next_u64() { return mix64(key_ + mix64(counter_++)); }

    /// Uniform on (0, 1].
    double uniform_open0() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer on [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi)
    {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        // Lemire-style multiply-shift; bias is < 2^-32 for the spans used here.
        const auto hi_bits = static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * span) >> 64);
        return lo + static_cast<std::int64_t>(hi_bits);
    }

    double normal()
    {
        double a = 0.0, b = 0.0;
        normal_pair(a, b);
        return a;
    }

    void fill_normal(std::span<double> out, double scale = 1.0)
    {
        std::size_t i = 0;
        for (; i + 1 < out.size(); i += 2)
        {
            double a = 0.0, b = 0.0;
            normal_pair(a, b);
            out[i] = scale * a;
            out[i + 1] = scale * b;
        }
        if (i < out.size())
            out[i] = scale * normal();
    }

private:
    void normal_pair(double& a, double& b)
    {
        // Marsaglia polar method
        double x, y, s;
        do
        {
            x = 2.0 * uniform(0.0, 1.0) - 1.0;
            y = 2.0 * uniform(0.0, 1.0) - 1.0;
            s = x * x + y * y;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        a = x * f;
        b = y * f;
    }

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Stream ids are namespaced by purpose so that, e.g., the episode stream and
/// the enhancement stream of iteration i never coincide.
enum class StreamDomain : std::uint64_t
{
    class_bank = 1,
    train_episode = 2,
    train_enhance = 3,
    eval_episode = 4,
    eval_enhance = 5,
    init = 6,
};

inline RngStream derive_stream(std::uint64_t seed, StreamDomain domain, std::uint64_t index)
{
    return RngStream(seed, (static_cast<std::uint64_t>(domain) << 48) ^ index);
}

inline Vector sample_standard_normal(RngStream& rng, std::size_t dim)
{
    require(dim >= 1, "sample_standard_normal: dim must be >= 1");
    Vector v(dim);
    rng.fill_normal(v);
    return v;
}

// ---------------------------------------------------------------------------
// Descriptive statistics
// ---------------------------------------------------------------------------

struct VectorStats
{
    double mean = 0.0;
    double stddev = 0.0; // population (divide by D)
    double max_abs_dev = 0.0;
    double mean_abs_dev = 0.0;
};

inline VectorStats vector_stats(std::span<const double> v)
{
    require(!v.empty(), "vector_stats: empty vector");
    const auto n = static_cast<double>(v.size());
    VectorStats s;
    for (double x : v)
        s.mean += x;
    s.mean /= n;
    double ss = 0.0;
    for (double x : v)
    {
        const double d = x - s.mean;
        ss += d * d;
        s.mean_abs_dev += std::abs(d);
        s.max_abs_dev = std::max(s.max_abs_dev, std::abs(d));
    }
    s.stddev = std::sqrt(ss / n);
    s.mean_abs_dev /= n;
    return s;
}

} // namespace dpl
