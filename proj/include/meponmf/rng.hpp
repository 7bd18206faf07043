#pragma once

#include <cmath>
#include <cstdint>

#include "meponmf/common.hpp"

namespace meponmf {

// Counter-based SplitMix64. Output i of a stream with seed s is
//   mix(s + (i+1) * 0x9E3779B97F4A7C15)
// with the standard SplitMix64 finalizer as mix(). The generator is a pure
// function of (seed, counter), so per-column substreams can be derived and
// consumed independently of worker count or call order.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    /// Deterministic substream seed for (seed, tag), e.g. one stream per column.
    static std::uint64_t substream(std::uint64_t seed, std::uint64_t tag) {
        return mix(seed + (tag + 1) * kGolden);
    }

    std::uint64_t next_u64() { return mix(seed_ + (++counter_) * kGolden); }

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [0, hi).
    double uniform(double hi) { return uniform01() * hi; }

    /// Standard normal via Box-Muller (cosine branch; two uniforms per draw).
    double normal() {
        double u1 = 1.0 - uniform01();  // (0, 1]
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    /// Gamma(shape, scale) via the Marsaglia-Tsang squeeze method.
    double gamma(double shape, double scale) {
        if (!(shape > 0.0) || !(scale > 0.0))
            throw DomainError("gamma: shape and scale must be positive");
        if (shape < 1.0) {
            // Boost: Gamma(a) = Gamma(a+1) * U^{1/a}
            double u = 1.0 - uniform01();
            return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double t = 1.0 + c * x;
            if (t <= 0.0) continue;
            double v = t * t * t;
            double u = 1.0 - uniform01();  // (0, 1], log-safe
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v))
                return d * v * scale;
        }
    }

    /// Uniformly distributed unit vector (normalized Gaussian), dim >= 1.
    Vector unit_vector(Index dim) {
        Vector v(dim);
        for (;;) {
            for (Index i = 0; i < dim; ++i) v[i] = normal();
            double n = v.norm();
            if (n > 1e-12) return v / n;
        }
    }

  private:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
    static constexpr double kPi = 3.141592653589793238462643383279502884;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

}  // namespace meponmf
