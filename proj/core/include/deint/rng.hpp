// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace deint {

/// Deterministic random source. Wraps mt19937_64 but draws uniforms and
/// gaussians itself so that a given seed produces the same values on every
/// platform (std::*_distribution output is implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : Rng(mix(seed), Tag{}) {}

    /// Child stream keyed by (this stream's seed, salt words). Streams for
    /// different salts are statistically independent; re-deriving with the
    /// same salts gives the same stream.
    Rng substream(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const {
        std::uint64_t s = seed_material_;
        s = mix(s ^ mix(a));
        s = mix(s ^ mix(b + 0x9e3779b97f4a7c15ull));
        s = mix(s ^ mix(c + 0x3c6ef372fe94f82bull));
        return Rng(s, Tag{});
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi]; degenerate intervals collapse to lo.
    double uniform(double lo, double hi) {
        if (lo > hi) throw std::invalid_argument("Rng::uniform: lo > hi");
        return lo + (hi - lo) * uniform01();
    }

    /// Uniform integer in [lo, hi] inclusive.
    long uniform_int(long lo, long hi) {
        if (lo > hi) throw std::invalid_argument("Rng::uniform_int: lo > hi");
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        // rejection sampling keeps the draw exactly uniform
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return lo + static_cast<long>(v % span);
    }

    bool bernoulli(double p) { return uniform01() < p; }

    /// N(mean, sigma^2) via Box-Muller; the paired value is cached.
    double gaussian(double mean = 0.0, double sigma = 1.0) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + sigma * spare_;
        }
        double u1, u2;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        u2 = uniform01();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double two_pi = 6.283185307179586476925286766559;
        spare_ = mag * std::sin(two_pi * u2);
        have_spare_ = true;
        return mean + sigma * mag * std::cos(two_pi * u2);
    }

private:
    struct Tag {};
    Rng(std::uint64_t mixed, Tag) : engine_(mixed), seed_material_(mixed) {}

    // splitmix64 finalizer
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    std::mt19937_64 engine_;
    std::uint64_t seed_material_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace deint
