#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace climreg {

/// Deterministic random generator with derivable substreams.
///
/// Wraps std::mt19937_64 (whose output sequence is fully specified by the
/// standard) and hand-rolls all distributions, so the produced values are
/// identical across standard libraries and platforms. All randomness in the
/// project flows through instances of this class; there is no global state.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : base_seed_(seed), engine_(mix(seed, 0x9e3779b97f4a7c15ULL)) {}

    /// Independent substream derived from the base seed and a stream id.
    /// Does not depend on how much has been drawn from this generator.
    Rng fork(std::uint64_t stream) const { return Rng(mix(base_seed_, stream)); }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), n >= 1. Rejection sampling, no modulo bias.
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n <= 1) {
            return 0;
        }
        const std::uint64_t threshold = (0ULL - n) % n; // 2^64 mod n
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) {
                return r % n;
            }
        }
    }

    /// Standard normal via Box-Muller (cosine branch only).
    double normal() {
        constexpr double two_pi = 6.283185307179586476925286766559;
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        // splitmix64 finalizer over the combined words.
        std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t base_seed_;
    std::mt19937_64 engine_;
};

} // namespace climreg
