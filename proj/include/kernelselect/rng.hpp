#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "kernelselect/common.hpp"

namespace ksel {

// Counter-based generator. Draw number k of stream s under seed S is
//
//   z = S + (s * 2^32 + k + 1) * 0x9E3779B97F4A7C15   (mod 2^64)
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   z =  z ^ (z >> 31)
//
// i.e. the SplitMix64 output function evaluated at an explicit counter, so any
// implementation can reproduce a given draw without replaying the sequence.
// Uniforms use the top 53 bits; normals use Box-Muller on two consecutive uniforms
// (cosine branch only, one normal per pair).
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint32_t stream = 0) : seed_(seed), stream_(stream) {}

    static std::uint64_t mix(std::uint64_t seed, std::uint64_t counter) {
        std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() {
        return mix(seed_, (static_cast<std::uint64_t>(stream_) << 32) + counter_++);
    }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        // 1 - u keeps the log argument in (0, 1].
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Complex standard normal: E|z|^2 = 1.
    Complex complex_normal() {
        const double re = normal();
        const double im = normal();
        return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
    }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t seed_;
    std::uint32_t stream_;
    std::uint64_t counter_ = 0;
};

}  // namespace ksel
