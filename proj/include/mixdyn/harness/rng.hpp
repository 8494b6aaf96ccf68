#pragma once

// Portable stream RNG: std::mt19937_64 (its output sequence is fixed by the
// standard) with explicit conversions, so traces reproduce on every platform.
// uniform01: top 53 bits scaled by 2^-53. gaussian: Box-Muller, cosine branch.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace mixdyn::harness {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform01() < p; }

    double gaussian(double mean, double sigma) {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return mean + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace mixdyn::harness
