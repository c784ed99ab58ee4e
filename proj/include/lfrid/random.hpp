#pragma once

#include <cstdint>
#include <random>

namespace lfrid {

/// Seeded uniform generator with a fully pinned-down algorithm.
///
/// std::mt19937_64 output is specified by the standard, but the standard
/// distribution adaptors are not; mapping raw 64-bit draws to doubles here
/// keeps generated datasets bit-identical across compilers and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1): top 53 bits of the raw draw scaled by 2^-53.
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on [a, b).
    double uniform(double a, double b) { return a + (b - a) * unit(); }

    /// Standard normal via Box-Muller on two unit draws.
    double gaussian() {
        double u1 = unit();
        double u2 = unit();
        while (u1 <= 0.0) u1 = unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

} // namespace lfrid
