#pragma once

#include "ambest/common.hpp"

#include <cmath>
#include <cstdint>

namespace ambest {

/// SplitMix64 finalizer, full 64-bit avalanche.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Counter-based Gaussian stream. Draw k is a pure function of
/// (seed, stream, k), so concurrent trials replay bit-identically and
/// never share state.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : base_(mix64(seed ^ mix64(stream ^ 0x632be59bd9b4e019ull))) {}

    /// Uniform draw in the open interval (0,1).
    double uniform(std::uint64_t k) const {
        const std::uint64_t u = mix64(base_ ^ mix64(k));
        return (static_cast<double>(u >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller on sub-draws 2k and 2k+1.
    double normal(std::uint64_t k) const {
        const double u1 = uniform(2 * k);
        const double u2 = uniform(2 * k + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

private:
    std::uint64_t base_;
};

} // namespace ambest
