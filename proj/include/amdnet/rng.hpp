#pragma once

#include <cstdint>

namespace amdnet {

/// Deterministic 64-bit generator (splitmix64). The whole pipeline runs on
/// this one primitive so results are bit-reproducible across platforms and
/// standard-library versions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0,1) with 53 significant bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0,n). Integer-only scaling, no float rounding hazards.
    std::uint64_t uniform_int(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Derives an independent stream from (seed, a, b), e.g. per (epoch, sample).
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
        Rng r(seed);
        std::uint64_t x = r.next_u64() ^ (a * 0x9E3779B97F4A7C15ULL);
        Rng r2(x);
        return r2.next_u64() ^ (b * 0xC2B2AE3D27D4EB4FULL);
    }

private:
    std::uint64_t state_;
};

}  // namespace amdnet
