#pragma once

#include <cstdint>

#include "pmerge/normal.hpp"

namespace pmerge {

// Counter-based generator: each output is a stateless hash of
// (seed, stream, counter) built from the splitmix64 finalizer. Substreams
// keyed by (seed, stream) are independent and reproducible across platforms
// and thread counts, which is the reproducibility contract of the
// simulation lab.
class CounterRng {
 public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(mix(seed + 0x9E3779B97F4A7C15ULL) ^ mix(stream + 0xD1B54A32D192ED03ULL))) {}

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

    /// Uniform draw in the open interval (0,1).
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via inverse CDF (branch-free determinism).
    double next_normal() { return norm_quantile(next_uniform()); }

    /// Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        // 128-bit multiply rejection-free scaling; bias < 2^-64, irrelevant here
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

 private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace pmerge
