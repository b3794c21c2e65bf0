#pragma once

#include <cstdint>
#include <string_view>

namespace mtp::numerics {

/// Counter-based generator: draw i of stream s under seed k is a pure function
/// of (k, s, i). Streams are derived from names, so parameter initialization
/// does not depend on the order in which parameters are created.
class Rng {
   public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t counter = 0)
        : seed_(seed), stream_(stream), counter_(counter) {}

    /// 64-bit FNV-1a of `name`.
    static std::uint64_t stream_id(std::string_view name);

    /// Independent stream keyed by `name` under the same seed.
    Rng split(std::string_view name) const { return Rng(seed_, stream_id(name) ^ (stream_ * 0x9E3779B97F4A7C15ULL)); }

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    /// Standard normal via Box-Muller (two draws per sample, no caching).
    double normal();
    /// Unbiased integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }
    std::uint64_t counter() const { return counter_; }

   private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_;
};

}  // namespace mtp::numerics
