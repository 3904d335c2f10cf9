#pragma once

#include <cstdint>
#include <vector>

namespace prunelab {

/// Counter-based SplitMix64 stream.
///
/// Every draw is a pure function of (seed, stream, counter), so two streams
/// built from the same (seed, stream) replay the same sequence and distinct
/// stream ids never share state. Workers each own their own stream id.
/// Integer output is identical on every platform; Gaussian draws go through
/// Box-Muller and therefore depend on libm rounding.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64();

    /// Uniform in [0, 1), 53 random bits.
    double next_unit();

    /// Standard normal (Box-Muller, second value cached).
    double next_gaussian();

    /// Uniform in [lo, hi).
    double next_range(double lo, double hi);

    /// Unbiased uniform integer in [0, n), n >= 1.
    std::uint64_t next_below(std::uint64_t n);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    /// Independent child stream addressed by (seed, hash(stream, tag)).
    RngStream substream(std::uint64_t tag) const;

private:
    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    std::uint64_t base_ = 0;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Fisher-Yates permutation of {0, ..., n-1}.
std::vector<int> random_permutation(int n, RngStream& rng);

} // namespace prunelab
