#include "prunelab/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace prunelab {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream) {
    // Decorrelate (seed, stream) pairs before entering counter mode.
    base_ = mix64(seed + kGolden) ^ mix64(stream + 0x5851F42D4C957F2Dull);
}

std::uint64_t RngStream::next_u64() {
    return mix64(base_ + (++counter_) * kGolden);
}

double RngStream::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // u1 in (0, 1] keeps the log finite.
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = next_unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

double RngStream::next_range(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
}

std::uint64_t RngStream::next_below(std::uint64_t n) {
    if (n == 0)
        throw std::invalid_argument("next_below: n must be positive");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v = next_u64();
    while (v >= limit)
        v = next_u64();
    return v % n;
}

RngStream RngStream::substream(std::uint64_t tag) const {
    return RngStream(seed_, mix64(stream_ + kGolden) ^ mix64(tag + 0xD6E8FEB86659FD93ull));
}

std::vector<int> random_permutation(int n, RngStream& rng) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        perm[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    return perm;
}

} // namespace prunelab
