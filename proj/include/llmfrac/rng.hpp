#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace llmfrac {

/// SplitMix64 generator (Steele, Lea, Flood 2014). Every stochastic operation
/// in the library draws from this generator so that results are reproducible
/// from a single 64-bit seed, independent of platform and thread count.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Unbiased integer in [0, n) via rejection sampling. n must be > 0.
    std::uint64_t uniform_below(std::uint64_t n) noexcept {
        const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            std::uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

private:
    std::uint64_t state_;
};

std::uint64_t fnv1a64(std::string_view s) noexcept;

/// Child seed derivation. Parallel jobs (bootstrap replicates, trend buckets,
/// calibration grid cells) each get derive_seed(parent, label-or-index), so a
/// job's stream depends only on the parent seed and its own identity.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

/// k distinct indices drawn uniformly from [0, n), returned sorted ascending.
/// Partial Fisher-Yates on an index array; deterministic given the seed.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed);

/// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& v, SplitMix64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.uniform_below(i));
        using std::swap;
        swap(v[i - 1], v[j]);
    }
}

}  // namespace llmfrac
