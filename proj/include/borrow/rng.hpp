#pragma once
// Deterministic random streams. Every replicate gets its own generator,
// derived from (seed, stream tag, index), so results do not depend on the
// order or thread in which replicates run.

#include <cstdint>
#include <random>

namespace borrow {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Stream tags keep sub-streams of unrelated purposes apart.
enum class StreamTag : std::uint64_t {
    Bootstrap = 1,
    Simulation = 2,
    Oracle = 3,
};

inline Rng substream(std::uint64_t seed, StreamTag tag, std::uint64_t index) {
    const std::uint64_t a = splitmix64(seed);
    const std::uint64_t b = splitmix64(a ^ static_cast<std::uint64_t>(tag));
    const std::uint64_t c = splitmix64(b + index);
    std::seed_seq seq{static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(seed)};
    return Rng(seq);
}

}  // namespace borrow
