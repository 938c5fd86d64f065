#pragma once

#include <cstdint>
#include <random>

namespace sbl {

using Rng = std::mt19937_64;

/// Independent random streams. Each consumer of randomness draws from its own
/// stream so that, e.g., changing the probe count never perturbs the
/// simulated data.
enum class Stream : std::uint64_t {
  Dictionary = 1,
  Signal = 2,
  Noise = 3,
  Probes = 4,
  Sweep = 5,
  Diagnostics = 6,
};

/// Mixes (seed, stream, a, b) into a 64-bit seed with SplitMix64 finalizers.
std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t a = 0,
                          std::uint64_t b = 0) noexcept;

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t a = 0,
                    std::uint64_t b = 0) {
  return Rng(derive_seed(seed, stream, a, b));
}

}  // namespace sbl
