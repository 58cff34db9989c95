#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <utility>

namespace ccd {

using Seed = std::uint64_t;
using Rng = std::mt19937_64;

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed of the stream with the given index under `master`. Stream i is seeded
// with mix64(mix64(master) + i * golden); streams are independent of how work
// is split across threads.
constexpr Seed derive_seed(Seed master, std::uint64_t stream) noexcept {
  return mix64(mix64(master) + (stream + 1) * 0x9E3779B97F4A7C15ULL);
}

// Counter-based draws: a pure function of (key, domain, index). Used where a
// random quantity must be attached to a fixed object (an edge, a node) rather
// than to the order in which the simulation happens to visit it, so that runs
// with different rates share common random numbers.
class CounterRng {
 public:
  explicit constexpr CounterRng(Seed key) noexcept : key_(mix64(key)) {}

  constexpr std::uint64_t bits(std::uint64_t domain, std::uint64_t index) const noexcept {
    return mix64(mix64(key_ ^ (domain * 0xD6E8FEB86659FD93ULL)) + index);
  }

  // Uniform on the open interval (0, 1).
  double uniform(std::uint64_t domain, std::uint64_t index) const noexcept {
    return (static_cast<double>(bits(domain, index) >> 11) + 0.5) * 0x1.0p-53;
  }

  // Unit-rate exponential.
  double exponential(std::uint64_t domain, std::uint64_t index) const noexcept {
    return -std::log(uniform(domain, index));
  }

  std::uint64_t below(std::uint64_t domain, std::uint64_t index, std::uint64_t n) const noexcept {
    return static_cast<std::uint64_t>(uniform(domain, index) * static_cast<double>(n)) % n;
  }

 private:
  Seed key_;
};

// Uniform double in [0, 1) with 53 random bits; stable across standard libraries.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Unbiased integer in [0, n), n > 0.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

template <class T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[uniform_below(rng, i)]);
  }
}

}  // namespace ccd
