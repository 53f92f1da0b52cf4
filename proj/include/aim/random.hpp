#pragma once

#include <cstdint>
#include <random>

namespace aim {

/// SplitMix64 finalizer. All derived seeds in the project go through this
/// function so runs are reproducible from a single master seed.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Stream tags keep seeds for unrelated purposes (worlds, RR sampling,
/// tuner proposals) from colliding when derived from the same master seed.
enum class Stream : std::uint64_t {
  World = 0x574F524C44ULL,
  RRIndex = 0x5252494E44ULL,
  Pilot = 0x50494C4F54ULL,
  Instance = 0x494E5354ULL,
  Tuner = 0x54554E45ULL,
};

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(mix64(master) ^ mix64(index + 0x632BE59BD9B4E019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                                    std::uint64_t index) noexcept {
  return derive_seed(derive_seed(master, static_cast<std::uint64_t>(stream)), index);
}

/// Seed of the i-th possible world under a master seed.
constexpr std::uint64_t world_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return derive_seed(master, Stream::World, index);
}

/// Thin wrapper over mt19937_64. Distributions are computed by hand because
/// the standard library's distribution algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, bound) by rejection (bound > 0).
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % bound;
  }

  /// Uniform integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace aim
