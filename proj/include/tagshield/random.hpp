#pragma once

#include "tagshield/bigint.hpp"

#include <cstdint>
#include <random>
#include <span>

namespace tagshield {

/// Source of uniformly distributed 64-bit words. Every randomized operation in
/// the library draws through this interface so runs can be replayed from a seed.
class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual std::uint64_t next_u64() = 0;

  void fill(std::span<std::uint8_t> out);
};

/// OS-backed cryptographically secure generator.
class SystemRandom final : public RandomSource {
 public:
  std::uint64_t next_u64() override;
};

/// Deterministic generator for tests and experiments. mt19937_64 has a fully
/// specified output sequence, so a seed reproduces byte-identical runs on any
/// conforming platform.
class SeededRandom final : public RandomSource {
 public:
  explicit SeededRandom(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next_u64() override { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Uniform integer in [0, bound). bound must be positive.
std::uint64_t uniform_below(RandomSource& rng, std::uint64_t bound);

/// Uniform integer with exactly `bits` random bits, i.e. in [0, 2^bits).
BigInt random_bits(RandomSource& rng, std::size_t bits);

/// Uniform integer in the closed range [lo, hi]. Requires lo <= hi.
BigInt uniform_in(RandomSource& rng, const BigInt& lo, const BigInt& hi);

/// Uniform double in [0, 1) with 53 bits of precision.
double uniform_unit(RandomSource& rng);

/// Standard normal deviate (Marsaglia polar method).
double standard_normal(RandomSource& rng);

/// SplitMix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix64(std::uint64_t x);

}  // namespace tagshield
