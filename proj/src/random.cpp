#include "tagshield/random.hpp"

#include <openssl/rand.h>

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

namespace tagshield {

void RandomSource::fill(std::span<std::uint8_t> out) {
  std::size_t i = 0;
  while (i < out.size()) {
    std::uint64_t w = next_u64();
    for (int j = 0; j < 8 && i < out.size(); ++j, ++i) {
      out[i] = static_cast<std::uint8_t>(w >> (8 * j));
    }
  }
}

std::uint64_t SystemRandom::next_u64() {
  std::uint8_t buf[8];
  if (RAND_bytes(buf, sizeof buf) != 1) throw std::runtime_error("system entropy source failed");
  std::uint64_t w;
  std::memcpy(&w, buf, sizeof w);
  return w;
}

std::uint64_t uniform_below(RandomSource& rng, std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_below: zero bound");
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound + 1) % bound;
  for (;;) {
    std::uint64_t w = rng.next_u64();
    if (w <= limit) return w % bound;
  }
}

BigInt random_bits(RandomSource& rng, std::size_t bits) {
  if (bits == 0) return 0;
  std::vector<std::uint8_t> bytes(bytes_for_bits(bits));
  rng.fill(bytes);
  if (bits % 8 != 0) bytes[0] &= static_cast<std::uint8_t>((1u << (bits % 8)) - 1);
  return from_bytes_be(bytes);
}

BigInt uniform_in(RandomSource& rng, const BigInt& lo, const BigInt& hi) {
  if (lo > hi) throw std::invalid_argument("uniform_in: empty range");
  const BigInt span = hi - lo + 1;
  const std::size_t bits = bit_length(span - 1);
  for (;;) {
    BigInt r = random_bits(rng, bits);
    if (r < span) return lo + r;
  }
}

double uniform_unit(RandomSource& rng) {
  return static_cast<double>(rng.next_u64() >> 11) * 0x1.0p-53;
}

double standard_normal(RandomSource& rng) {
  for (;;) {
    double u = 2.0 * uniform_unit(rng) - 1.0;
    double v = 2.0 * uniform_unit(rng) - 1.0;
    double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace tagshield
