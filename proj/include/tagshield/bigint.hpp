#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tagshield {

/// Arbitrary-precision integer used for tags, codes and group elements.
using BigInt = mpz_class;

/// Number of significant bits; 0 for zero.
std::size_t bit_length(const BigInt& x);

/// floor(sqrt(x)) for x >= 0.
BigInt isqrt(const BigInt& x);

/// Big-endian magnitude bytes, left-padded with zeros to at least `min_bytes`.
std::vector<std::uint8_t> to_bytes_be(const BigInt& x, std::size_t min_bytes = 0);
BigInt from_bytes_be(const std::vector<std::uint8_t>& bytes);

/// Lowercase big-endian hex, zero-padded to `min_bytes` bytes (2 chars each).
/// Zero with min_bytes == 0 encodes as "00".
std::string to_hex(const BigInt& x, std::size_t min_bytes = 0);

/// Parses hex (no prefix, either case). Throws std::invalid_argument on bad input.
BigInt from_hex(std::string_view hex);

std::string to_hex(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> bytes_from_hex(std::string_view hex);

inline std::size_t bytes_for_bits(std::size_t bits) { return (bits + 7) / 8; }

}  // namespace tagshield
