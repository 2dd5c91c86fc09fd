#pragma once

#include "tagshield/bigint.hpp"
#include "tagshield/random.hpp"
#include "tagshield/shared_key.hpp"
#include "tagshield/triangular_codec.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tagshield {

struct LengthMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Fixed-length bit string. Bit i carries weight 2^i when read as an integer.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t size) : bits_(size, 0) {}

  static BitVector from_integer(const BigInt& value, std::size_t size);
  /// Parses a "01..." string written most-significant bit first.
  static BitVector from_string(const std::string& msb_first);

  BigInt to_integer() const;
  std::string to_string() const;

  std::size_t size() const { return bits_.size(); }
  bool get(std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }

  friend bool operator==(const BitVector&, const BitVector&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

std::size_t hamming_distance(const BitVector& a, const BitVector& b);

using Nonce = std::array<std::uint8_t, 16>;

Nonce random_nonce(RandomSource& rng);
std::string nonce_to_hex(const Nonce& nonce);
Nonce nonce_from_hex(const std::string& hex);

/// One-time pad of exactly B bits.
struct PadKey {
  BitVector bits;
};

/// c_i = u_i XOR k_i. Self-inverse.
BitVector xor_pad(const BitVector& data, const PadKey& key);

/// Expands (K, nonce) into a B-bit pad: SHA-256 over a length-prefixed
/// encoding of K, the nonce and a 32-bit block counter, truncated to B bits.
/// A shorter pad is always a prefix of a longer one for the same inputs.
PadKey derive_pad(const SharedKey& key, const Nonce& nonce, std::size_t bits);

/// Publishable record: the enciphered code plus what a key holder needs to open it.
struct TagRecord {
  std::string manifest_id;
  Nonce nonce{};
  std::size_t bit_budget = 0;
  BitVector cipher_bits;

  /// {"manifest_id": ..., "nonce": 32 hex, "b_budget": B, "cipher": hex}
  std::string to_json_line() const;
  static TagRecord from_json_line(const std::string& line);
};

/// encode_with_budget, then XOR with a pad derived from K and a fresh nonce.
TagRecord seal_tag(const HiddenTag& tag, std::size_t bit_budget, const SharedKey& key,
                   const std::string& manifest_id, RandomSource& rng);

/// Inverse of seal_tag. A wrong key is not detected: it yields some other
/// syntactically valid tag.
BigInt open_tag(const TagRecord& record, const SharedKey& key);

}  // namespace tagshield
