#pragma once

// Randomized tag encoding over triangular-number slots.
//
// The interval [p_k, p_{k+1}) between consecutive triangular numbers
// p_k = k(k+1)/2 has exactly k+1 positions. A tag n <= k is stored at offset n
// inside the slot of a randomly chosen k, so the same tag has many codes while
// decoding needs only the code itself: the slot is recovered as the largest k
// with p_k <= u.

#include "tagshield/bigint.hpp"
#include "tagshield/random.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tagshield {

struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct BudgetError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Secret tag h with its declared width b; 0 <= value < 2^b.
class HiddenTag {
 public:
  HiddenTag(BigInt value, std::size_t bit_width);

  const BigInt& value() const { return value_; }
  std::size_t bit_width() const { return bit_width_; }

 private:
  BigInt value_;
  std::size_t bit_width_;
};

/// Randomized code u with its bit budget B; 0 <= value < 2^B.
class ScrambledCode {
 public:
  ScrambledCode(BigInt value, std::size_t bit_budget);

  const BigInt& value() const { return value_; }
  std::size_t bit_budget() const { return bit_budget_; }

  /// Lowercase big-endian hex, zero-padded to ceil(B/8) bytes.
  std::string to_hex() const;
  static ScrambledCode from_hex(const std::string& hex, std::size_t bit_budget);

 private:
  BigInt value_;
  std::size_t bit_budget_;
};

/// Inclusive slot-index range used by an encoder for a given tag.
struct SlotRange {
  BigInt lo;
  BigInt hi;
};

/// Alphabet size M and the largest slot index k_max reachable by `encode`.
struct CodecParams {
  BigInt alphabet_size;
  BigInt k_max;

  static CodecParams for_alphabet(const BigInt& alphabet_size);
};

/// p_k = k(k+1)/2.
BigInt triangular(const BigInt& k);

/// The unique k with p_k <= u < p_{k+1}. Exact integer arithmetic only.
BigInt inverse_triangular(const BigInt& u);

/// p_k + n. Requires 0 <= n <= k so the result stays inside slot k.
BigInt encode_in_slot(const BigInt& n, const BigInt& k);

/// Slot range [n, 2M-1] used by `encode`.
SlotRange alphabet_slots(const BigInt& n, const BigInt& alphabet_size);

/// Encodes n in [0, M) as p_k + n with k uniform in [n, 2M-1].
BigInt encode(const BigInt& n, const BigInt& alphabet_size, RandomSource& rng);

/// Largest k with p_k + k < 2^B, i.e. the last slot lying wholly below 2^B.
BigInt max_slot_for_budget(std::size_t bit_budget);

/// Slot range [max(n, 2^b - 1), k_max(B)] used by `encode_with_budget`.
SlotRange budget_slots(const HiddenTag& tag, std::size_t bit_budget);

/// Encodes a b-bit tag under a B-bit budget, B >= 2b. The lower slot bound is
/// the same for every tag of width b, so the code distribution only depends on
/// n through its offset.
ScrambledCode encode_with_budget(const HiddenTag& tag, std::size_t bit_budget, RandomSource& rng);

/// u - p_k for the slot k containing u. Needs no knowledge of the random slot.
BigInt decode(const BigInt& u);
inline BigInt decode(const ScrambledCode& code) { return decode(code.value()); }

}  // namespace tagshield
