#include "tagshield/triangular_codec.hpp"

#include <algorithm>

namespace tagshield {

HiddenTag::HiddenTag(BigInt value, std::size_t bit_width)
    : value_(std::move(value)), bit_width_(bit_width) {
  if (bit_width_ == 0) throw DomainError("tag bit width must be positive");
  if (value_ < 0 || bit_length(value_) > bit_width_) {
    throw DomainError("tag does not fit in its declared bit width");
  }
}

ScrambledCode::ScrambledCode(BigInt value, std::size_t bit_budget)
    : value_(std::move(value)), bit_budget_(bit_budget) {
  if (bit_budget_ == 0) throw BudgetError("bit budget must be positive");
  if (value_ < 0 || bit_length(value_) > bit_budget_) {
    throw BudgetError("code does not fit in its bit budget");
  }
}

std::string ScrambledCode::to_hex() const {
  return tagshield::to_hex(value_, bytes_for_bits(bit_budget_));
}

ScrambledCode ScrambledCode::from_hex(const std::string& hex, std::size_t bit_budget) {
  if (hex.size() != 2 * bytes_for_bits(bit_budget)) {
    throw std::invalid_argument("code hex length does not match bit budget");
  }
  return ScrambledCode(tagshield::from_hex(hex), bit_budget);
}

CodecParams CodecParams::for_alphabet(const BigInt& alphabet_size) {
  if (alphabet_size < 1) throw DomainError("alphabet size must be positive");
  return CodecParams{alphabet_size, 2 * alphabet_size - 1};
}

BigInt triangular(const BigInt& k) {
  if (k < 0) throw DomainError("triangular: negative index");
  BigInt t = k * (k + 1);
  mpz_fdiv_q_2exp(t.get_mpz_t(), t.get_mpz_t(), 1);
  return t;
}

BigInt inverse_triangular(const BigInt& u) {
  if (u < 0) throw DomainError("inverse_triangular: negative argument");
  // k = floor((sqrt(8u+1) - 1) / 2); isqrt is exact, the loops only guard
  // against an off-by-one in the rounding of the halving step.
  BigInt k = (isqrt(8 * u + 1) - 1) / 2;
  while (triangular(k) > u) --k;
  while (triangular(k + 1) <= u) ++k;
  return k;
}

BigInt encode_in_slot(const BigInt& n, const BigInt& k) {
  if (n < 0 || n > k) throw DomainError("offset does not fit in slot");
  return triangular(k) + n;
}

SlotRange alphabet_slots(const BigInt& n, const BigInt& alphabet_size) {
  if (alphabet_size < 1) throw DomainError("alphabet size must be positive");
  if (n < 0 || n >= alphabet_size) throw DomainError("tag outside alphabet");
  return SlotRange{n, 2 * alphabet_size - 1};
}

BigInt encode(const BigInt& n, const BigInt& alphabet_size, RandomSource& rng) {
  auto slots = alphabet_slots(n, alphabet_size);
  return encode_in_slot(n, uniform_in(rng, slots.lo, slots.hi));
}

BigInt max_slot_for_budget(std::size_t bit_budget) {
  // p_k + k = k(k+3)/2 < 2^B  <=>  k^2 + 3k < 2^(B+1).
  BigInt limit = 1;
  mpz_mul_2exp(limit.get_mpz_t(), limit.get_mpz_t(), bit_budget + 1);
  BigInt k = (isqrt(limit * 4 + 9) - 3) / 2;
  if (k < 0) k = 0;
  while (k > 0 && k * (k + 3) >= limit) --k;
  while ((k + 1) * (k + 4) < limit) ++k;
  return k;
}

SlotRange budget_slots(const HiddenTag& tag, std::size_t bit_budget) {
  if (bit_budget < 2 * tag.bit_width()) {
    throw BudgetError("bit budget must be at least twice the tag width");
  }
  BigInt floor_slot = 1;
  mpz_mul_2exp(floor_slot.get_mpz_t(), floor_slot.get_mpz_t(), tag.bit_width());
  floor_slot -= 1;
  return SlotRange{std::max(tag.value(), floor_slot), max_slot_for_budget(bit_budget)};
}

ScrambledCode encode_with_budget(const HiddenTag& tag, std::size_t bit_budget, RandomSource& rng) {
  auto slots = budget_slots(tag, bit_budget);
  return ScrambledCode(encode_in_slot(tag.value(), uniform_in(rng, slots.lo, slots.hi)), bit_budget);
}

BigInt decode(const BigInt& u) { return u - triangular(inverse_triangular(u)); }

}  // namespace tagshield
