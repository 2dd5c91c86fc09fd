#include "tagshield/bigint.hpp"

#include <stdexcept>

namespace tagshield {

std::size_t bit_length(const BigInt& x) {
  if (x == 0) return 0;
  return mpz_sizeinbase(x.get_mpz_t(), 2);
}

BigInt isqrt(const BigInt& x) {
  if (x < 0) throw std::domain_error("isqrt of negative value");
  BigInt r;
  mpz_sqrt(r.get_mpz_t(), x.get_mpz_t());
  return r;
}

std::vector<std::uint8_t> to_bytes_be(const BigInt& x, std::size_t min_bytes) {
  if (x < 0) throw std::domain_error("negative value has no unsigned encoding");
  std::size_t count = 0;
  std::vector<std::uint8_t> raw((bit_length(x) + 7) / 8);
  if (!raw.empty()) {
    mpz_export(raw.data(), &count, 1, 1, 1, 0, x.get_mpz_t());
    raw.resize(count);
  }
  if (raw.size() >= min_bytes) return raw;
  std::vector<std::uint8_t> out(min_bytes - raw.size(), 0);
  out.insert(out.end(), raw.begin(), raw.end());
  return out;
}

BigInt from_bytes_be(const std::vector<std::uint8_t>& bytes) {
  BigInt x;
  if (!bytes.empty()) mpz_import(x.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
  return x;
}

std::string to_hex(const std::vector<std::uint8_t>& bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 0x0f]);
  }
  return s;
}

std::string to_hex(const BigInt& x, std::size_t min_bytes) {
  auto bytes = to_bytes_be(x, min_bytes);
  if (bytes.empty()) bytes.push_back(0);
  return to_hex(bytes);
}

namespace {
int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}
}  // namespace

std::vector<std::uint8_t> bytes_from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw std::invalid_argument("hex string has odd length");
  std::vector<std::uint8_t> out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = hex_value(hex[2 * i]);
    int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw std::invalid_argument("invalid hex digit");
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

BigInt from_hex(std::string_view hex) {
  if (hex.empty()) throw std::invalid_argument("empty hex string");
  if (hex.size() % 2 != 0) {
    std::string padded = "0";
    padded.append(hex);
    return from_bytes_be(bytes_from_hex(padded));
  }
  return from_bytes_be(bytes_from_hex(hex));
}

}  // namespace tagshield
