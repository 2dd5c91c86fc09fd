#include "tagshield/otp_cipher.hpp"

#include <openssl/evp.h>

#include <json.hpp>

#include <memory>

namespace tagshield {

BitVector BitVector::from_integer(const BigInt& value, std::size_t size) {
  if (value < 0 || bit_length(value) > size) throw LengthMismatch("integer does not fit in bit vector");
  BitVector v(size);
  for (std::size_t i = 0; i < size; ++i) v.bits_[i] = mpz_tstbit(value.get_mpz_t(), i);
  return v;
}

BitVector BitVector::from_string(const std::string& msb_first) {
  BitVector v(msb_first.size());
  for (std::size_t i = 0; i < msb_first.size(); ++i) {
    char c = msb_first[msb_first.size() - 1 - i];
    if (c != '0' && c != '1') throw std::invalid_argument("bit string may only contain 0 and 1");
    v.bits_[i] = c == '1';
  }
  return v;
}

BigInt BitVector::to_integer() const {
  BigInt x;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) mpz_setbit(x.get_mpz_t(), i);
  }
  return x;
}

std::string BitVector::to_string() const {
  std::string s(bits_.size(), '0');
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) s[bits_.size() - 1 - i] = '1';
  }
  return s;
}

std::size_t hamming_distance(const BitVector& a, const BitVector& b) {
  if (a.size() != b.size()) throw LengthMismatch("hamming_distance: length mismatch");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a.get(i) != b.get(i);
  return d;
}

Nonce random_nonce(RandomSource& rng) {
  Nonce n{};
  rng.fill(n);
  return n;
}

std::string nonce_to_hex(const Nonce& nonce) {
  return to_hex(std::vector<std::uint8_t>(nonce.begin(), nonce.end()));
}

Nonce nonce_from_hex(const std::string& hex) {
  if (hex.size() != 32) throw std::invalid_argument("nonce must be 32 hex characters");
  auto bytes = bytes_from_hex(hex);
  Nonce n{};
  std::copy(bytes.begin(), bytes.end(), n.begin());
  return n;
}

BitVector xor_pad(const BitVector& data, const PadKey& key) {
  if (data.size() != key.bits.size()) throw LengthMismatch("pad length differs from data length");
  BitVector out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out.set(i, data.get(i) != key.bits.get(i));
  return out;
}

namespace {

constexpr char kPadLabel[] = "tagshield/pad/v1";

void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) buf.push_back(static_cast<std::uint8_t>(v >> s));
}

struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};

}  // namespace

PadKey derive_pad(const SharedKey& key, const Nonce& nonce, std::size_t bits) {
  if (bits == 0) throw std::invalid_argument("pad length must be positive");
  if (key.value < 0) throw std::invalid_argument("shared key must be non-negative");

  std::vector<std::uint8_t> prefix(kPadLabel, kPadLabel + sizeof kPadLabel - 1);
  auto key_bytes = to_bytes_be(key.value);
  put_u32(prefix, static_cast<std::uint32_t>(key_bytes.size()));
  prefix.insert(prefix.end(), key_bytes.begin(), key_bytes.end());
  prefix.insert(prefix.end(), nonce.begin(), nonce.end());

  std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx(EVP_MD_CTX_new());
  if (!ctx) throw std::runtime_error("EVP_MD_CTX_new failed");

  PadKey pad{BitVector(bits)};
  std::size_t produced = 0;
  for (std::uint32_t counter = 0; produced < bits; ++counter) {
    std::vector<std::uint8_t> block = prefix;
    put_u32(block, counter);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), block.data(), block.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
      throw std::runtime_error("SHA-256 failed");
    }
    for (unsigned int byte = 0; byte < len && produced < bits; ++byte) {
      for (int bit = 0; bit < 8 && produced < bits; ++bit, ++produced) {
        pad.bits.set(produced, (digest[byte] >> bit) & 1);
      }
    }
  }
  return pad;
}

std::string TagRecord::to_json_line() const {
  nlohmann::ordered_json j;
  j["manifest_id"] = manifest_id;
  j["nonce"] = nonce_to_hex(nonce);
  j["b_budget"] = bit_budget;
  j["cipher"] = to_hex(cipher_bits.to_integer(), bytes_for_bits(bit_budget));
  return j.dump();
}

TagRecord TagRecord::from_json_line(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("malformed tag record: ") + e.what());
  }
  if (!j.is_object() || !j.contains("manifest_id") || !j.contains("nonce") ||
      !j.contains("b_budget") || !j.contains("cipher") || !j["manifest_id"].is_string() ||
      !j["nonce"].is_string() || !j["b_budget"].is_number_unsigned() || !j["cipher"].is_string()) {
    throw std::invalid_argument("malformed tag record: missing or mistyped field");
  }
  TagRecord r;
  r.manifest_id = j["manifest_id"].get<std::string>();
  r.nonce = nonce_from_hex(j["nonce"].get<std::string>());
  r.bit_budget = j["b_budget"].get<std::size_t>();
  if (r.bit_budget == 0) throw std::invalid_argument("malformed tag record: zero bit budget");
  auto cipher_hex = j["cipher"].get<std::string>();
  if (cipher_hex.size() != 2 * bytes_for_bits(r.bit_budget)) {
    throw std::invalid_argument("malformed tag record: cipher length does not match b_budget");
  }
  r.cipher_bits = BitVector::from_integer(from_hex(cipher_hex), r.bit_budget);
  return r;
}

TagRecord seal_tag(const HiddenTag& tag, std::size_t bit_budget, const SharedKey& key,
                   const std::string& manifest_id, RandomSource& rng) {
  auto code = encode_with_budget(tag, bit_budget, rng);
  TagRecord r;
  r.manifest_id = manifest_id;
  r.nonce = random_nonce(rng);
  r.bit_budget = bit_budget;
  r.cipher_bits = xor_pad(BitVector::from_integer(code.value(), bit_budget),
                          derive_pad(key, r.nonce, bit_budget));
  return r;
}

BigInt open_tag(const TagRecord& record, const SharedKey& key) {
  if (record.cipher_bits.size() != record.bit_budget) {
    throw LengthMismatch("record cipher length differs from its bit budget");
  }
  auto plain = xor_pad(record.cipher_bits, derive_pad(key, record.nonce, record.bit_budget));
  return decode(plain.to_integer());
}

}  // namespace tagshield
