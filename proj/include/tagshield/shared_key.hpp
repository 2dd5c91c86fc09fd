#pragma once

#include "tagshield/bigint.hpp"

#include <string>

namespace tagshield {

/// Group key K agreed by the distributor and all participants.
struct SharedKey {
  BigInt value;

  friend bool operator==(const SharedKey&, const SharedKey&) = default;

  std::string to_hex() const { return tagshield::to_hex(value); }
  static SharedKey from_hex(const std::string& hex) { return SharedKey{tagshield::from_hex(hex)}; }
};

}  // namespace tagshield
