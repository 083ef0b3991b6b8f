#pragma once

// Private to the enclave runtime: the only code path that reads or builds
// secret key bytes.

#include "pass/types.hpp"

namespace pass {

struct SecretKeyAccess {
  static const std::array<std::uint8_t, 32>& bytes(const SecretKey& sk) { return sk.bytes_; }

  static SecretKey make(const std::array<std::uint8_t, 32>& bytes) {
    SecretKey sk;
    sk.bytes_ = bytes;
    sk.present_ = true;
    return sk;
  }
};

}  // namespace pass
