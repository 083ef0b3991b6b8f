#pragma once

#include <span>
#include <string_view>

#include "pass/types.hpp"

namespace pass {

Hash32 sha256(std::span<const std::uint8_t> data);
Hash32 sha256(std::string_view data);
Hash32 hmac_sha256(std::span<const std::uint8_t> key, std::span<const std::uint8_t> data);

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

/// Anything able to produce signatures for one address. The enclave runtime
/// provides the only implementation holding a real key.
class Signer {
 public:
  virtual ~Signer() = default;
  virtual ExternalAddress address() const = 0;
  /// Throws KeyUnavailable when the backing enclave cannot sign.
  virtual Bytes sign(std::span<const std::uint8_t> message) const = 0;
};

/// Signature bytes are the 32-byte Ed25519 public key followed by the 64-byte
/// detached signature. The address is the last 20 bytes of SHA-256 over the
/// Ed25519 public key, so any holder of the address can verify.
bool verify_signature(const ExternalAddress& pk, std::span<const std::uint8_t> message,
                      std::span<const std::uint8_t> signature);

ExternalAddress address_from_ed25519(std::span<const std::uint8_t, 32> publicKey);

}  // namespace pass
