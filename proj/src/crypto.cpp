#include "pass/crypto.hpp"

#include <sodium.h>

#include <algorithm>
#include <stdexcept>

namespace pass {

namespace {

void ensure_sodium() {
  static const bool ready = [] {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
    return true;
  }();
  (void)ready;
}

}  // namespace

Hash32 sha256(std::span<const std::uint8_t> data) {
  ensure_sodium();
  Hash32 out{};
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

Hash32 sha256(std::string_view data) { return sha256(as_bytes(data)); }

Hash32 hmac_sha256(std::span<const std::uint8_t> key, std::span<const std::uint8_t> data) {
  ensure_sodium();
  crypto_auth_hmacsha256_state st;
  crypto_auth_hmacsha256_init(&st, key.data(), key.size());
  crypto_auth_hmacsha256_update(&st, data.data(), data.size());
  Hash32 out{};
  crypto_auth_hmacsha256_final(&st, out.data());
  return out;
}

ExternalAddress address_from_ed25519(std::span<const std::uint8_t, 32> publicKey) {
  Hash32 h = sha256(publicKey);
  ExternalAddress::Raw raw{};
  std::copy(h.end() - 20, h.end(), raw.begin());
  return ExternalAddress(raw);
}

bool verify_signature(const ExternalAddress& pk, std::span<const std::uint8_t> message,
                      std::span<const std::uint8_t> signature) {
  ensure_sodium();
  if (signature.size() != crypto_sign_PUBLICKEYBYTES + crypto_sign_BYTES) return false;
  auto edpk = signature.first<crypto_sign_PUBLICKEYBYTES>();
  if (address_from_ed25519(edpk) != pk) return false;
  auto sig = signature.subspan(crypto_sign_PUBLICKEYBYTES);
  return crypto_sign_verify_detached(sig.data(), message.data(), message.size(), edpk.data()) == 0;
}

}  // namespace pass
