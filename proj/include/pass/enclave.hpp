#pragma once

// Simulated TEE + threshold KMS. Enclaves, quotes, the t-of-n key service,
// sealed containers, governance quorum with timeout relaxation, migration,
// rotation and the recover-and-execute loop. Time is a round counter.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pass/crypto.hpp"
#include "pass/engine.hpp"
#include "pass/state.hpp"

namespace pass::enclave {

/// Deterministic key generation from a seed. Only enclave code sees the
/// secret half.
class SimKeySource : public engine::KeySource {
 public:
  explicit SimKeySource(std::string seed) : seed_(std::move(seed)) {}
  KeyPair generate_keypair() override;

 private:
  std::string seed_;
  std::uint64_t counter_ = 0;
};

/// Signs with the wallet key. Signing fails with KeyUnavailable once the
/// handle is disabled (its enclave crashed).
class KeyHandle : public Signer {
 public:
  explicit KeyHandle(const KeyPair& keys);
  ExternalAddress address() const override { return pk_; }
  Bytes sign(std::span<const std::uint8_t> message) const override;
  void set_available(bool available) { available_ = available; }

 private:
  ExternalAddress pk_;
  std::array<std::uint8_t, 64> ed25519_secret_{};
  bool available_ = true;
};

enum class Vendor { VendorA, VendorB };
enum class EnclaveStatus { Honest, Crashed, Compromised };

std::string_view to_string(Vendor v);
std::string_view to_string(EnclaveStatus s);

struct Enclave {
  std::string enclaveId;
  Vendor vendor = Vendor::VendorA;
  Hash32 measurement{};
  EnclaveStatus status = EnclaveStatus::Honest;
};

/// Measurement of the standard wallet image.
Hash32 wallet_image_measurement();

struct Quote {
  std::string enclaveId;
  Vendor vendor = Vendor::VendorA;
  Hash32 measurement{};
  bool compromised = false;  // injected CompromiseDetected flag
  Hash32 tag{};              // vendor-keyed MAC over the fields above
};

/// Governance registry: allowed images plus the quorum policy.
struct Registry {
  std::set<Hash32> allowedMeasurements;
  std::set<std::string> approvers;
  std::uint64_t q = 1;
  std::uint64_t deltaT = 1;  // rounds per relaxation step
  std::string registryRef = "registry";
  /// Effective threshold after `elapsed` rounds. Must be monotone
  /// non-increasing in elapsed and reach 1.
  std::function<std::uint64_t(std::uint64_t q, std::uint64_t elapsed, std::uint64_t deltaT)>
      relax;
};

/// q' = max(1, q - floor(elapsed / deltaT)).
std::uint64_t linear_relaxation(std::uint64_t q, std::uint64_t elapsed, std::uint64_t deltaT);

/// Throws NotAttested for a crashed enclave.
Quote attest_quote(const Enclave& e);
bool verify_quote(const Registry& r, const Quote& q);

bool quorum_check(const Registry& r, const std::set<std::string>& approvals,
                  std::uint64_t elapsed);

/// t-of-n key service. The root key is the XOR of every node's share for
/// the current epoch; derivation only needs t nodes up.
struct KmsConfig {
  std::uint64_t n = 1;
  std::uint64_t t = 1;
  std::uint64_t epoch = 0;
  std::string seed;
  std::vector<bool> nodeUp;

  static KmsConfig create(std::uint64_t n, std::uint64_t t, std::string seed);
  std::uint64_t up_count() const;
};

/// HMAC-SHA-256(k_root, containerId). Throws KeyUnavailable below threshold.
Hash32 derive_key(const KmsConfig& kms, const std::string& containerId);

struct ContainerMeta {
  Hash32 measurement{};
  std::string registryRef;
  std::uint64_t stateVersion = 0;
  std::uint64_t keyEpoch = 0;
  bool operator==(const ContainerMeta&) const = default;
};

struct SealedContainer {
  std::string containerId;
  std::string host;   // enclave currently hosting; outside the ciphertext
  Bytes ciphertext;   // nonce || AEAD ciphertext of the full state incl. sk
  ContainerMeta meta; // authenticated as associated data
  bool operator==(const SealedContainer&) const = default;
};

SealedContainer seal(const WalletState& state, const Hash32& key, std::string containerId,
                     ContainerMeta meta);
/// Throws SealedStateCorrupt on any authentication failure and
/// RollbackDetected when meta.stateVersion < minVersion.
WalletState unseal(const SealedContainer& container, const Hash32& key,
                   std::uint64_t minVersion = 0);

nlohmann::json to_json(const SealedContainer& c);
SealedContainer container_from_json(const nlohmann::json& j);

struct RotationResult {
  KmsConfig kms;
  SealedContainer container;
};

/// Moves the KMS to a fresh share epoch and re-encrypts under the new k_c.
/// Old-epoch keys no longer open the container.
RotationResult rotate_key(const KmsConfig& kms, const SealedContainer& container);

/// Re-hosts the container on `to` after its quote verifies. The payload is
/// checked to decrypt identically on the target.
SealedContainer migrate(const SealedContainer& container, const Enclave& from, const Enclave& to,
                        const KmsConfig& kms, const Registry& registry);

enum class FaultKind { Crash, Compromise, KmsDown, KmsUp, Approve };

std::string_view to_string(FaultKind k);
FaultKind parse_fault_kind(std::string_view text);

struct FaultEvent {
  std::uint64_t round = 0;
  FaultKind kind = FaultKind::Crash;
  std::string target;  // enclave id, KMS node index, or approver id
};

std::vector<FaultEvent> faults_from_json(const nlohmann::json& j);

/// Everything outside the container that the recovery loop observes.
struct World {
  std::vector<Enclave> enclaves;
  std::set<std::string> approvals;
  std::uint64_t clock = 0;
  std::vector<FaultEvent> schedule;                      // applied when clock reaches round
  std::map<std::string, std::uint64_t> lastSeenVersion;  // anti-rollback per container
  std::set<std::string> handledCompromises;
  std::size_t applied = 0;  // schedule[0, applied) already happened

  Enclave* find(const std::string& enclaveId);
  /// Applies all scheduled events with round <= clock.
  void apply_due(KmsConfig& kms);
  /// True if an event of this kind is still scheduled.
  bool has_pending(FaultKind kind) const;
};

/// Authorized wallet operation executed inside the recovered enclave.
using Operation = std::function<void(WalletState&, const Signer&)>;

struct ExecutionResult {
  SealedContainer container;
  std::uint64_t rounds = 0;  // tau: rounds from request to execution
  bool migrated = false;
  bool rotated = false;
  /// Set when recovery succeeded but the wallet rejected the operation. The
  /// container then carries only the recovery audit records.
  std::optional<Error> opError;
};

/// Fixed round costs of the recovery steps.
inline constexpr std::uint64_t kMigrationRounds = 1;
inline constexpr std::uint64_t kRotationRounds = 1;
/// Hard stop for the simulation loop.
inline constexpr std::uint64_t kHorizonRounds = 100000;

/// Verify quote, derive k_c and unseal, rotate on detected compromise, wait
/// for the (relaxing) quorum, then execute `op` and reseal. Fails with
/// NotAttested when no honest enclave remains, KeyUnavailable when the KMS
/// is below threshold with no recovery scheduled, QuorumUnreachable when no
/// approver ever approves.
ExecutionResult recover_and_execute(const SealedContainer& container, const Operation& op,
                                    KmsConfig& kms, const Registry& registry, World& world);

}  // namespace pass::enclave
