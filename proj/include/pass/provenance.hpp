#pragma once

// Append-only provenance log H, the replay fold that serves as the
// independent ledger oracle, check_allow, digests and attestations.

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "pass/policy.hpp"
#include "pass/types.hpp"

namespace pass {
class Signer;
}

namespace pass::provenance {

/// Meta key carrying the inbox entry id on Deposit and Claim records.
inline constexpr const char* kEntryMeta = "entry";

/// Folds provenance records one at a time into the ledger they imply.
/// The fold checks the log's own consistency (claims match deposits, no
/// negative balances, GSM signers hold authority) and throws MalformedLog
/// otherwise. Folding is independent of the engine's ledger mutations.
class ReplayFolder {
 public:
  /// `defaultSigner` holds one implicit unit of every GSM domain until the
  /// domain is first granted. With checkSeq off, records may be any
  /// subsequence of a log.
  explicit ReplayFolder(std::optional<SubaccountId> defaultSigner = std::nullopt,
                        bool checkSeq = true)
      : default_signer_(std::move(defaultSigner)), check_seq_(checkSeq) {}

  void apply(const ProvenanceRecord& record);

  const Ledger& ledger() const noexcept { return ledger_; }
  std::uint64_t next_seq() const noexcept { return next_seq_; }

  /// Balance including the root's implicit unit of every GSM domain that
  /// has never been granted.
  Amount implied_balance(const SubaccountId& u, const AssetId& asset) const;
  std::optional<SubaccountId> default_signer() const { return default_signer_; }

 private:
  struct Deposit {
    AssetId asset;
    Amount amount;
    bool claimed = false;
  };

  Ledger ledger_;
  std::map<std::uint64_t, Deposit> deposits_;
  std::set<std::string> touched_domains_;
  std::optional<SubaccountId> default_signer_;
  std::uint64_t next_seq_ = 0;
  bool check_seq_ = true;
};

/// Append-only record sequence. seq numbers are dense and assigned here.
/// The origin (wallet creator) is a header, not a record: it is the default
/// GSM signer the fold starts from.
class ProvenanceLog {
 public:
  ProvenanceLog() = default;
  explicit ProvenanceLog(SubaccountId origin) : origin_(origin), fold_(std::move(origin)) {}
  /// Rebuilds a log from stored records, re-validating every record.
  static ProvenanceLog from_records(std::optional<SubaccountId> origin,
                                    std::vector<ProvenanceRecord> records);

  const std::optional<SubaccountId>& origin() const noexcept { return origin_; }

  /// Assigns the next seq, folds and stores the record. Throws MalformedLog
  /// (leaving the log untouched) if the record is inconsistent with H.
  const ProvenanceRecord& append(ProvenanceRecord record);

  const std::vector<ProvenanceRecord>& records() const noexcept { return records_; }
  std::uint64_t next_seq() const noexcept { return records_.size(); }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  const ReplayFolder& fold() const noexcept { return fold_; }

  bool operator==(const ProvenanceLog& other) const {
    return origin_ == other.origin_ && records_ == other.records_;
  }

 private:
  std::optional<SubaccountId> origin_;
  std::vector<ProvenanceRecord> records_;
  ReplayFolder fold_;
};

/// Folds H from genesis. The oracle for every conservation check.
Ledger replay_ledger(std::span<const ProvenanceRecord> records,
                     const std::optional<SubaccountId>& origin = std::nullopt);
inline Ledger replay_ledger(const ProvenanceLog& log) {
  return replay_ledger(log.records(), log.origin());
}

/// Provenance reachability conjoined with policy. Evaluated against the
/// log's maintained fold, which equals replay_ledger(H).
bool check_allow(const policy::PolicyContext& ctx, const ProvenanceLog& log,
                 const policy::PolicySet& policy);

/// Pure form that replays the log from scratch.
bool check_allow_replay(const policy::PolicyContext& ctx, const ProvenanceLog& log,
                        const policy::PolicySet& policy);

/// SHA-256 over the canonical JSON array of the records.
Hash32 digest(std::span<const ProvenanceRecord> records);
inline Hash32 digest(const ProvenanceLog& log) { return digest(log.records()); }

struct Attestation {
  Hash32 digest{};
  Bytes signature;
  std::uint64_t coveredSeq = 0;
  std::uint64_t nonce = 0;
  bool operator==(const Attestation&) const = default;
};

/// Canonical bytes the attestation signature covers.
Bytes attestation_message(const Hash32& digest, std::uint64_t coveredSeq, std::uint64_t nonce);

Attestation attest(const ProvenanceLog& log, const Signer& signer, std::uint64_t nonce);
bool verify_attestation(const ExternalAddress& pk, const Attestation& att,
                        std::span<const ProvenanceRecord> records);

/// Minimal ordered subsequence of H whose fold credits `u` with at least its
/// current balance of `asset`. Built by greedy backward traversal, then
/// pruned until no credit can be dropped. Throws NoProvenance when the
/// balance is zero.
std::vector<ProvenanceRecord> custody_chain(const ProvenanceLog& log, const SubaccountId& u,
                                            const AssetId& asset);

/// True if folding `chain` alone never goes negative and credits `u` with at
/// least `target` of `asset`. Used by custody_chain and its tests.
bool chain_covers(std::span<const ProvenanceRecord> chain,
                  const std::optional<SubaccountId>& origin, const SubaccountId& u,
                  const AssetId& asset, Amount target);

}  // namespace pass::provenance
