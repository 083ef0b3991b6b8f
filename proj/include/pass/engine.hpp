#pragma once

// PASS transition system. Every mutating operation either commits fully or
// throws pass::Error with the state left bit-identical.

#include <optional>
#include <variant>
#include <vector>

#include "pass/crypto.hpp"
#include "pass/state.hpp"

namespace pass::chain {
class SimChain;
struct Receipt;
}  // namespace pass::chain

namespace pass::engine {

/// Source of the wallet key pair; the enclave runtime implements it.
class KeySource {
 public:
  virtual ~KeySource() = default;
  virtual KeyPair generate_keypair() = 0;
};

WalletState create_wallet(const SubaccountId& rootId, KeySource& keySource);

// Wallet configuration. Not provenance events, so nothing is appended to H.
void add_subaccount(WalletState& state, const SubaccountId& u);
void bind_sender(WalletState& state, const ExternalAddress& sender, const SubaccountId& u);
void set_policy(WalletState& state, policy::PolicySet policy);
void reset_policy_window(WalletState& state);

/// Mirrors an on-chain deposit into the inbox. Returns the new entry id.
std::uint64_t inbox_deposit(WalletState& state, const AssetId& asset, Amount amount,
                            const ExternalAddress& sender);

/// Moves a whole inbox entry into the claimant's balance. The claimant must
/// be the subaccount bound to the entry's sender, or root when unbound.
void claim_inbox(WalletState& state, const SubaccountId& claimant, std::uint64_t entryId);

/// GSM domain assets move via grant: the unit and the assignment move
/// together.
void internal_transfer(WalletState& state, const SubaccountId& from, const SubaccountId& to,
                       const AssetId& asset, Amount amount);

/// Debits the ledger and enqueues an outbox entry with nonce
/// nonce + pending count. Returns the assigned nonce.
std::uint64_t withdraw(WalletState& state, const SubaccountId& u, const AssetId& asset,
                       Amount amount, const ExternalAddress& extDst,
                       std::optional<Bytes> payload = std::nullopt);

/// Signs and submits pending outbox entries in FIFO order. Stops at the
/// first chain rejection, keeping prior successes, and rethrows it.
std::vector<chain::Receipt> process_outbox(WalletState& state, chain::SimChain& chain,
                                           const Signer& signer);

/// Bytes the GSM signature covers: canonical JSON of (dom, message).
Bytes gsm_signing_payload(const std::string& dom, std::span<const std::uint8_t> message);

Bytes sign_gsm(WalletState& state, const SubaccountId& u, const std::string& dom,
               std::span<const std::uint8_t> message, const Signer& signer);

Amount get_balance(const WalletState& state, const SubaccountId& u, const AssetId& asset);
Amount total_balance(const WalletState& state, const AssetId& asset);
SubaccountId get_signer(const WalletState& state, const std::string& dom);

using HistoryFilter = std::variant<std::monostate, SubaccountId, AssetId, OpKind>;
std::vector<ProvenanceRecord> history(const WalletState& state, const HistoryFilter& filter = {});

Amount unclaimed_inbox(const WalletState& state, const AssetId& asset);
Amount pending_outbox(const WalletState& state, const AssetId& asset);

}  // namespace pass::engine
