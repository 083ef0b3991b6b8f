#pragma once

// Simulated external ledger: immediately-final, ordered, no blocks. It is
// the authority for on-chain balances, account nonces and extDep.

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pass/crypto.hpp"
#include "pass/state.hpp"
#include "pass/types.hpp"

namespace pass::chain {

struct ChainAction {
  AssetId asset;
  Amount amount;
  ExternalAddress from;
  ExternalAddress to;
  std::uint64_t nonce = 0;
  bool operator==(const ChainAction&) const = default;
};

struct SignedTx {
  ChainAction action;
  Bytes signature;
};

struct Receipt {
  std::uint64_t txIndex = 0;
  std::uint64_t nonce = 0;
  Hash32 txHash{};
  bool operator==(const Receipt&) const = default;
};

struct DepositEvent {
  AssetId asset;
  Amount amount;
  ExternalAddress from;
  ExternalAddress to;
  bool operator==(const DepositEvent&) const = default;
};

/// What the harness feeds to engine::inbox_deposit.
struct InboxEvent {
  AssetId asset;
  Amount amount;
  ExternalAddress sender;
};

nlohmann::json to_json(const ChainAction& a);
ChainAction action_from_json(const nlohmann::json& j);
nlohmann::json to_json(const std::vector<ChainAction>& trace);
/// Canonical bytes a transaction signature covers.
Bytes signing_bytes(const ChainAction& a);
SignedTx sign_tx(const ChainAction& a, const Signer& signer);

class SimChain {
 public:
  /// Test setup only: mints value to an address. Not a deposit, so it never
  /// enters extDep accounting.
  void faucet(const ExternalAddress& to, const AssetId& asset, Amount amount);

  InboxEvent external_deposit(const ExternalAddress& from, const ExternalAddress& to,
                              const AssetId& asset, Amount amount);

  Receipt submit_tx(const SignedTx& tx);

  Amount balance(const ExternalAddress& who, const AssetId& asset) const;
  std::uint64_t account_nonce(const ExternalAddress& who) const;
  /// Deposits into `pk` minus broadcast transfers out of `pk`.
  Amount ext_dep(const AssetId& asset, const ExternalAddress& pk) const;

  const std::vector<ChainAction>& tx_log() const noexcept { return txLog_; }
  const std::vector<DepositEvent>& deposit_log() const noexcept { return depositLog_; }
  const std::map<AssetId, ExternalAddress>& nft_owners() const noexcept { return nftOwners_; }

  nlohmann::json to_json() const;
  static SimChain from_json(const nlohmann::json& j);

  bool operator==(const SimChain&) const = default;

 private:
  void move_value(const ExternalAddress& from, const ExternalAddress& to, const AssetId& asset,
                  Amount amount);

  std::map<std::pair<ExternalAddress, AssetId>, Amount> balances_;
  std::map<ExternalAddress, std::uint64_t> accountNonce_;
  std::vector<ChainAction> txLog_;
  std::vector<DepositEvent> depositLog_;
  std::map<AssetId, ExternalAddress> nftOwners_;
  std::map<std::pair<ExternalAddress, AssetId>, Amount> depositedTo_;
  std::map<std::pair<ExternalAddress, AssetId>, Amount> sentFrom_;
};

/// Maps each outbox transaction of the public view to its on-chain action,
/// in outbox order.
std::vector<ChainAction> external_trace(const PublicState& pub);

/// Equal pk, equal outbox view (txs and nonce) and equal per-asset totals.
bool observational_eq(const WalletState& a, const WalletState& b);

/// Scripted single-key wallet with no subaccounts: deposits are spendable at
/// once and withdrawals go straight to its own nonce-ordered queue.
class PlainEoa {
 public:
  explicit PlainEoa(ExternalAddress pk) : pk_(pk) {}

  void deposit(const AssetId& asset, Amount amount);
  void withdraw(const AssetId& asset, Amount amount, const ExternalAddress& extDst);
  std::vector<Receipt> process(SimChain& chain, const Signer& signer);

  PublicState public_state() const;

 private:
  ExternalAddress pk_;
  std::uint64_t nonce_ = 0;
  std::map<AssetId, Amount> balances_;
  std::vector<OutboxEntry> sent_;
};

}  // namespace pass::chain
