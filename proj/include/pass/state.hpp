#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "pass/policy.hpp"
#include "pass/provenance.hpp"
#include "pass/types.hpp"

namespace pass {

/// The wallet tuple (pk, sk, nonce, inbox, outbox, ledger, history) plus GSM
/// assignments, policy and claim bindings. Mutated only by engine::*.
struct WalletState {
  KeyPair keys;
  std::uint64_t nonce = 0;  // 1 + highest broadcast nonce
  std::vector<InboxEntry> inbox;
  std::vector<OutboxEntry> outbox;
  Ledger ledger;
  provenance::ProvenanceLog history;
  std::map<std::string, SubaccountId> gsmAssignments;
  SubaccountId root;
  std::set<SubaccountId> subaccounts;
  policy::PolicySet policy;
  std::map<ExternalAddress, SubaccountId> senderBindings;
  std::uint64_t nextEntryId = 0;
  std::uint64_t stateVersion = 0;  // bumped on every committed mutation

  bool operator==(const WalletState&) const = default;
};

struct OutboxView {
  std::vector<OutboxEntry> txs;
  std::uint64_t nonce = 0;
  bool operator==(const OutboxView&) const = default;
};

/// What an outside observer of the wallet address can know.
struct PublicState {
  ExternalAddress pk;
  OutboxView outbox;
  std::map<AssetId, Amount> assetTotals;
  bool operator==(const PublicState&) const = default;
};

/// Totals are ledger balances plus unclaimed inbox value, per asset.
PublicState project_public(const WalletState& state);

}  // namespace pass
