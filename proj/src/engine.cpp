#include "pass/engine.hpp"

#include <algorithm>

#include "pass/chain.hpp"
#include "pass/serialize.hpp"

namespace pass::engine {

namespace {

void require_subaccount(const WalletState& state, const SubaccountId& u) {
  require(state.subaccounts.contains(u), ErrorKind::UnknownSubaccount,
          "unknown subaccount: " + u.str());
}

void require_positive(Amount amount) {
  require(!amount.is_zero(), ErrorKind::ZeroAmount, "amount must be positive");
}

void require_unit(const AssetId& asset, Amount amount) {
  require(!asset.is_unitary() || amount == Amount(1), ErrorKind::UnitaryViolation,
          asset.to_string() + " only moves in units of 1");
}

const std::string* gsm_domain(const AssetId& asset) {
  const auto* g = std::get_if<GsmDomain>(&asset.kind());
  return g ? &g->dom : nullptr;
}

/// Spendable balance: the ledger, plus root's default unit of every GSM
/// domain that has never been granted.
Amount spendable(const WalletState& state, const SubaccountId& u, const AssetId& asset) {
  if (const std::string* dom = gsm_domain(asset)) {
    return get_signer(state, *dom) == u ? Amount(1) : Amount{};
  }
  return ledger_balance(state.ledger, u, asset);
}

/// The engine ledger and the log's fold are maintained independently; any
/// disagreement means the state was corrupted.
void require_replay_consistent(const WalletState& state, const SubaccountId& u,
                               const AssetId& asset) {
  require(state.history.fold().implied_balance(u, asset) == spendable(state, u, asset),
          ErrorKind::MalformedLog,
          "ledger disagrees with provenance for " + u.str() + "/" + asset.to_string());
}

std::vector<InboxEntry>::iterator find_entry(WalletState& state, std::uint64_t entryId) {
  auto it = std::lower_bound(
      state.inbox.begin(), state.inbox.end(), entryId,
      [](const InboxEntry& e, std::uint64_t id) { return e.entryId < id; });
  require(it != state.inbox.end() && it->entryId == entryId, ErrorKind::UnknownEntry,
          "no inbox entry " + std::to_string(entryId));
  return it;
}

}  // namespace

WalletState create_wallet(const SubaccountId& rootId, KeySource& keySource) {
  WalletState state;
  state.keys = keySource.generate_keypair();
  state.root = rootId;
  state.subaccounts.insert(rootId);
  state.history = provenance::ProvenanceLog(rootId);
  return state;
}

void add_subaccount(WalletState& state, const SubaccountId& u) {
  require(!state.subaccounts.contains(u), ErrorKind::InvalidArgument,
          "subaccount already exists: " + u.str());
  state.subaccounts.insert(u);
  ++state.stateVersion;
}

void bind_sender(WalletState& state, const ExternalAddress& sender, const SubaccountId& u) {
  require_subaccount(state, u);
  state.senderBindings[sender] = u;
  ++state.stateVersion;
}

void set_policy(WalletState& state, policy::PolicySet policy) {
  state.policy = std::move(policy);
  ++state.stateVersion;
}

void reset_policy_window(WalletState& state) {
  policy::reset_window(state.policy);
  ++state.stateVersion;
}

std::uint64_t inbox_deposit(WalletState& state, const AssetId& asset, Amount amount,
                            const ExternalAddress& sender) {
  require_positive(amount);
  require(!asset.is_gsm(), ErrorKind::NotAllowed, "signing authority cannot be deposited");
  require_unit(asset, amount);

  const std::uint64_t id = state.nextEntryId;
  ProvenanceRecord rec;
  rec.op = OpKind::Deposit;
  rec.asset = asset;
  rec.amount = amount;
  rec.from = sender;
  rec.meta[provenance::kEntryMeta] = std::to_string(id);
  state.history.append(std::move(rec));

  state.inbox.push_back(InboxEntry{id, asset, amount, sender, false});
  ++state.nextEntryId;
  ++state.stateVersion;
  return id;
}

void claim_inbox(WalletState& state, const SubaccountId& claimant, std::uint64_t entryId) {
  auto entry = find_entry(state, entryId);
  require(!entry->claimed, ErrorKind::AlreadyClaimed,
          "inbox entry " + std::to_string(entryId) + " already claimed");
  require_subaccount(state, claimant);

  auto binding = state.senderBindings.find(entry->sender);
  const SubaccountId& entitled =
      binding != state.senderBindings.end() ? binding->second : state.root;
  require(claimant == entitled, ErrorKind::NotAllowed,
          claimant.str() + " may not claim deposits from " + entry->sender.to_string());

  if (entry->asset.is_unitary()) {
    require(total_balance(state, entry->asset).is_zero(), ErrorKind::UnitaryViolation,
            entry->asset.to_string() + " is already held");
  }
  // Overflow surfaces here, before anything is written.
  (void)(ledger_balance(state.ledger, claimant, entry->asset) + entry->amount);

  ProvenanceRecord rec;
  rec.op = OpKind::Claim;
  rec.asset = entry->asset;
  rec.amount = entry->amount;
  rec.from = entry->sender;
  rec.to = claimant;
  rec.meta[provenance::kEntryMeta] = std::to_string(entryId);
  state.history.append(std::move(rec));

  entry->claimed = true;
  ledger_credit(state.ledger, claimant, entry->asset, entry->amount);
  ++state.stateVersion;
}

void internal_transfer(WalletState& state, const SubaccountId& from, const SubaccountId& to,
                       const AssetId& asset, Amount amount) {
  require(from != to, ErrorKind::SelfTransfer, "sender and recipient are both " + from.str());
  require_positive(amount);
  require_subaccount(state, from);
  require_subaccount(state, to);
  require_unit(asset, amount);
  require(spendable(state, from, asset) >= amount, ErrorKind::InsufficientBalance,
          from.str() + " holds less than " + std::to_string(amount.value()) + " of " +
              asset.to_string());
  require_replay_consistent(state, from, asset);

  policy::PolicyContext ctx{from, asset, amount, std::nullopt};
  require(provenance::check_allow(ctx, state.history, state.policy), ErrorKind::NotAllowed,
          "transfer not allowed for " + from.str());
  (void)(ledger_balance(state.ledger, to, asset) + amount);

  ProvenanceRecord rec;
  rec.op = asset.is_gsm() ? OpKind::GsmGrant : OpKind::Transfer;
  rec.asset = asset;
  rec.amount = amount;
  rec.from = from;
  rec.to = to;
  state.history.append(std::move(rec));

  if (const std::string* dom = gsm_domain(asset)) {
    if (!state.gsmAssignments.contains(*dom)) {
      ledger_credit(state.ledger, state.root, asset, Amount(1));
    }
    state.gsmAssignments[*dom] = to;
  }
  ledger_debit(state.ledger, from, asset, amount);
  ledger_credit(state.ledger, to, asset, amount);
  policy::record_spend(state.policy, ctx);
  ++state.stateVersion;
}

std::uint64_t withdraw(WalletState& state, const SubaccountId& u, const AssetId& asset,
                       Amount amount, const ExternalAddress& extDst,
                       std::optional<Bytes> payload) {
  require_positive(amount);
  require_subaccount(state, u);
  require(!asset.is_gsm(), ErrorKind::NotAllowed, "signing authority cannot leave the wallet");
  require_unit(asset, amount);
  require(ledger_balance(state.ledger, u, asset) >= amount, ErrorKind::InsufficientBalance,
          u.str() + " holds less than " + std::to_string(amount.value()) + " of " +
              asset.to_string());
  require_replay_consistent(state, u, asset);

  policy::PolicyContext ctx{u, asset, amount, extDst};
  require(provenance::check_allow(ctx, state.history, state.policy), ErrorKind::NotAllowed,
          "withdrawal not allowed for " + u.str() + " to " + extDst.to_string());

  // Broadcast entries form the prefix [0, nonce); the rest are pending.
  const std::uint64_t pending = state.outbox.size() - state.nonce;
  const std::uint64_t nonce = state.nonce + pending;

  ProvenanceRecord rec;
  rec.op = OpKind::Withdraw;
  rec.asset = asset;
  rec.amount = amount;
  rec.from = u;
  rec.to = OutboxParty{};
  rec.meta["dst"] = extDst.to_string();
  rec.meta["nonce"] = std::to_string(nonce);
  state.history.append(std::move(rec));

  ledger_debit(state.ledger, u, asset, amount);
  state.outbox.push_back(
      OutboxEntry{asset, amount, extDst, nonce, std::move(payload), OutboxStatus::Pending});
  policy::record_spend(state.policy, ctx);
  ++state.stateVersion;
  return nonce;
}

std::vector<chain::Receipt> process_outbox(WalletState& state, chain::SimChain& chain,
                                           const Signer& signer) {
  std::vector<chain::Receipt> receipts;
  while (state.nonce < state.outbox.size()) {
    OutboxEntry& entry = state.outbox[state.nonce];
    require(entry.status == OutboxStatus::Pending && entry.nonce == state.nonce,
            ErrorKind::MalformedLog,
            "outbox out of order at nonce " + std::to_string(state.nonce));
    chain::ChainAction action{entry.asset, entry.amount, state.keys.pk, entry.extDst, entry.nonce};
    chain::SignedTx tx = chain::sign_tx(action, signer);
    receipts.push_back(chain.submit_tx(tx));
    entry.status = OutboxStatus::Broadcast;
    ++state.nonce;
    ++state.stateVersion;
  }
  return receipts;
}

Bytes gsm_signing_payload(const std::string& dom, std::span<const std::uint8_t> message) {
  std::string s = canonical::dump(canonical::Json{{"dom", dom}, {"message", to_hex(message)}});
  return Bytes(s.begin(), s.end());
}

Bytes sign_gsm(WalletState& state, const SubaccountId& u, const std::string& dom,
               std::span<const std::uint8_t> message, const Signer& signer) {
  const AssetId asset = AssetId::gsm(dom);
  require(get_signer(state, dom) == u, ErrorKind::NotAllowed,
          u.str() + " is not the signer for " + dom);
  require_replay_consistent(state, u, asset);

  Bytes signature = signer.sign(gsm_signing_payload(dom, message));

  ProvenanceRecord rec;
  rec.op = OpKind::GsmSign;
  rec.asset = asset;
  rec.from = u;
  rec.meta["digest"] = to_hex(sha256(message));
  state.history.append(std::move(rec));
  ++state.stateVersion;
  return signature;
}

Amount get_balance(const WalletState& state, const SubaccountId& u, const AssetId& asset) {
  return ledger_balance(state.ledger, u, asset);
}

Amount total_balance(const WalletState& state, const AssetId& asset) {
  Amount sum;
  for (const auto& [u, balances] : state.ledger) {
    auto it = balances.find(asset);
    if (it != balances.end()) sum += it->second;
  }
  return sum;
}

SubaccountId get_signer(const WalletState& state, const std::string& dom) {
  auto it = state.gsmAssignments.find(dom);
  return it != state.gsmAssignments.end() ? it->second : state.root;
}

std::vector<ProvenanceRecord> history(const WalletState& state, const HistoryFilter& filter) {
  const auto& records = state.history.records();
  if (std::holds_alternative<std::monostate>(filter)) return records;

  auto involves = [](const std::optional<Party>& p, const SubaccountId& u) {
    return p && std::holds_alternative<SubaccountId>(*p) && std::get<SubaccountId>(*p) == u;
  };
  std::vector<ProvenanceRecord> out;
  for (const auto& r : records) {
    bool match = false;
    if (const auto* u = std::get_if<SubaccountId>(&filter)) {
      match = involves(r.from, *u) || involves(r.to, *u);
    } else if (const auto* a = std::get_if<AssetId>(&filter)) {
      match = r.asset && *r.asset == *a;
    } else {
      match = r.op == std::get<OpKind>(filter);
    }
    if (match) out.push_back(r);
  }
  return out;
}

Amount unclaimed_inbox(const WalletState& state, const AssetId& asset) {
  Amount sum;
  for (const auto& e : state.inbox) {
    if (!e.claimed && e.asset == asset) sum += e.amount;
  }
  return sum;
}

Amount pending_outbox(const WalletState& state, const AssetId& asset) {
  Amount sum;
  for (std::size_t i = state.nonce; i < state.outbox.size(); ++i) {
    if (state.outbox[i].asset == asset) sum += state.outbox[i].amount;
  }
  return sum;
}

}  // namespace pass::engine
