#include "pass/invariants.hpp"

#include <set>

#include "pass/engine.hpp"

namespace pass::invariants {

std::vector<std::string> check(const WalletState& state, const chain::SimChain& chain) {
  std::vector<std::string> out;

  if (provenance::replay_ledger(state.history) != state.ledger) {
    out.push_back("replay_ledger(H) differs from L");
  }

  std::set<AssetId> assets;
  for (const auto& [u, balances] : state.ledger) {
    for (const auto& [asset, amount] : balances) {
      if (amount.is_zero()) out.push_back("zero balance stored for " + u.str());
      assets.insert(asset);
    }
  }
  for (const auto& e : state.inbox) assets.insert(e.asset);
  for (const auto& e : state.outbox) assets.insert(e.asset);
  for (const auto& d : chain.deposit_log()) {
    if (d.to == state.keys.pk) assets.insert(d.asset);
  }

  for (const auto& asset : assets) {
    if (asset.is_gsm()) continue;
    const Amount held = engine::total_balance(state, asset);
    const Amount ext = chain.ext_dep(asset, state.keys.pk);
    if (held > ext) out.push_back("internal balance exceeds extDep for " + asset.to_string());
    const Amount accounted =
        held + engine::unclaimed_inbox(state, asset) + engine::pending_outbox(state, asset);
    if (accounted != ext) {
      out.push_back("conservation broken for " + asset.to_string() + ": " +
                    std::to_string(accounted.value()) + " accounted vs extDep " +
                    std::to_string(ext.value()));
    }
  }

  if (state.nonce > state.outbox.size()) out.push_back("nonce beyond outbox length");
  for (std::size_t i = 0; i < state.outbox.size(); ++i) {
    const OutboxEntry& e = state.outbox[i];
    if (e.nonce != i) out.push_back("outbox nonce gap at index " + std::to_string(i));
    const bool broadcast = i < state.nonce;
    if (broadcast != (e.status == OutboxStatus::Broadcast)) {
      out.push_back("outbox status out of order at nonce " + std::to_string(i));
    }
  }
  if (chain.account_nonce(state.keys.pk) != state.nonce) {
    out.push_back("chain nonce differs from wallet nonce");
  }

  for (const auto& [dom, signer] : state.gsmAssignments) {
    const AssetId asset = AssetId::gsm(dom);
    std::size_t holders = 0;
    for (const auto& [u, balances] : state.ledger) {
      auto it = balances.find(asset);
      if (it == balances.end()) continue;
      ++holders;
      if (u != signer || it->second != Amount(1)) {
        out.push_back("GSM domain " + dom + " held outside its assignment");
      }
    }
    if (holders != 1) out.push_back("GSM domain " + dom + " does not have exactly one holder");
  }
  return out;
}

}  // namespace pass::invariants
