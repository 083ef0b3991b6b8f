#include "pass/state.hpp"

namespace pass {

PublicState project_public(const WalletState& state) {
  PublicState pub;
  pub.pk = state.keys.pk;
  pub.outbox.txs = state.outbox;
  pub.outbox.nonce = state.nonce;

  // GSM domains are wallet-internal authority, not on-chain value.
  for (const auto& [u, balances] : state.ledger) {
    for (const auto& [asset, amount] : balances) {
      if (!asset.is_gsm()) pub.assetTotals[asset] += amount;
    }
  }
  for (const auto& e : state.inbox) {
    if (!e.claimed) pub.assetTotals[e.asset] += e.amount;
  }
  return pub;
}

}  // namespace pass
