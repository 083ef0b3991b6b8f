#pragma once

// Post-run invariant suite for a wallet and the chain it lives on. Used by
// the benchmark after every category and by the CLI `check` command.

#include <string>
#include <vector>

#include "pass/chain.hpp"
#include "pass/state.hpp"

namespace pass::invariants {

/// Checks, for every asset the wallet or chain has seen:
///   replay_ledger(H) == L,
///   sum L + unclaimed inbox + pending outbox == extDep, and sum L <= extDep,
///   outbox nonces dense with a broadcast prefix matching the chain nonce,
///   one holder per GSM domain matching its assignment.
/// Returns one human-readable line per violation; empty means all hold.
std::vector<std::string> check(const WalletState& state, const chain::SimChain& chain);

}  // namespace pass::invariants
