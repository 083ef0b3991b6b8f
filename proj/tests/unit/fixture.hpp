#pragma once

#include <doctest.h>

#include "pass/chain.hpp"
#include "pass/enclave.hpp"
#include "pass/engine.hpp"
#include "pass/serialize.hpp"
#include "random_world.hpp"

namespace pass::unit {

inline const AssetId kEth = AssetId::fungible("ETH");
inline const AssetId kUsdc = AssetId::fungible("USDC");

inline ExternalAddress addr(std::uint8_t tag, std::uint8_t i = 0) {
  return testing::test_address(tag, i);
}

/// Fresh wallet with root plus subaccounts a, b, c and a key handle.
struct Wallet {
  enclave::SimKeySource keys{"unit"};
  WalletState state;
  std::optional<enclave::KeyHandle> signer;
  chain::SimChain chain;
  SubaccountId root{"root"}, a{"a"}, b{"b"}, c{"c"};

  Wallet() {
    state = engine::create_wallet(root, keys);
    signer.emplace(state.keys);
    for (const auto& u : {a, b, c}) engine::add_subaccount(state, u);
  }

  /// Deposits on chain and mirrors it, then claims for the entitled
  /// subaccount (root unless the sender is bound).
  std::uint64_t fund(const SubaccountId& u, const AssetId& asset, std::uint64_t x,
                     std::uint8_t senderIndex = 0) {
    ExternalAddress from = addr(0xd0, senderIndex);
    if (u != root) engine::bind_sender(state, from, u);
    chain.faucet(from, asset, Amount(x));
    auto ev = chain.external_deposit(from, state.keys.pk, asset, Amount(x));
    auto id = engine::inbox_deposit(state, ev.asset, ev.amount, ev.sender);
    engine::claim_inbox(state, u, id);
    return id;
  }
};

/// Runs `op`, expects it to throw `kind`, and checks the state is unchanged.
template <typename F>
void expect_atomic_error(WalletState& state, ErrorKind kind, F&& op) {
  std::string before = canonical::canonical_string(state);
  WalletState copy = state;
  try {
    op();
    FAIL("expected " << to_string(kind));
  } catch (const Error& e) {
    CHECK_MESSAGE(e.kind() == kind, "got " << to_string(e.kind()) << ": " << e.what());
  }
  CHECK(canonical::canonical_string(state) == before);
  CHECK(state == copy);
}

}  // namespace pass::unit
