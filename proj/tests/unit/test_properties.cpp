// Randomized properties over seeded worlds. Each world checks every step
// against its own oracles; these cases add properties across states.

#include "fixture.hpp"
#include "pass/invariants.hpp"
#include "pass/persistence.hpp"
#include "pass/scenario.hpp"
#include "pass/state.hpp"

using namespace pass;
using pass::testing::RandomWorld;

TEST_CASE("random worlds agree with their oracles") {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    RandomWorld w(seed);
    for (int i = 0; i < 800; ++i) w.step();
    for (const auto& p : w.problems()) FAIL_CHECK(p);
    CHECK(invariants::check(w.state, w.chain).empty());
    CHECK(provenance::replay_ledger(w.state.history) == w.shadow_as_ledger());
    for (const auto& a : w.assets()) {
      if (a.is_gsm()) continue;
      CHECK(engine::total_balance(w.state, a).value() + w.unclaimed(a) + w.pending(a) == w.ext_dep(a));
      CHECK(w.chain.ext_dep(a, w.state.keys.pk).value() == w.ext_dep(a));
    }
  }
}

TEST_CASE("every holder can withdraw everything") {
  for (std::uint64_t seed = 200; seed < 220; ++seed) {
    RandomWorld w(seed);
    for (int i = 0; i < 300; ++i) w.step();
    WalletState s = w.state;
    for (const auto& a : w.assets()) {
      if (a.is_gsm()) continue;
      std::uint64_t sum = 0;
      for (const auto& u : w.subaccounts()) {
        Amount bal = engine::get_balance(s, u, a);
        if (bal.is_zero()) continue;
        sum += bal.value();
        engine::withdraw(s, u, a, bal, pass::unit::addr(0xee));
        CHECK(engine::get_balance(s, u, a).is_zero());
      }
      CHECK(sum == engine::total_balance(w.state, a).value());
      CHECK(engine::total_balance(s, a).is_zero());
    }
    chain::SimChain c = w.chain;
    engine::process_outbox(s, c, w.signer());
    CHECK(invariants::check(s, c).empty());
  }
}

TEST_CASE("internal transfers are invisible from outside") {
  for (std::uint64_t seed = 300; seed < 340; ++seed) {
    RandomWorld w(seed);
    for (int i = 0; i < 100; ++i) w.step();
    WalletState base = w.state;
    for (int i = 0; i < 20; ++i) w.random_internal_transfer();
    CHECK(chain::observational_eq(base, w.state));
    CHECK(chain::external_trace(project_public(base)) ==
          chain::external_trace(project_public(w.state)));
    CHECK(persistence::encode(base) != persistence::encode(w.state));
  }
}

TEST_CASE("failed operations leave the state byte-identical") {
  RandomWorld w(400);
  for (int i = 0; i < 200; ++i) w.step();
  std::mt19937_64 rng(401);
  const auto& subs = w.subaccounts();
  const auto& assets = w.assets();
  int failures = 0;
  for (int i = 0; i < 2000; ++i) {
    WalletState s = w.state;
    const std::string before = canonical::canonical_string(s);
    auto u = subs[rng() % subs.size()], v = subs[rng() % subs.size()];
    auto a = assets[rng() % assets.size()];
    Amount x(rng() % 3 == 0 ? 0 : rng() % 400);
    try {
      switch (rng() % 4) {
        case 0: engine::internal_transfer(s, u, v, a, x); break;
        case 1: engine::withdraw(s, u, a, x, pass::unit::addr(1)); break;
        case 2: engine::claim_inbox(s, u, rng() % (s.nextEntryId + 2)); break;
        default: engine::sign_gsm(s, u, rng() % 2 ? "ens" : "dao", Bytes{1}, w.signer()); break;
      }
      CHECK(s.stateVersion == w.state.stateVersion + 1);
    } catch (const Error&) {
      ++failures;
      CHECK(canonical::canonical_string(s) == before);
      CHECK(s == w.state);
    }
  }
  CHECK(failures > 100);
}

TEST_CASE("snapshots are deterministic and round-trip on random states") {
  for (std::uint64_t seed = 500; seed < 520; ++seed) {
    RandomWorld w(seed);
    for (int i = 0; i < 150; ++i) w.step();
    std::string text = persistence::encode(w.state);
    WalletState back = persistence::decode(text).state;
    CHECK(persistence::encode(back) == text);
    CHECK(project_public(back) == project_public(w.state));
    RandomWorld again(seed);
    for (int i = 0; i < 150; ++i) again.step();
    CHECK(persistence::encode(again.state) == text);
  }
}

TEST_CASE("sealing round-trips random states") {
  auto kms = enclave::KmsConfig::create(5, 3, "prop");
  Hash32 key = enclave::derive_key(kms, "c");
  for (std::uint64_t seed = 600; seed < 615; ++seed) {
    RandomWorld w(seed);
    for (int i = 0; i < 100; ++i) w.step();
    auto c = enclave::seal(w.state, key, "c",
                           {enclave::wallet_image_measurement(), "r", seed, kms.epoch});
    CHECK(enclave::unseal(c, key, seed) == w.state);
  }
}

TEST_CASE("stateVersion never decreases across recovery") {
  std::mt19937_64 rng(700);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<enclave::FaultEvent> schedule;
    const char* targets[] = {"e0", "e1"};
    if (rng() % 2) schedule.push_back({rng() % 5, enclave::FaultKind::Crash, targets[rng() % 2]});
    if (rng() % 2) schedule.push_back({rng() % 5, enclave::FaultKind::Compromise, "e0"});
    if (rng() % 2) schedule.push_back({0, enclave::FaultKind::KmsDown, std::to_string(rng() % 5)});
    auto r = scenario::run_liveness(schedule);
    REQUIRE(r.ok);
    CHECK(r.rounds <= r.tauMax);
    // Setup reseals once; each rotation and the execution add one more.
    CHECK(r.finalStateVersion >= 1);
  }
}
