#include "fixture.hpp"
#include "pass/scenario.hpp"

using namespace pass;
using namespace pass::enclave;
using pass::unit::addr;
using pass::unit::kEth;
using pass::unit::Wallet;

namespace {

const std::string kCid = "wallet";

Registry registry(std::uint64_t q = 1, std::set<std::string> approvers = {"gov0"}) {
  Registry r;
  r.allowedMeasurements = {wallet_image_measurement()};
  r.approvers = std::move(approvers);
  r.q = q;
  r.deltaT = 4;
  return r;
}

Enclave make_enclave(std::string id, Vendor v = Vendor::VendorA) {
  return Enclave{std::move(id), v, wallet_image_measurement(), EnclaveStatus::Honest};
}

SealedContainer sealed(const WalletState& s, const KmsConfig& kms, std::uint64_t version = 0) {
  auto c = seal(s, derive_key(kms, kCid), kCid,
                ContainerMeta{wallet_image_measurement(), "registry", version, kms.epoch});
  c.host = "e0";
  return c;
}

ErrorKind error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("key derivation needs t of n nodes and is deterministic") {
  auto kms = KmsConfig::create(5, 3, "k");
  Hash32 k = derive_key(kms, kCid);
  CHECK(derive_key(KmsConfig::create(5, 3, "k"), kCid) == k);
  CHECK(derive_key(kms, "other") != k);
  CHECK(derive_key(KmsConfig::create(5, 3, "k2"), kCid) != k);

  kms.nodeUp[0] = kms.nodeUp[1] = false;
  CHECK(kms.up_count() == 3);
  CHECK(derive_key(kms, kCid) == k);
  kms.nodeUp[2] = false;
  CHECK(error_of([&] { derive_key(kms, kCid); }) == ErrorKind::KeyUnavailable);

  CHECK(error_of([] { KmsConfig::create(3, 4, "x"); }) == ErrorKind::InvalidArgument);
  CHECK(error_of([] { KmsConfig::create(3, 0, "x"); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("seal round-trips and detects tampering and rollback") {
  Wallet w;
  w.fund(w.a, kEth, 12);
  auto kms = KmsConfig::create(5, 3, "k");
  auto c = sealed(w.state, kms, 3);
  WalletState back = unseal(c, derive_key(kms, kCid));
  CHECK(back == w.state);
  CHECK(back.keys.sk.present());
  CHECK(container_from_json(to_json(c)) == c);

  auto flip = c;
  flip.ciphertext[flip.ciphertext.size() / 2] ^= 1;
  CHECK(error_of([&] { unseal(flip, derive_key(kms, kCid)); }) == ErrorKind::SealedStateCorrupt);
  auto meta = c;
  meta.meta.stateVersion = 9;
  CHECK(error_of([&] { unseal(meta, derive_key(kms, kCid)); }) == ErrorKind::SealedStateCorrupt);
  auto renamed = c;
  renamed.containerId = "other";
  CHECK(error_of([&] { unseal(renamed, derive_key(kms, kCid)); }) == ErrorKind::SealedStateCorrupt);
  CHECK(error_of([&] { unseal(c, derive_key(KmsConfig::create(5, 3, "z"), kCid)); }) ==
        ErrorKind::SealedStateCorrupt);
  auto truncated = c;
  truncated.ciphertext.resize(10);
  CHECK(error_of([&] { unseal(truncated, derive_key(kms, kCid)); }) ==
        ErrorKind::SealedStateCorrupt);

  CHECK_NOTHROW(unseal(c, derive_key(kms, kCid), 3));
  CHECK(error_of([&] { unseal(c, derive_key(kms, kCid), 4); }) == ErrorKind::RollbackDetected);

  // Sealing is deterministic in the state and metadata.
  CHECK(sealed(w.state, kms, 3) == c);
}

TEST_CASE("rotation retires the old epoch") {
  Wallet w;
  auto kms = KmsConfig::create(5, 3, "k");
  auto c = sealed(w.state, kms);
  Hash32 old_key = derive_key(kms, kCid);
  auto r = rotate_key(kms, c);
  CHECK(r.kms.epoch == 1);
  CHECK(r.container.meta.keyEpoch == 1);
  CHECK(r.container.meta.stateVersion == 1);
  CHECK(error_of([&] { unseal(r.container, old_key); }) == ErrorKind::SealedStateCorrupt);
  CHECK(unseal(r.container, derive_key(r.kms, kCid)) == w.state);
}

TEST_CASE("quotes and migration") {
  Wallet w;
  auto kms = KmsConfig::create(5, 3, "k");
  auto reg = registry();
  auto c = sealed(w.state, kms);
  Enclave e0 = make_enclave("e0"), e1 = make_enclave("e1", Vendor::VendorB);

  CHECK(verify_quote(reg, attest_quote(e1)));
  Quote forged = attest_quote(e1);
  forged.compromised = false;
  forged.measurement[0] ^= 1;
  CHECK_FALSE(verify_quote(reg, forged));
  Enclave odd = e1;
  odd.measurement = sha256("other image");
  CHECK_FALSE(verify_quote(reg, attest_quote(odd)));

  auto moved = migrate(c, e0, e1, kms, reg);
  CHECK(moved.host == "e1");
  CHECK(unseal(moved, derive_key(kms, kCid)) == unseal(c, derive_key(kms, kCid)));

  Enclave bad = e1;
  bad.status = EnclaveStatus::Compromised;
  CHECK(error_of([&] { migrate(c, e0, bad, kms, reg); }) == ErrorKind::NotAttested);
  bad.status = EnclaveStatus::Crashed;
  CHECK(error_of([&] { migrate(c, e0, bad, kms, reg); }) == ErrorKind::NotAttested);
  CHECK(error_of([&] { migrate(c, e1, e0, kms, reg); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("linear relaxation table") {
  // q=3, deltaT=4: 3 until round 4, then 2 until round 8, then 1.
  const std::vector<std::uint64_t> expected{3, 3, 3, 3, 2, 2, 2, 2, 1, 1, 1, 1, 1};
  for (std::uint64_t e = 0; e < expected.size(); ++e) {
    CHECK(linear_relaxation(3, e, 4) == expected[e]);
  }
  for (std::uint64_t q = 1; q <= 6; ++q) {
    for (std::uint64_t d = 1; d <= 5; ++d) {
      std::uint64_t prev = q;
      for (std::uint64_t e = 0; e < 40; ++e) {
        auto v = linear_relaxation(q, e, d);
        CHECK(v <= prev);
        CHECK(v >= 1);
        prev = v;
      }
      CHECK(prev == 1);
    }
  }
  auto reg = registry(3, {"g1", "g2", "g3"});
  CHECK_FALSE(quorum_check(reg, {"g1"}, 0));
  CHECK(quorum_check(reg, {"g1", "g2", "g3"}, 0));
  CHECK(quorum_check(reg, {"g1", "g2"}, 4));
  CHECK(quorum_check(reg, {"g1"}, 8));
  CHECK_FALSE(quorum_check(reg, {"stranger"}, 100));
}

TEST_CASE("liveness reference values") {
  using scenario::run_liveness;
  auto healthy = run_liveness({});
  REQUIRE(healthy.ok);
  CHECK(healthy.rounds == 8);  // q=3 relaxes to the lone approver after 2 steps

  scenario::LivenessConfig one;
  one.quorum = 1;
  auto quick = run_liveness({}, one);
  REQUIRE(quick.ok);
  CHECK(quick.rounds == 0);
  CHECK_FALSE(quick.migrated);

  auto crash = run_liveness({{0, FaultKind::Crash, "e0"}});
  REQUIRE(crash.ok);
  CHECK(crash.migrated);
  CHECK_FALSE(crash.rotated);
  CHECK(crash.rounds == 8);

  auto compromise = run_liveness({{0, FaultKind::Compromise, "e0"}});
  REQUIRE(compromise.ok);
  CHECK(compromise.migrated);
  CHECK(compromise.rotated);
  CHECK(compromise.rounds == 8);

  auto all = run_liveness({{0, FaultKind::Compromise, "e0"},
                           {0, FaultKind::Compromise, "e1"},
                           {0, FaultKind::Compromise, "e2"}});
  CHECK_FALSE(all.ok);
  CHECK(all.error == ErrorKind::NotAttested);

  scenario::LivenessConfig none;
  none.approvers = 0;
  auto stuck = run_liveness({}, none);
  CHECK_FALSE(stuck.ok);
  CHECK(stuck.error == ErrorKind::QuorumUnreachable);

  auto dark = run_liveness({{0, FaultKind::KmsDown, "0"},
                            {0, FaultKind::KmsDown, "1"},
                            {0, FaultKind::KmsDown, "2"}});
  CHECK_FALSE(dark.ok);
  CHECK(dark.error == ErrorKind::KeyUnavailable);

  auto outage = run_liveness({{0, FaultKind::KmsDown, "0"},
                              {0, FaultKind::KmsDown, "1"},
                              {0, FaultKind::KmsDown, "2"},
                              {3, FaultKind::KmsUp, "2"}});
  CHECK(outage.ok);
}

TEST_CASE("recovery reseals with increasing versions and audits the hop") {
  Wallet w;
  w.fund(w.root, kEth, 10);
  auto kms = KmsConfig::create(5, 3, "k");
  auto reg = registry();
  World world;
  world.enclaves = {make_enclave("e0"), make_enclave("e1", Vendor::VendorB)};
  world.approvals = {"gov0"};
  world.schedule = {{0, FaultKind::Crash, "e0"}};
  auto c = sealed(w.state, kms, w.state.stateVersion);

  auto op = [](WalletState& s, const Signer&) {
    engine::internal_transfer(s, SubaccountId("root"), SubaccountId("a"), AssetId::fungible("ETH"),
                              Amount(4));
  };
  auto r = recover_and_execute(c, op, kms, reg, world);
  CHECK(r.migrated);
  CHECK(r.container.host == "e1");
  CHECK(r.container.meta.stateVersion > c.meta.stateVersion);
  CHECK_FALSE(r.opError);
  WalletState after = unseal(r.container, derive_key(kms, kCid));
  CHECK(engine::get_balance(after, SubaccountId("a"), kEth) == Amount(4));
  CHECK(engine::history(after, OpKind::Migration).size() == 1);
  CHECK(provenance::replay_ledger(after.history) == after.ledger);

  // The anti-rollback counter now rejects the pre-recovery container.
  CHECK(error_of([&] { recover_and_execute(c, op, kms, reg, world); }) ==
        ErrorKind::RollbackDetected);

  // A rejected operation is reported, and only the recovery audit is kept.
  auto bad = [](WalletState& s, const Signer&) {
    engine::internal_transfer(s, SubaccountId("a"), SubaccountId("b"), AssetId::fungible("ETH"),
                              Amount(99));
  };
  auto r2 = recover_and_execute(r.container, bad, kms, reg, world);
  REQUIRE(r2.opError);
  CHECK(r2.opError->kind() == ErrorKind::InsufficientBalance);
  CHECK(unseal(r2.container, derive_key(kms, kCid)).ledger == after.ledger);
}

TEST_CASE("fault schedules parse from json") {
  auto faults = faults_from_json(nlohmann::json::parse(
      R"([{"round":2,"event":"crash","target":"e0"},{"round":3,"event":"kms-down","target":1}])"));
  REQUIRE(faults.size() == 2);
  CHECK(faults[0].kind == FaultKind::Crash);
  CHECK(faults[1].kind == FaultKind::KmsDown);
  CHECK(faults[1].target == "1");
  CHECK(error_of([] { faults_from_json(nlohmann::json::parse(R"([{"round":0,"event":"boom"}])")); }) ==
        ErrorKind::ParseError);
  CHECK(error_of([] { faults_from_json(nlohmann::json::object()); }) == ErrorKind::ParseError);
  for (auto k : {FaultKind::Crash, FaultKind::Compromise, FaultKind::KmsDown, FaultKind::KmsUp,
                 FaultKind::Approve}) {
    CHECK(parse_fault_kind(to_string(k)) == k);
  }
}
