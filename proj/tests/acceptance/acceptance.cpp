// Acceptance suite: one PASS/FAIL line per criterion. Exit status is
// nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "pass/bench.hpp"
#include "pass/chain.hpp"
#include "pass/enclave.hpp"
#include "pass/engine.hpp"
#include "pass/provenance.hpp"
#include "pass/scenario.hpp"
#include "pass/serialize.hpp"
#include "random_world.hpp"

using namespace pass;
using pass::testing::RandomWorld;
using pass::testing::test_address;

namespace {

// Pinned scales and limits.
constexpr int kPrivacyPairs = 1000;
constexpr double kPrivacySeconds = 10.0;
constexpr int kEoaSequences = 100;
constexpr int kIntegritySeeds = 20;
constexpr int kIntegritySteps = 10000;
constexpr double kIntegritySeconds = 60.0;
constexpr int kFullReplayEvery = 1000;
constexpr int kAccessibilityWorlds = 200;
constexpr int kGsmSequences = 1000;
constexpr double kLivenessSeconds = 10.0;
constexpr int kTamperTrials = 100;
constexpr double kBenchSeconds = 300.0;

struct Outcome {
  bool pass = true;
  std::string detail;
  void check(bool cond, const std::string& what) {
    if (!cond && pass) {
      pass = false;
      detail = what;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string trace_bytes(const PublicState& pub) {
  return canonical::dump(chain::to_json(chain::external_trace(pub)));
}

std::string public_bytes(const WalletState& s) { return canonical::dump(canonical::to_json(project_public(s))); }

template <typename F>
std::optional<ErrorKind> error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

// 1. Internal transfers are invisible from outside.
Outcome privacy() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < kPrivacyPairs && o.pass; ++i) {
    RandomWorld base(100000 + i);
    for (int s = 0; s < 40; ++s) base.step();
    RandomWorld a = base;
    RandomWorld b = base;
    std::mt19937_64 rng(i);
    const int na = static_cast<int>(rng() % 46);      // 0..45 on one side
    const int nb = 5 + static_cast<int>(rng() % 46);  // 5..50 on the other
    for (int k = 0; k < na; ++k) a.random_internal_transfer();
    for (int k = 0; k < nb; ++k) b.random_internal_transfer();
    o.check(a.problems().empty() && b.problems().empty(), "oracle mismatch during transfers");

    o.check(public_bytes(a.state) == public_bytes(b.state), "PublicState differs in pair " + std::to_string(i));
    o.check(trace_bytes(project_public(a.state)) == trace_bytes(project_public(b.state)),
            "external trace differs in pair " + std::to_string(i));
    o.check(chain::observational_eq(a.state, b.state), "observational_eq false in pair " + std::to_string(i));

    // Broadcasting the pending queue from both must also look the same.
    engine::process_outbox(a.state, a.chain, a.signer());
    engine::process_outbox(b.state, b.chain, b.signer());
    o.check(canonical::dump(chain::to_json(a.chain.tx_log())) == canonical::dump(chain::to_json(b.chain.tx_log())),
            "chain transactions differ in pair " + std::to_string(i));
  }
  const double secs = seconds_since(t0);
  o.check(secs < kPrivacySeconds, "took " + std::to_string(secs) + " s");
  if (o.pass) o.detail = std::to_string(kPrivacyPairs) + " pairs in " + std::to_string(secs) + " s";
  return o;
}

// 2. The wallet looks like a single-key account.
Outcome eoa() {
  Outcome o;
  const AssetId assets[] = {AssetId::fungible("ETH"), AssetId::fungible("USDC")};
  for (int seq = 0; seq < kEoaSequences && o.pass; ++seq) {
    std::mt19937_64 rng(7000 + seq);
    enclave::SimKeySource keys("eoa/" + std::to_string(seq));
    WalletState w = engine::create_wallet(SubaccountId("root"), keys);
    enclave::KeyHandle signer(w.keys);
    chain::PlainEoa baseline(w.keys.pk);
    chain::SimChain cw, ce;
    std::map<AssetId, std::uint64_t> held;

    const int ops = 20 + static_cast<int>(rng() % 41);
    for (int k = 0; k < ops; ++k) {
      const AssetId& a = assets[rng() % 2];
      const ExternalAddress who = test_address(0xa0, static_cast<std::uint8_t>(rng() % 4));
      const unsigned r = rng() % 10;
      if (r < 4 || held[a] == 0) {
        const Amount x(1 + rng() % 500);
        for (auto* c : {&cw, &ce}) {
          c->faucet(who, a, x);
          c->external_deposit(who, w.keys.pk, a, x);
        }
        engine::claim_inbox(w, w.root, engine::inbox_deposit(w, a, x, who));
        baseline.deposit(a, x);
        held[a] += x.value();
      } else if (r < 8) {
        const Amount x(1 + rng() % held[a]);
        engine::withdraw(w, w.root, a, x, who);
        baseline.withdraw(a, x, who);
        held[a] -= x.value();
      } else {
        auto rw = engine::process_outbox(w, cw, signer);
        auto re = baseline.process(ce, signer);
        o.check(rw == re, "receipts differ in sequence " + std::to_string(seq));
      }
    }
    engine::process_outbox(w, cw, signer);
    baseline.process(ce, signer);
    o.check(trace_bytes(project_public(w)) == trace_bytes(baseline.public_state()),
            "trace differs in sequence " + std::to_string(seq));
    o.check(canonical::dump(canonical::to_json(project_public(w))) ==
                canonical::dump(canonical::to_json(baseline.public_state())),
            "public state differs in sequence " + std::to_string(seq));
    o.check(cw == ce, "chain state differs in sequence " + std::to_string(seq));
  }
  if (o.pass) o.detail = std::to_string(kEoaSequences) + " sequences byte-equal";
  return o;
}

struct IntegrityStats {
  Outcome integrity;
  Outcome replay;
  Outcome nonce;
  double seconds = 0;
};

// 3, 5 and 6 share the same randomized runs.
IntegrityStats integrity_runs() {
  IntegrityStats st;
  const auto t0 = std::chrono::steady_clock::now();
  std::uint64_t committed = 0;
  for (int seed = 0; seed < kIntegritySeeds; ++seed) {
    RandomWorld w(seed + 1);
    provenance::ReplayFolder fold(w.state.root);
    std::size_t folded = 0;

    for (int step = 0; step < kIntegritySteps; ++step) {
      committed += w.step().second ? 1 : 0;

      for (const auto& a : w.assets()) {
        const std::uint64_t held = engine::total_balance(w.state, a).value();
        const std::uint64_t ext = w.ext_dep(a);
        st.integrity.check(held <= ext, "sum L exceeds extDep for " + a.to_string());
        st.integrity.check(held + w.unclaimed(a) + w.pending(a) == ext,
                           "conservation identity broken for " + a.to_string() + " at seed " +
                               std::to_string(seed) + " step " + std::to_string(step));
      }

      const auto& records = w.state.history.records();
      try {
        for (; folded < records.size(); ++folded) fold.apply(records[folded]);
      } catch (const Error& e) {
        st.replay.check(false, std::string("fold rejected the engine's log: ") + e.what());
      }
      st.replay.check(fold.ledger() == w.state.ledger,
                      "replay differs from L at seed " + std::to_string(seed) + " step " + std::to_string(step));
      st.replay.check(w.shadow_as_ledger() == w.state.ledger,
                      "shadow ledger differs from L at seed " + std::to_string(seed));
      if (step % kFullReplayEvery == kFullReplayEvery - 1) {
        st.replay.check(provenance::replay_ledger(w.state.history) == w.state.ledger,
                        "full replay differs from L at seed " + std::to_string(seed));
        for (const auto& a : w.assets()) {
          st.integrity.check(engine::unclaimed_inbox(w.state, a).value() == w.unclaimed(a) &&
                                 engine::pending_outbox(w.state, a).value() == w.pending(a),
                             "inbox/outbox tallies differ from wallet for " + a.to_string());
          st.integrity.check(w.chain.ext_dep(a, w.state.keys.pk).value() == w.ext_dep(a),
                             "chain extDep differs from event tally for " + a.to_string());
        }
      }
    }
    for (const auto& p : w.problems()) {
      // The world's oracle checks cover FIFO and nonces as well as outcomes.
      if (p.find("FIFO") != std::string::npos || p.find("nonce") != std::string::npos ||
          p.find("broadcast") != std::string::npos) {
        st.nonce.check(false, p);
      } else {
        st.integrity.check(false, p);
      }
    }

    // Accepted nonces are exactly 0..k-1 and follow the outbox.
    engine::process_outbox(w.state, w.chain, w.signer());
    const auto& log = w.chain.tx_log();
    std::uint64_t k = 0;
    for (const auto& a : log) {
      if (a.from != w.state.keys.pk) continue;
      st.nonce.check(a.nonce == k, "gap in accepted nonces at " + std::to_string(k));
      const OutboxEntry& e = w.state.outbox.at(k);
      st.nonce.check(e.asset == a.asset && e.amount == a.amount && e.extDst == a.to,
                     "chain order differs from outbox order at nonce " + std::to_string(k));
      ++k;
    }
    st.nonce.check(k == w.state.outbox.size() && k == w.state.nonce, "not every outbox entry broadcast");
    st.nonce.check(w.chain.account_nonce(w.state.keys.pk) == k, "chain account nonce differs");

    // Replays of accepted transactions, and skipped nonces, are rejected.
    if (k > 0) {
      for (std::uint64_t n : {std::uint64_t{0}, k / 2, k - 1}) {
        const OutboxEntry& e = w.state.outbox[n];
        chain::SignedTx tx = chain::sign_tx({e.asset, e.amount, w.state.keys.pk, e.extDst, e.nonce}, w.signer());
        st.nonce.check(error_of([&] { w.chain.submit_tx(tx); }) == ErrorKind::NonceMismatch,
                       "replayed nonce " + std::to_string(n) + " accepted");
      }
    }
    const AssetId eth = AssetId::fungible("ETH");
    chain::SignedTx future = chain::sign_tx({eth, Amount(1), w.state.keys.pk, test_address(0xee, 0), k + 1}, w.signer());
    st.nonce.check(error_of([&] { w.chain.submit_tx(future); }) == ErrorKind::NonceMismatch,
                   "nonce gap accepted");
    st.replay.check(provenance::replay_ledger(w.state.history) == w.state.ledger, "final replay differs");
  }
  st.seconds = seconds_since(t0);
  st.integrity.check(st.seconds < kIntegritySeconds, "took " + std::to_string(st.seconds) + " s");
  const std::string scale = std::to_string(kIntegritySeeds) + " seeds x " + std::to_string(kIntegritySteps) +
                            " transitions (" + std::to_string(committed) + " committed) in " +
                            std::to_string(st.seconds) + " s";
  if (st.integrity.pass) st.integrity.detail = scale;
  if (st.replay.pass) st.replay.detail = "replay == L after every transition; " + scale;
  if (st.nonce.pass) st.nonce.detail = "nonces dense, replays rejected, FIFO kept";
  return st;
}

// 4. Every holder can spend its whole balance.
Outcome accessibility() {
  Outcome o;
  std::uint64_t withdrawals = 0;
  for (int i = 0; i < kAccessibilityWorlds && o.pass; ++i) {
    RandomWorld w(50000 + i);
    const int steps = 20 + i % 80;
    for (int s = 0; s < steps; ++s) w.step();
    for (const auto& a : w.assets()) {
      std::uint64_t sum = 0;
      WalletState drained = w.state;
      for (const auto& u : w.subaccounts()) {
        const Amount bal = engine::get_balance(w.state, u, a);
        if (bal.is_zero()) continue;
        sum += bal.value();
        WalletState copy = w.state;
        auto err = error_of([&] { engine::withdraw(copy, u, a, bal, test_address(0xee, 1)); });
        o.check(!err, u.str() + " could not withdraw its full " + a.to_string());
        o.check(engine::get_balance(copy, u, a).is_zero(), "balance left after full withdrawal");
        o.check(!error_of([&] { engine::withdraw(drained, u, a, bal, test_address(0xee, 1)); }),
                "sequential drain failed");
        ++withdrawals;
      }
      o.check(sum == engine::total_balance(w.state, a).value(), "holders do not sum to total_balance");
      o.check(engine::total_balance(drained, a).is_zero(), "value left after every holder withdrew");
    }
  }
  if (o.pass) o.detail = std::to_string(withdrawals) + " full-balance withdrawals";
  return o;
}

// 7. Exactly one signer per domain; signing works iff the caller is it.
Outcome gsm() {
  Outcome o;
  const std::string doms[] = {"ens", "dao", "idle"};
  const SubaccountId subs[] = {SubaccountId("root"), SubaccountId("a"), SubaccountId("b"), SubaccountId("c")};
  std::uint64_t signs = 0;
  for (int seq = 0; seq < kGsmSequences && o.pass; ++seq) {
    std::mt19937_64 rng(9000 + seq);
    enclave::SimKeySource keys("gsm/" + std::to_string(seq));
    WalletState w = engine::create_wallet(subs[0], keys);
    for (int i = 1; i < 4; ++i) engine::add_subaccount(w, subs[i]);
    enclave::KeyHandle signer(w.keys);
    std::map<std::string, SubaccountId> holder;
    std::set<std::string> touched;
    for (const auto& d : doms) holder[d] = subs[0];

    const int ops = 5 + static_cast<int>(rng() % 30);
    for (int k = 0; k < ops; ++k) {
      const std::string& dom = doms[rng() % 2];  // "idle" is never granted
      const SubaccountId& caller = subs[rng() % 4];
      if (rng() % 2 == 0) {
        const SubaccountId& to = subs[rng() % 4];
        const bool expect = caller == holder[dom] && to != caller;
        const bool ok = !error_of([&] { engine::internal_transfer(w, caller, to, AssetId::gsm(dom), Amount(1)); });
        o.check(ok == expect, "grant outcome wrong in sequence " + std::to_string(seq));
        if (ok) {
          holder[dom] = to;
          touched.insert(dom);
        }
      } else {
        const std::string msg = "m" + std::to_string(k);
        Bytes sig;
        const bool ok = !error_of([&] { sig = engine::sign_gsm(w, caller, dom, as_bytes(msg), signer); });
        o.check(ok == (caller == holder[dom]), "sign outcome wrong in sequence " + std::to_string(seq));
        if (ok) {
          o.check(verify_signature(w.keys.pk, engine::gsm_signing_payload(dom, as_bytes(msg)), sig),
                  "GSM signature does not verify");
          ++signs;
        }
      }
      for (const auto& d : doms) {
        o.check(engine::get_signer(w, d) == holder[d], "get_signer wrong for " + d);
        int signers = 0;
        for (const auto& u : subs) {
          const bool explicitUnit = engine::get_balance(w, u, AssetId::gsm(d)) == Amount(1);
          const bool implicitUnit = !touched.contains(d) && u == w.root;
          signers += (explicitUnit || implicitUnit) ? 1 : 0;
        }
        o.check(signers == 1, "domain " + d + " has " + std::to_string(signers) + " signers");
      }
    }
  }
  if (o.pass) o.detail = std::to_string(kGsmSequences) + " sequences, " + std::to_string(signs) + " signatures";
  return o;
}

// 8. Bounded recovery under the fault matrix.
Outcome liveness() {
  using enclave::FaultEvent;
  using enclave::FaultKind;
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const scenario::LivenessConfig cfg;  // n=5 t=3 q=3, one approver, deltaT=4
  const std::uint64_t tauMax = 2 * cfg.deltaT + 8;
  std::uint64_t worst = 0;
  int runs = 0;

  std::vector<std::vector<int>> downSets{{}};
  for (int a = 0; a < 5; ++a) {
    downSets.push_back({a});
    for (int b = a + 1; b < 5; ++b) downSets.push_back({a, b});
  }
  for (const auto& down : downSets) {
    for (int primary = 0; primary < 3; ++primary) {  // none, crash, compromise
      for (std::uint64_t at : {0, 1, 3, 6}) {
        std::vector<FaultEvent> schedule;
        for (int node : down) schedule.push_back({at, FaultKind::KmsDown, std::to_string(node)});
        if (primary == 1) schedule.push_back({at, FaultKind::Crash, "e0"});
        if (primary == 2) schedule.push_back({at, FaultKind::Compromise, "e0"});
        scenario::LivenessReport r = scenario::run_liveness(schedule, cfg);
        ++runs;
        o.check(r.ok, "op failed: " + r.detail);
        o.check(r.rounds <= tauMax, "tau " + std::to_string(r.rounds) + " exceeds bound");
        worst = std::max(worst, r.rounds);
      }
    }
  }
  // A third KMS node going down temporarily is survivable when it returns.
  {
    std::vector<FaultEvent> s{{0, FaultKind::KmsDown, "0"}, {0, FaultKind::KmsDown, "1"},
                              {0, FaultKind::KmsDown, "2"}, {3, FaultKind::KmsUp, "2"},
                              {0, FaultKind::Crash, "e0"}};
    scenario::LivenessReport r = scenario::run_liveness(s, cfg);
    ++runs;
    o.check(r.ok && r.rounds <= tauMax, "temporary KMS outage not survived");
  }
  for (std::uint64_t at : {0, 2, 5}) {
    std::vector<FaultEvent> all{{at, FaultKind::Compromise, "e0"},
                                {at, FaultKind::Compromise, "e1"},
                                {at, FaultKind::Compromise, "e2"}};
    scenario::LivenessReport r = scenario::run_liveness(all, cfg);
    ++runs;
    o.check(!r.ok && r.error == ErrorKind::NotAttested, "all-compromised run did not end in NotAttested");
  }
  const double secs = seconds_since(t0);
  o.check(secs < kLivenessSeconds, "took " + std::to_string(secs) + " s");
  if (o.pass) {
    o.detail = std::to_string(runs) + " schedules, worst tau " + std::to_string(worst) + " <= " +
               std::to_string(tauMax) + ", " + std::to_string(secs) + " s";
  }
  return o;
}

// 9. Any tampering breaks attestation; rotation retires the old epoch.
Outcome attestation_and_rotation() {
  Outcome o;
  int detected = 0;
  for (int trial = 0; trial < kTamperTrials; ++trial) {
    RandomWorld w(20000 + trial);
    while (w.state.history.size() < 5) w.step();
    for (int s = 0; s < 40; ++s) w.step();
    const auto att = provenance::attest(w.state.history, w.signer(), trial);
    std::vector<ProvenanceRecord> recs = w.state.history.records();
    o.check(provenance::verify_attestation(w.state.keys.pk, att, recs), "honest attestation rejected");

    std::mt19937_64 rng(trial);
    const std::size_t i = rng() % recs.size();
    ProvenanceRecord& r = recs[i];
    switch (trial % 7) {
      case 0: r.amount = Amount(r.amount ? r.amount->value() + 1 : 1); break;
      case 1: r.op = r.op == OpKind::Transfer ? OpKind::Claim : OpKind::Transfer; break;
      case 2: r.meta["tampered"] = "1"; break;
      case 3: r.seq += 1; break;
      case 4: r.asset = AssetId::fungible("FAKE"); break;
      case 5: r.to = SubaccountId("mallory"); break;
      default: recs.erase(recs.begin() + static_cast<std::ptrdiff_t>(i)); break;
    }
    detected += provenance::verify_attestation(w.state.keys.pk, att, recs) ? 0 : 1;
  }
  o.check(detected == kTamperTrials, std::to_string(detected) + "/" + std::to_string(kTamperTrials) + " tampers detected");

  for (int i = 0; i < 20 && o.pass; ++i) {
    RandomWorld w(30000 + i);
    for (int s = 0; s < 30; ++s) w.step();
    enclave::KmsConfig kms = enclave::KmsConfig::create(5, 3, "rot/" + std::to_string(i));
    enclave::ContainerMeta meta{enclave::wallet_image_measurement(), "registry", 3, kms.epoch};
    const auto oldKey = enclave::derive_key(kms, "c");
    const auto oldC = enclave::seal(w.state, oldKey, "c", meta);
    const auto rot = enclave::rotate_key(kms, oldC);
    const auto newKey = enclave::derive_key(rot.kms, "c");
    o.check(oldKey != newKey, "rotation kept the key");
    o.check(error_of([&] { enclave::unseal(rot.container, oldKey); }) == ErrorKind::SealedStateCorrupt,
            "old key opened the rotated container");
    o.check(error_of([&] { enclave::unseal(oldC, newKey); }) == ErrorKind::SealedStateCorrupt,
            "new key opened an old-epoch container");
    o.check(error_of([&] { enclave::unseal(oldC, oldKey, rot.container.meta.stateVersion); }) ==
                ErrorKind::RollbackDetected,
            "old-epoch container accepted after rotation");
    WalletState back = enclave::unseal(rot.container, newKey);
    o.check(canonical::canonical_string(back) == canonical::canonical_string(w.state) && back.keys == w.state.keys,
            "rotated container does not round-trip");
    o.check(rot.container.meta.stateVersion == oldC.meta.stateVersion + 1, "rotation did not bump stateVersion");
  }
  if (o.pass) o.detail = std::to_string(detected) + "/" + std::to_string(kTamperTrials) + " tampers detected; rotation checks hold";
  return o;
}

// 10. Benchmark methodology.
Outcome benchmark() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  bench::BenchConfig cfg;  // 100 ops, 10 trials, 10,000 batch, 5 threads
  bench::StatsTable t = bench::run_bench(cfg);
  const double secs = seconds_since(t0);
  o.check(t.rows.size() == 9, "expected 9 rows");
  for (const auto& r : t.rows) {
    o.check(r.samples.size() == cfg.trials, r.operation + " ran the wrong number of trials");
    o.check(std::isfinite(r.mean) && std::isfinite(r.std) && r.min <= r.mean && r.mean <= r.max && r.std >= 0,
            r.operation + " has inconsistent statistics");
    if (r.operation == "batch_deposit_claim") o.check(r.opsPerTrial == cfg.batchSize, "batch size not honoured");
  }
  o.check(t.invariants_ok(), t.violations.empty() ? "" : t.violations.front());
  o.check(t.to_csv().rfind("operation,mean,std,min,max\n", 0) == 0, "CSV header wrong");
  o.check(bench::multi_threaded_digest(cfg.seed, cfg.opsPerTrial, 1) ==
              bench::multi_threaded_digest(cfg.seed, cfg.opsPerTrial, cfg.threads),
          "1-thread and 5-thread runs diverge");
  o.check(secs < kBenchSeconds, "took " + std::to_string(secs) + " s");
  if (o.pass) o.detail = "9 categories in " + std::to_string(secs) + " s, invariants hold";
  return o;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int n, const char* name, const Outcome& o) {
    std::printf("criterion %2d %-24s %s  %s\n", n, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  };
  auto guarded = [](const std::function<Outcome()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      Outcome o;
      o.check(false, std::string("threw: ") + e.what());
      return o;
    }
  };

  report(1, "privacy", guarded(privacy));
  report(2, "eoa-indistinguishable", guarded(eoa));
  IntegrityStats st;
  try {
    st = integrity_runs();
  } catch (const std::exception& e) {
    st.integrity.check(false, std::string("threw: ") + e.what());
    st.replay.check(false, "integrity runs aborted");
    st.nonce.check(false, "integrity runs aborted");
  }
  report(3, "provenance-integrity", st.integrity);
  report(4, "accessibility", guarded(accessibility));
  report(5, "replay-oracle", st.replay);
  report(6, "nonce-fifo", st.nonce);
  report(7, "gsm-totality", guarded(gsm));
  report(8, "liveness", guarded(liveness));
  report(9, "attestation-rotation", guarded(attestation_and_rotation));
  report(10, "bench", guarded(benchmark));
  return failures == 0 ? 0 : 1;
}
