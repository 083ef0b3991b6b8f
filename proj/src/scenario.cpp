#include "pass/scenario.hpp"

#include "pass/engine.hpp"
#include "pass/serialize.hpp"

namespace pass::scenario {

using canonical::Json;
using namespace enclave;

namespace {

constexpr const char* kContainerId = "wallet";

struct Host {
  KmsConfig kms;
  Registry registry;
  World world;
  SealedContainer container;
};

Host make_host(const WalletState& state, std::uint64_t n, std::uint64_t t, std::uint64_t q,
               std::uint64_t deltaT, const std::vector<std::string>& approvers,
               const std::vector<std::string>& approvals, const std::string& seed) {
  Host h;
  h.kms = KmsConfig::create(n, t, seed);
  h.registry.allowedMeasurements = {wallet_image_measurement()};
  h.registry.approvers.insert(approvers.begin(), approvers.end());
  h.registry.q = q;
  h.registry.deltaT = deltaT;
  h.world.enclaves = {{"e0", Vendor::VendorA, wallet_image_measurement(), EnclaveStatus::Honest},
                      {"e1", Vendor::VendorB, wallet_image_measurement(), EnclaveStatus::Honest},
                      {"e2", Vendor::VendorA, wallet_image_measurement(), EnclaveStatus::Honest}};
  h.world.approvals.insert(approvals.begin(), approvals.end());

  ContainerMeta meta{wallet_image_measurement(), h.registry.registryRef, 0, h.kms.epoch};
  h.container = seal(state, derive_key(h.kms, kContainerId), kContainerId, meta);
  h.container.host = "e0";
  h.world.lastSeenVersion[kContainerId] = 0;
  return h;
}

WalletState public_view(const Host& h) {
  WalletState s = unseal(h.container, derive_key(h.kms, kContainerId));
  s.keys.sk = SecretKey{};
  return s;
}

std::string str(const Json& ev, const char* key) {
  require(ev.contains(key) && ev.at(key).is_string(), ErrorKind::ParseError,
          std::string("event needs string field '") + key + "'");
  return ev.at(key).get<std::string>();
}

Amount amount(const Json& ev) {
  require(ev.contains("amount"), ErrorKind::ParseError, "event needs field 'amount'");
  return canonical::amount_from_json(ev.at("amount"));
}

Operation operation_for(const Json& ev, chain::SimChain& chain) {
  const std::string kind = str(ev, "event");
  if (kind == "subaccount") {
    SubaccountId u(str(ev, "u"));
    return [u](WalletState& s, const Signer&) { engine::add_subaccount(s, u); };
  }
  if (kind == "bind") {
    ExternalAddress sender = ExternalAddress::parse(str(ev, "sender"));
    SubaccountId u(str(ev, "u"));
    return [sender, u](WalletState& s, const Signer&) { engine::bind_sender(s, sender, u); };
  }
  if (kind == "deposit") {
    ExternalAddress from = ExternalAddress::parse(str(ev, "from"));
    AssetId asset = AssetId::parse(str(ev, "asset"));
    Amount x = amount(ev);
    return [&chain, from, asset, x](WalletState& s, const Signer&) {
      chain.faucet(from, asset, x);
      chain::InboxEvent in = chain.external_deposit(from, s.keys.pk, asset, x);
      engine::inbox_deposit(s, in.asset, in.amount, in.sender);
    };
  }
  if (kind == "claim") {
    SubaccountId u(str(ev, "u"));
    require(ev.contains("entry"), ErrorKind::ParseError, "claim needs field 'entry'");
    std::uint64_t entry = canonical::uint_from_json(ev.at("entry"));
    return [u, entry](WalletState& s, const Signer&) { engine::claim_inbox(s, u, entry); };
  }
  if (kind == "transfer") {
    SubaccountId from(str(ev, "from"));
    SubaccountId to(str(ev, "to"));
    AssetId asset = AssetId::parse(str(ev, "asset"));
    Amount x = amount(ev);
    return [=](WalletState& s, const Signer&) { engine::internal_transfer(s, from, to, asset, x); };
  }
  if (kind == "withdraw") {
    SubaccountId u(str(ev, "u"));
    AssetId asset = AssetId::parse(str(ev, "asset"));
    Amount x = amount(ev);
    ExternalAddress dst = ExternalAddress::parse(str(ev, "to"));
    return [=](WalletState& s, const Signer&) { engine::withdraw(s, u, asset, x, dst); };
  }
  if (kind == "process") {
    return [&chain](WalletState& s, const Signer& signer) {
      engine::process_outbox(s, chain, signer);
    };
  }
  fail(ErrorKind::ParseError, "unknown scenario event: " + kind);
}

}  // namespace

Json ScenarioResult::to_json() const {
  return Json{{"trace", chain::to_json(trace)},
              {"publicState", canonical::to_json(project_public(state))},
              {"rounds", canonical::uint_to_json(rounds)},
              {"stateVersion", canonical::uint_to_json(state.stateVersion)}};
}

ScenarioResult run(const Json& events, const WorldConfig& config) {
  require(events.is_array(), ErrorKind::ParseError, "scenario must be a JSON list");
  SimKeySource keys(config.seed);
  WalletState initial = engine::create_wallet(SubaccountId("root"), keys);
  Host h = make_host(initial, config.kmsNodes, config.kmsThreshold, config.quorum, config.deltaT,
                     config.approvers, config.initialApprovals, config.seed);

  ScenarioResult out;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Json& ev = events[i];
    require(ev.is_object(), ErrorKind::ParseError, "scenario event must be an object");
    if (ev.contains("round")) {
      h.world.clock = std::max(h.world.clock, canonical::uint_from_json(ev.at("round")));
    }
    h.world.apply_due(h.kms);

    if (str(ev, "event") == "fault") {
      FaultEvent f{h.world.clock, parse_fault_kind(str(ev, "kind")), ""};
      if (ev.contains("target")) {
        const Json& t = ev.at("target");
        f.target = t.is_string() ? t.get<std::string>() : std::to_string(canonical::uint_from_json(t));
      }
      h.world.schedule.push_back(std::move(f));
      h.world.apply_due(h.kms);
      continue;
    }

    ExecutionResult r = recover_and_execute(h.container, operation_for(ev, out.chain), h.kms,
                                            h.registry, h.world);
    h.container = std::move(r.container);
    if (r.opError) {
      throw Error(r.opError->kind(), "event " + std::to_string(i) + ": " + r.opError->what());
    }
  }

  out.state = public_view(h);
  out.trace = chain::external_trace(project_public(out.state));
  out.container = h.container;
  out.rounds = h.world.clock;
  return out;
}

Json LivenessReport::to_json() const {
  Json j{{"ok", ok},
         {"rounds", canonical::uint_to_json(rounds)},
         {"tauMax", canonical::uint_to_json(tauMax)},
         {"migrated", migrated},
         {"rotated", rotated},
         {"finalStateVersion", canonical::uint_to_json(finalStateVersion)}};
  if (error) {
    j["error"] = Json{{"kind", std::string(pass::to_string(*error))}, {"detail", detail}};
  }
  return j;
}

LivenessReport run_liveness(const std::vector<FaultEvent>& schedule, const LivenessConfig& config) {
  SimKeySource keys("liveness");
  WalletState state = engine::create_wallet(SubaccountId("root"), keys);
  chain::SimChain chain;
  const AssetId eth = AssetId::fungible("ETH");
  const ExternalAddress depositor = ExternalAddress::parse("0x00000000000000000000000000000000000000d0");
  const ExternalAddress dst = ExternalAddress::parse("0x00000000000000000000000000000000000000ee");
  chain.faucet(depositor, eth, Amount(100));
  chain.external_deposit(depositor, state.keys.pk, eth, Amount(100));
  engine::claim_inbox(state, state.root, engine::inbox_deposit(state, eth, Amount(100), depositor));

  std::vector<std::string> approvers;
  for (std::uint64_t i = 0; i < config.approvers; ++i) approvers.push_back("a" + std::to_string(i));
  Host h = make_host(state, config.kmsNodes, config.kmsThreshold, config.quorum, config.deltaT,
                     approvers, approvers, "liveness");
  h.world.schedule = schedule;

  LivenessReport report;
  report.tauMax = tau_max(config);
  Operation op = [&](WalletState& s, const Signer& signer) {
    engine::withdraw(s, s.root, eth, Amount(10), dst);
    engine::process_outbox(s, chain, signer);
  };
  try {
    ExecutionResult r = recover_and_execute(h.container, op, h.kms, h.registry, h.world);
    report.rounds = r.rounds;
    report.migrated = r.migrated;
    report.rotated = r.rotated;
    report.finalStateVersion = r.container.meta.stateVersion;
    if (r.opError) {
      report.error = r.opError->kind();
      report.detail = r.opError->what();
    } else {
      report.ok = true;
    }
  } catch (const Error& e) {
    report.error = e.kind();
    report.detail = e.what();
    report.rounds = h.world.clock;
  }
  return report;
}

}  // namespace pass::scenario
