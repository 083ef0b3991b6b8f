#include "pass/cli.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <fstream>
#include <functional>
#include <iostream>

#include "pass/bench.hpp"
#include "pass/chain.hpp"
#include "pass/enclave.hpp"
#include "pass/engine.hpp"
#include "pass/invariants.hpp"
#include "pass/persistence.hpp"
#include "pass/scenario.hpp"
#include "pass/serialize.hpp"

namespace pass::cli {

namespace fs = std::filesystem;
using canonical::Json;

namespace {

constexpr const char* kContainerId = "wallet";

/// Bad argument values; reported like parse errors (exit 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename T, typename F>
T arg(F&& parse, const std::string& text, const char* what) {
  try {
    return parse(text);
  } catch (const Error& e) {
    throw UsageError(std::string("invalid ") + what + " '" + text + "': " + e.what());
  }
}

ExternalAddress arg_address(const std::string& s) {
  return arg<ExternalAddress>([](const std::string& t) { return ExternalAddress::parse(t); }, s,
                              "address");
}
AssetId arg_asset(const std::string& s) {
  return arg<AssetId>([](const std::string& t) { return AssetId::parse(t); }, s, "asset");
}
SubaccountId arg_sub(const std::string& s) {
  return arg<SubaccountId>([](const std::string& t) { return SubaccountId(t); }, s, "subaccount");
}
OpKind arg_op(const std::string& s) {
  return arg<OpKind>([](const std::string& t) { return parse_op_kind(t); }, s, "operation");
}

fs::path sidecar(const fs::path& wallet, const char* suffix) {
  fs::path p = wallet;
  p += suffix;
  return p;
}

/// flock-based advisory lock on <wallet>.lock, held for the command.
class FileLock {
 public:
  explicit FileLock(const fs::path& wallet) {
    const fs::path path = sidecar(wallet, ".lock");
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT, 0644);
    require(fd_ >= 0, ErrorKind::Io, "cannot open lock file " + path.string());
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      fail(ErrorKind::Io, "wallet is locked by another process: " + path.string());
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

std::uint64_t read_counter(const fs::path& wallet) {
  const fs::path p = sidecar(wallet, ".version");
  if (!fs::exists(p)) return 0;
  return canonical::uint_from_json(canonical::parse(persistence::read_file(p)));
}

void write_counter(const fs::path& wallet, std::uint64_t v) {
  persistence::atomic_write(sidecar(wallet, ".version"), canonical::dump(canonical::uint_to_json(v)) + "\n");
}

Json kms_to_json(const enclave::KmsConfig& k) {
  return Json{{"n", k.n}, {"t", k.t}, {"epoch", k.epoch}, {"seed", k.seed}};
}

enclave::KmsConfig kms_from_json(const Json& j) {
  enclave::KmsConfig k = enclave::KmsConfig::create(j.at("n").get<std::uint64_t>(),
                                                    j.at("t").get<std::uint64_t>(),
                                                    j.at("seed").get<std::string>());
  k.epoch = j.at("epoch").get<std::uint64_t>();
  return k;
}

/// Opened wallet: state, chain and the counter, all under the lock.
struct Session {
  fs::path wallet;
  FileLock lock;
  WalletState state;
  chain::SimChain chain;
  std::uint64_t counter = 0;

  explicit Session(const fs::path& w) : wallet(w), lock(w) {
    require(fs::exists(wallet), ErrorKind::Io,
            "no wallet at " + wallet.string() + " (run init first)");
    counter = read_counter(wallet);
    state = persistence::load(wallet, counter);
    chain = chain::SimChain::from_json(
        canonical::parse(persistence::read_file(sidecar(wallet, ".chain.json"))));
  }

  void commit(bool chainChanged) {
    if (chainChanged) {
      persistence::atomic_write(sidecar(wallet, ".chain.json"), canonical::dump(chain.to_json()) + "\n");
    }
    persistence::save(state, wallet);
    if (state.stateVersion > counter) {
      counter = state.stateVersion;
      write_counter(wallet, counter);
    }
  }

  /// Unseals the key container and returns a signer for the wallet key.
  enclave::KeyHandle signer() const {
    Json j = canonical::parse(persistence::read_file(sidecar(wallet, ".sealed.json")));
    enclave::KmsConfig kms = kms_from_json(j.at("kms"));
    enclave::SealedContainer c = enclave::container_from_json(j.at("container"));
    WalletState sealed = enclave::unseal(c, enclave::derive_key(kms, c.containerId));
    require(sealed.keys.pk == state.keys.pk, ErrorKind::SealedStateCorrupt,
            "sealed key does not belong to this wallet");
    return enclave::KeyHandle(sealed.keys);
  }
};

void emit(std::ostream& out, bool json, const Json& j, const std::string& human) {
  if (json) {
    out << canonical::dump(j) << "\n";
  } else {
    out << human << "\n";
  }
}

std::string record_line(const ProvenanceRecord& r) {
  std::string line = std::to_string(r.seq) + " " + std::string(to_string(r.op));
  if (r.asset) line += " " + r.asset->to_string();
  if (r.amount) line += " " + std::to_string(r.amount->value());
  if (r.from) line += " " + party_to_string(*r.from);
  if (r.to) line += " -> " + party_to_string(*r.to);
  return line;
}

Json read_json_file(const std::string& path) {
  return canonical::parse(persistence::read_file(path));
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CliConfig cfg;
  CLI::App app{"PASS provenanced-access subaccount wallet", "pass"};
  app.require_subcommand(1);
  std::string walletPath = cfg.walletPath.string();
  std::string policyPath;
  app.add_option("--wallet,-w", walletPath, "wallet snapshot file")->envname("PASS_WALLET");
  app.add_option("--seed", cfg.seed, "seed for key generation and simulations")->envname("PASS_SEED");
  app.add_flag("--json", cfg.json, "machine-readable output")->envname("PASS_JSON");
  app.add_flag("-v,--verbose", cfg.verbosity, "more output");

  std::function<void()> action;
  auto on = [&](CLI::App* sub, std::function<void()> f) {
    sub->callback([&action, f = std::move(f)] { action = f; });
  };

  // init
  auto* init = app.add_subcommand("init", "create a new wallet");
  std::string root = "root", outPath;
  std::uint64_t kmsN = 5, kmsT = 3;
  init->add_option("--root", root, "root subaccount id");
  init->add_option("--out,-o", outPath, "wallet file (overrides --wallet)");
  init->add_option("--policy", policyPath, "policy file (JSON list of conjuncts)")->envname("PASS_POLICY");
  init->add_option("--kms-n", kmsN, "KMS node count")->check(CLI::PositiveNumber);
  init->add_option("--kms-t", kmsT, "KMS threshold")->check(CLI::PositiveNumber);
  bool force = false;
  init->add_flag("--force", force, "overwrite an existing wallet");
  on(init, [&] {
    if (!outPath.empty()) walletPath = outPath;
    const fs::path w = walletPath;
    require(!fs::exists(w) || force, ErrorKind::InvalidArgument,
            "wallet already exists: " + w.string() + " (use --force)");
    const fs::path parent = w.has_parent_path() ? w.parent_path() : fs::path(".");
    require(fs::is_directory(parent), ErrorKind::Io, "directory does not exist: " + parent.string());
    FileLock lock(w);
    enclave::SimKeySource keys(cfg.seed);
    WalletState state = engine::create_wallet(arg_sub(root), keys);
    if (!policyPath.empty()) engine::set_policy(state, canonical::policy_from_json(read_json_file(policyPath)));

    enclave::KmsConfig kms = enclave::KmsConfig::create(kmsN, kmsT, cfg.seed + "/kms");
    enclave::ContainerMeta meta{enclave::wallet_image_measurement(), "registry", 0, kms.epoch};
    enclave::SealedContainer c =
        enclave::seal(state, enclave::derive_key(kms, kContainerId), kContainerId, meta);
    c.host = "e0";
    persistence::atomic_write(sidecar(w, ".sealed.json"),
                              canonical::dump(Json{{"container", enclave::to_json(c)},
                                                   {"kms", kms_to_json(kms)}}) + "\n");
    persistence::atomic_write(sidecar(w, ".chain.json"), canonical::dump(chain::SimChain{}.to_json()) + "\n");
    persistence::save(state, w);
    write_counter(w, state.stateVersion);
    emit(out, cfg.json, Json{{"wallet", w.string()}, {"pk", state.keys.pk.to_string()}},
         "created " + w.string() + " with address " + state.keys.pk.to_string());
  });

  // configuration
  auto* addSub = app.add_subcommand("add-subaccount", "create a subaccount");
  std::string u;
  addSub->add_option("--u", u, "subaccount id")->required();
  on(addSub, [&] {
    Session s(walletPath);
    engine::add_subaccount(s.state, arg_sub(u));
    s.commit(false);
    emit(out, cfg.json, Json{{"subaccount", u}}, "added " + u);
  });

  auto* bind = app.add_subcommand("bind", "route deposits from a sender to a subaccount");
  std::string sender;
  bind->add_option("--sender", sender, "external sender address")->required();
  bind->add_option("--u", u, "subaccount id")->required();
  on(bind, [&] {
    Session s(walletPath);
    engine::bind_sender(s.state, arg_address(sender), arg_sub(u));
    s.commit(false);
    emit(out, cfg.json, Json{{"sender", sender}, {"subaccount", u}}, "bound " + sender + " to " + u);
  });

  // transitions
  std::string asset, from, to;
  std::uint64_t amount = 0;
  auto* deposit = app.add_subcommand("deposit", "external deposit into the wallet address");
  deposit->add_option("--from", from, "sender address (minted the amount first)")->required();
  deposit->add_option("--asset", asset, "asset id")->required();
  deposit->add_option("--amount", amount, "amount in base units")->required();
  on(deposit, [&] {
    Session s(walletPath);
    const ExternalAddress sender_addr = arg_address(from);
    const AssetId a = arg_asset(asset);
    s.chain.faucet(sender_addr, a, Amount(amount));
    chain::InboxEvent ev = s.chain.external_deposit(sender_addr, s.state.keys.pk, a, Amount(amount));
    std::uint64_t id = engine::inbox_deposit(s.state, ev.asset, ev.amount, ev.sender);
    s.commit(true);
    emit(out, cfg.json, Json{{"entry", id}}, "inbox entry " + std::to_string(id));
  });

  auto* claim = app.add_subcommand("claim", "claim an inbox entry");
  std::uint64_t entry = 0;
  claim->add_option("--u", u, "claiming subaccount")->required();
  claim->add_option("--entry", entry, "inbox entry id")->required();
  on(claim, [&] {
    Session s(walletPath);
    engine::claim_inbox(s.state, arg_sub(u), entry);
    s.commit(false);
    emit(out, cfg.json, Json{{"entry", entry}, {"subaccount", u}},
         "claimed entry " + std::to_string(entry) + " for " + u);
  });

  auto* transfer = app.add_subcommand("transfer", "internal transfer between subaccounts");
  transfer->add_option("--from", from, "source subaccount")->required();
  transfer->add_option("--to", to, "destination subaccount")->required();
  transfer->add_option("--asset", asset, "asset id")->required();
  transfer->add_option("--amount", amount, "amount")->required();
  on(transfer, [&] {
    Session s(walletPath);
    engine::internal_transfer(s.state, arg_sub(from), arg_sub(to), arg_asset(asset), Amount(amount));
    s.commit(false);
    emit(out, cfg.json, Json{{"ok", true}}, "transferred");
  });

  auto* withdraw = app.add_subcommand("withdraw", "queue an outbound transfer");
  withdraw->add_option("--u", u, "subaccount")->required();
  withdraw->add_option("--asset", asset, "asset id")->required();
  withdraw->add_option("--amount", amount, "amount")->required();
  withdraw->add_option("--to", to, "destination address")->required();
  on(withdraw, [&] {
    Session s(walletPath);
    std::uint64_t nonce =
        engine::withdraw(s.state, arg_sub(u), arg_asset(asset), Amount(amount), arg_address(to));
    s.commit(false);
    emit(out, cfg.json, Json{{"nonce", nonce}}, "queued with nonce " + std::to_string(nonce));
  });

  auto* process = app.add_subcommand("process", "sign and broadcast pending outbox entries");
  on(process, [&] {
    Session s(walletPath);
    enclave::KeyHandle signer = s.signer();
    std::vector<chain::Receipt> receipts;
    try {
      receipts = engine::process_outbox(s.state, s.chain, signer);
    } catch (const Error&) {
      s.commit(true);  // keep what was broadcast before the rejection
      throw;
    }
    s.commit(true);
    Json arr = Json::array();
    std::string human;
    for (const auto& r : receipts) {
      arr.push_back(Json{{"nonce", r.nonce}, {"txIndex", r.txIndex}, {"txHash", to_hex(r.txHash)}});
      human += "nonce " + std::to_string(r.nonce) + " tx " + to_hex(r.txHash) + "\n";
    }
    emit(out, cfg.json, arr, human + std::to_string(receipts.size()) + " broadcast");
  });

  auto* gsm = app.add_subcommand("gsm-sign", "sign a message in a GSM domain");
  std::string dom, message;
  gsm->add_option("--u", u, "signing subaccount")->required();
  gsm->add_option("--dom", dom, "GSM domain")->required();
  gsm->add_option("--message", message, "message text")->required();
  on(gsm, [&] {
    Session s(walletPath);
    enclave::KeyHandle signer = s.signer();
    Bytes sig = engine::sign_gsm(s.state, arg_sub(u), dom, as_bytes(message), signer);
    s.commit(false);
    emit(out, cfg.json, Json{{"signature", to_hex(sig)}}, to_hex(sig));
  });

  // queries
  auto* balance = app.add_subcommand("balance", "balance of a subaccount, or the wallet total");
  balance->add_option("--u", u, "subaccount (omit for the total)");
  balance->add_option("--asset", asset, "asset id")->required();
  on(balance, [&] {
    Session s(walletPath);
    const AssetId a = arg_asset(asset);
    Amount v = u.empty() ? engine::total_balance(s.state, a) : engine::get_balance(s.state, arg_sub(u), a);
    emit(out, cfg.json, Json{{"asset", a.to_string()}, {"balance", canonical::to_json(v)}},
         std::to_string(v.value()));
  });

  auto* hist = app.add_subcommand("history", "provenance records, optionally filtered");
  std::string op;
  auto* hu = hist->add_option("--u", u, "records involving a subaccount");
  auto* ha = hist->add_option("--asset", asset, "records of an asset");
  auto* ho = hist->add_option("--op", op, "records of an operation kind");
  hu->excludes(ha)->excludes(ho);
  ha->excludes(ho);
  on(hist, [&] {
    Session s(walletPath);
    engine::HistoryFilter filter;
    if (!u.empty()) filter = arg_sub(u);
    if (!asset.empty()) filter = arg_asset(asset);
    if (!op.empty()) filter = arg_op(op);
    auto records = engine::history(s.state, filter);
    std::string human;
    for (const auto& r : records) human += record_line(r) + "\n";
    if (!human.empty()) human.pop_back();
    emit(out, cfg.json, canonical::to_json(std::span<const ProvenanceRecord>(records)), human);
  });

  auto* attest = app.add_subcommand("attest", "sign the digest of the provenance log");
  std::uint64_t nonce = 0;
  std::string attOut;
  attest->add_option("--nonce", nonce, "freshness nonce");
  attest->add_option("--out,-o", attOut, "write the attestation to a file");
  on(attest, [&] {
    Session s(walletPath);
    enclave::KeyHandle signer = s.signer();
    provenance::Attestation att = provenance::attest(s.state.history, signer, nonce);
    const std::string text = canonical::dump(canonical::to_json(att));
    if (!attOut.empty()) persistence::atomic_write(attOut, text + "\n");
    out << text << "\n";
  });

  auto* verify = app.add_subcommand("verify", "check an attestation against the wallet log");
  std::string attIn;
  verify->add_option("attestation", attIn, "attestation file")->required();
  on(verify, [&] {
    Session s(walletPath);
    provenance::Attestation att = canonical::attestation_from_json(read_json_file(attIn));
    bool ok = provenance::verify_attestation(s.state.keys.pk, att, s.state.history.records());
    require(ok, ErrorKind::BadSignature, "attestation does not match this wallet's history");
    emit(out, cfg.json, Json{{"valid", true}, {"coveredSeq", att.coveredSeq}}, "valid");
  });

  auto* check = app.add_subcommand("check", "run the invariant suite on the wallet and chain");
  on(check, [&] {
    Session s(walletPath);
    auto violations = invariants::check(s.state, s.chain);
    require(violations.empty(), ErrorKind::MalformedLog,
            violations.empty() ? "" : violations.front());
    emit(out, cfg.json, Json{{"ok", true}}, "all invariants hold");
  });

  // persistence
  auto* snapshot = app.add_subcommand("snapshot", "copy the wallet to a snapshot file");
  std::string snapPath;
  snapshot->add_option("--out,-o", snapPath, "snapshot file")->required();
  on(snapshot, [&] {
    Session s(walletPath);
    persistence::save(s.state, snapPath);
    emit(out, cfg.json, Json{{"snapshot", snapPath}, {"stateVersion", s.state.stateVersion}},
         "saved version " + std::to_string(s.state.stateVersion) + " to " + snapPath);
  });

  auto* restore = app.add_subcommand("restore", "replace the wallet with a verified snapshot");
  restore->add_option("--in,-i", snapPath, "snapshot file")->required();
  on(restore, [&] {
    Session s(walletPath);
    WalletState loaded = persistence::load(snapPath, s.counter);
    require(loaded.keys.pk == s.state.keys.pk, ErrorKind::InvalidArgument,
            "snapshot belongs to a different wallet");
    s.state = std::move(loaded);
    s.commit(false);
    emit(out, cfg.json, Json{{"stateVersion", s.state.stateVersion}},
         "restored version " + std::to_string(s.state.stateVersion));
  });

  // simulations
  auto* simulate = app.add_subcommand("simulate", "run a scenario file in the simulated world");
  std::string scenarioPath;
  simulate->add_option("scenario", scenarioPath, "scenario JSON list")->required();
  on(simulate, [&] {
    scenario::WorldConfig wc;
    wc.seed = cfg.seed;
    scenario::ScenarioResult r = scenario::run(read_json_file(scenarioPath), wc);
    out << canonical::dump(r.to_json()) << "\n";
  });

  auto* liveness = app.add_subcommand("simulate-liveness", "recover and execute under a fault schedule");
  std::string faultsPath;
  scenario::LivenessConfig lc;
  liveness->add_option("--faults", faultsPath, "fault schedule JSON list")->required();
  liveness->add_option("--n", lc.kmsNodes, "KMS nodes")->check(CLI::PositiveNumber);
  liveness->add_option("--t", lc.kmsThreshold, "KMS threshold")->check(CLI::PositiveNumber);
  liveness->add_option("--q", lc.quorum, "governance quorum")->check(CLI::PositiveNumber);
  liveness->add_option("--delta-t", lc.deltaT, "rounds per relaxation step")->check(CLI::PositiveNumber);
  liveness->add_option("--approvers", lc.approvers, "approvers who approve at round 0");
  on(liveness, [&] {
    auto schedule = enclave::faults_from_json(read_json_file(faultsPath));
    scenario::LivenessReport r = scenario::run_liveness(schedule, lc);
    out << canonical::dump(r.to_json()) << "\n";
    if (r.error) fail(*r.error, r.detail);
  });

  auto* bench = app.add_subcommand("bench", "throughput benchmark");
  bench::BenchConfig bc;
  std::string csvPath;
  bench->add_option("--ops", bc.opsPerTrial, "operations per trial")->check(CLI::PositiveNumber);
  bench->add_option("--trials", bc.trials, "trials per category")->check(CLI::PositiveNumber);
  bench->add_option("--batch", bc.batchSize, "deposit+claim pairs per batch trial")->check(CLI::PositiveNumber);
  bench->add_option("--threads", bc.threads, "workers in the multi-threaded category")->check(CLI::PositiveNumber);
  bench->add_option("--bench-seed", bc.seed, "operation sequence seed");
  bench->add_option("--csv", csvPath, "also write the table as CSV");
  on(bench, [&] {
    bench::StatsTable t = bench::run_bench(bc);
    if (!csvPath.empty()) persistence::atomic_write(csvPath, t.to_csv());
    out << (cfg.json ? t.to_csv() : t.to_text());
    require(t.invariants_ok(), ErrorKind::MalformedLog, "post-run invariants violated");
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << canonical::dump(Json{{"kind", "Usage"}, {"detail", e.what()}}) << "\n";
    return 2;
  }

  try {
    action();
    return 0;
  } catch (const UsageError& e) {
    err << canonical::dump(Json{{"kind", "Usage"}, {"detail", e.what()}}) << "\n";
    return 2;
  } catch (const Error& e) {
    err << canonical::dump(Json{{"kind", std::string(to_string(e.kind()))}, {"detail", e.what()}})
        << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << canonical::dump(Json{{"kind", "Internal"}, {"detail", e.what()}}) << "\n";
    return 1;
  }
}

}  // namespace pass::cli
