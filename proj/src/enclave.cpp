#include "pass/enclave.hpp"

#include <sodium.h>

#include <algorithm>
#include <charconv>

#include "pass/serialize.hpp"
#include "secret_key_access.hpp"

namespace pass::enclave {

using canonical::Json;

namespace {

Bytes concat(std::string_view a, std::string_view b) {
  Bytes out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

Hash32 vendor_root_key(Vendor v) { return sha256(std::string("vendor-root/") + std::string(to_string(v))); }

Hash32 quote_tag(const Quote& q) {
  Json body{{"enclaveId", q.enclaveId},
            {"measurement", to_hex(q.measurement)},
            {"compromised", q.compromised}};
  std::string s = canonical::dump(body);
  Hash32 key = vendor_root_key(q.vendor);
  return hmac_sha256(key, as_bytes(s));
}

Json meta_json(const std::string& containerId, const ContainerMeta& m) {
  return Json{{"containerId", containerId},
              {"measurement", to_hex(m.measurement)},
              {"registryRef", m.registryRef},
              {"stateVersion", canonical::uint_to_json(m.stateVersion)},
              {"keyEpoch", canonical::uint_to_json(m.keyEpoch)}};
}

Hash32 root_key(const KmsConfig& kms) {
  Hash32 root{};
  for (std::uint64_t i = 0; i < kms.n; ++i) {
    std::string label = "kms-share/" + std::to_string(kms.epoch) + "/" + std::to_string(i);
    Hash32 share = hmac_sha256(as_bytes(kms.seed), as_bytes(label));
    for (std::size_t b = 0; b < root.size(); ++b) root[b] ^= share[b];
  }
  return root;
}

}  // namespace

KeyPair SimKeySource::generate_keypair() {
  std::string label = "wallet-key/" + std::to_string(counter_++);
  Hash32 seed = hmac_sha256(as_bytes(seed_), as_bytes(label));
  std::array<std::uint8_t, crypto_sign_PUBLICKEYBYTES> edpk{};
  std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> edsk{};
  crypto_sign_seed_keypair(edpk.data(), edsk.data(), seed.data());
  sodium_memzero(edsk.data(), edsk.size());
  return KeyPair{address_from_ed25519(edpk), SecretKeyAccess::make(seed)};
}

KeyHandle::KeyHandle(const KeyPair& keys) : pk_(keys.pk) {
  require(keys.sk.present(), ErrorKind::KeyUnavailable, "wallet key is not loaded");
  std::array<std::uint8_t, crypto_sign_PUBLICKEYBYTES> edpk{};
  crypto_sign_seed_keypair(edpk.data(), ed25519_secret_.data(),
                           SecretKeyAccess::bytes(keys.sk).data());
  require(address_from_ed25519(edpk) == pk_, ErrorKind::KeyUnavailable,
          "secret key does not match wallet address");
}

Bytes KeyHandle::sign(std::span<const std::uint8_t> message) const {
  require(available_, ErrorKind::KeyUnavailable, "enclave key handle unavailable");
  Bytes out(crypto_sign_PUBLICKEYBYTES + crypto_sign_BYTES);
  // The Ed25519 secret key carries the public key in its upper half.
  std::copy(ed25519_secret_.begin() + 32, ed25519_secret_.end(), out.begin());
  crypto_sign_detached(out.data() + crypto_sign_PUBLICKEYBYTES, nullptr, message.data(),
                       message.size(), ed25519_secret_.data());
  return out;
}

std::string_view to_string(Vendor v) { return v == Vendor::VendorA ? "VendorA" : "VendorB"; }

std::string_view to_string(EnclaveStatus s) {
  switch (s) {
    case EnclaveStatus::Honest: return "Honest";
    case EnclaveStatus::Crashed: return "Crashed";
    case EnclaveStatus::Compromised: return "Compromised";
  }
  return "Unknown";
}

Hash32 wallet_image_measurement() { return sha256("pass-wallet-image/v1"); }

std::uint64_t linear_relaxation(std::uint64_t q, std::uint64_t elapsed, std::uint64_t deltaT) {
  const std::uint64_t steps = deltaT == 0 ? q : elapsed / deltaT;
  return steps >= q ? 1 : std::max<std::uint64_t>(1, q - steps);
}

Quote attest_quote(const Enclave& e) {
  require(e.status != EnclaveStatus::Crashed, ErrorKind::NotAttested,
          "enclave " + e.enclaveId + " is not running");
  Quote q{e.enclaveId, e.vendor, e.measurement, e.status == EnclaveStatus::Compromised, {}};
  q.tag = quote_tag(q);
  return q;
}

bool verify_quote(const Registry& r, const Quote& q) {
  if (sodium_memcmp(quote_tag(q).data(), q.tag.data(), q.tag.size()) != 0) return false;
  return !q.compromised && r.allowedMeasurements.contains(q.measurement);
}

bool quorum_check(const Registry& r, const std::set<std::string>& approvals,
                  std::uint64_t elapsed) {
  const std::uint64_t effective =
      r.relax ? r.relax(r.q, elapsed, r.deltaT) : linear_relaxation(r.q, elapsed, r.deltaT);
  std::uint64_t count = 0;
  for (const auto& a : approvals) count += r.approvers.contains(a) ? 1 : 0;
  return count >= std::max<std::uint64_t>(1, effective);
}

KmsConfig KmsConfig::create(std::uint64_t n, std::uint64_t t, std::string seed) {
  require(t >= 1 && t <= n, ErrorKind::InvalidArgument, "KMS threshold must satisfy 1 <= t <= n");
  KmsConfig k;
  k.n = n;
  k.t = t;
  k.seed = std::move(seed);
  k.nodeUp.assign(n, true);
  return k;
}

std::uint64_t KmsConfig::up_count() const {
  return static_cast<std::uint64_t>(std::count(nodeUp.begin(), nodeUp.end(), true));
}

Hash32 derive_key(const KmsConfig& kms, const std::string& containerId) {
  require(kms.up_count() >= kms.t, ErrorKind::KeyUnavailable,
          std::to_string(kms.up_count()) + " of " + std::to_string(kms.n) +
              " KMS nodes up, threshold " + std::to_string(kms.t));
  Hash32 root = root_key(kms);
  return hmac_sha256(root, as_bytes(containerId));
}

SealedContainer seal(const WalletState& state, const Hash32& key, std::string containerId,
                     ContainerMeta meta) {
  require(state.keys.sk.present(), ErrorKind::KeyUnavailable, "cannot seal a state without sk");
  const std::string plaintext = canonical::dump(
      Json{{"sk", to_hex(SecretKeyAccess::bytes(state.keys.sk))},
           {"state", canonical::state_to_json(state)}});
  const std::string ad = canonical::dump(meta_json(containerId, meta));

  // Nonce is a MAC of the inputs, so equal inputs seal to equal bytes and
  // distinct inputs never share a nonce under one key.
  Hash32 nonce_src = hmac_sha256(key, concat(ad, plaintext));
  Bytes out(crypto_aead_xchacha20poly1305_ietf_NPUBBYTES + plaintext.size() +
            crypto_aead_xchacha20poly1305_ietf_ABYTES);
  std::copy_n(nonce_src.begin(), crypto_aead_xchacha20poly1305_ietf_NPUBBYTES, out.begin());
  unsigned long long written = 0;
  crypto_aead_xchacha20poly1305_ietf_encrypt(
      out.data() + crypto_aead_xchacha20poly1305_ietf_NPUBBYTES, &written,
      reinterpret_cast<const unsigned char*>(plaintext.data()), plaintext.size(),
      reinterpret_cast<const unsigned char*>(ad.data()), ad.size(), nullptr, out.data(),
      key.data());
  out.resize(crypto_aead_xchacha20poly1305_ietf_NPUBBYTES + written);
  return SealedContainer{std::move(containerId), "", std::move(out), std::move(meta)};
}

WalletState unseal(const SealedContainer& container, const Hash32& key, std::uint64_t minVersion) {
  constexpr std::size_t kNonce = crypto_aead_xchacha20poly1305_ietf_NPUBBYTES;
  const Bytes& ct = container.ciphertext;
  require(ct.size() >= kNonce + crypto_aead_xchacha20poly1305_ietf_ABYTES,
          ErrorKind::SealedStateCorrupt, "sealed container truncated");
  const std::string ad = canonical::dump(meta_json(container.containerId, container.meta));

  std::string plaintext(ct.size() - kNonce - crypto_aead_xchacha20poly1305_ietf_ABYTES, '\0');
  unsigned long long plen = 0;
  int rc = crypto_aead_xchacha20poly1305_ietf_decrypt(
      reinterpret_cast<unsigned char*>(plaintext.data()), &plen, nullptr, ct.data() + kNonce,
      ct.size() - kNonce, reinterpret_cast<const unsigned char*>(ad.data()), ad.size(), ct.data(),
      key.data());
  require(rc == 0, ErrorKind::SealedStateCorrupt,
          "container " + container.containerId + " failed authentication");
  require(container.meta.stateVersion >= minVersion, ErrorKind::RollbackDetected,
          "container version " + std::to_string(container.meta.stateVersion) +
              " is older than " + std::to_string(minVersion));
  plaintext.resize(plen);

  WalletState state;
  try {
    Json j = canonical::parse(plaintext);
    state = canonical::state_from_json(j.at("state"));
    state.keys.sk = SecretKeyAccess::make(fixed_from_hex<32>(j.at("sk").get<std::string>()));
  } catch (const std::exception& e) {
    fail(ErrorKind::SealedStateCorrupt, std::string("sealed payload unreadable: ") + e.what());
  }
  return state;
}

Json to_json(const SealedContainer& c) {
  return Json{{"containerId", c.containerId},
              {"host", c.host},
              {"ciphertext", to_hex(c.ciphertext)},
              {"meta", meta_json(c.containerId, c.meta)}};
}

SealedContainer container_from_json(const Json& j) {
  try {
    SealedContainer c;
    c.containerId = j.at("containerId").get<std::string>();
    c.host = j.at("host").get<std::string>();
    c.ciphertext = from_hex(j.at("ciphertext").get<std::string>());
    const Json& m = j.at("meta");
    c.meta.measurement = fixed_from_hex<32>(m.at("measurement").get<std::string>());
    c.meta.registryRef = m.at("registryRef").get<std::string>();
    c.meta.stateVersion = canonical::uint_from_json(m.at("stateVersion"));
    c.meta.keyEpoch = canonical::uint_from_json(m.at("keyEpoch"));
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ParseError, e.what());
  }
}

RotationResult rotate_key(const KmsConfig& kms, const SealedContainer& container) {
  const Hash32 old_key = derive_key(kms, container.containerId);
  WalletState state = unseal(container, old_key);

  KmsConfig next = kms;
  ++next.epoch;
  const Hash32 new_key = derive_key(next, container.containerId);
  ContainerMeta meta = container.meta;
  ++meta.stateVersion;
  meta.keyEpoch = next.epoch;
  SealedContainer sealed = seal(state, new_key, container.containerId, std::move(meta));
  sealed.host = container.host;
  return RotationResult{std::move(next), std::move(sealed)};
}

SealedContainer migrate(const SealedContainer& container, const Enclave& from, const Enclave& to,
                        const KmsConfig& kms, const Registry& registry) {
  require(container.host == from.enclaveId, ErrorKind::InvalidArgument,
          "container " + container.containerId + " is not hosted on " + from.enclaveId);
  Quote q = attest_quote(to);
  require(verify_quote(registry, q), ErrorKind::NotAttested,
          "enclave " + to.enclaveId + " failed attestation");
  const Hash32 key = derive_key(kms, container.containerId);
  (void)unseal(container, key);  // the target must be able to open it
  SealedContainer moved = container;
  moved.host = to.enclaveId;
  return moved;
}

std::string_view to_string(FaultKind k) {
  switch (k) {
    case FaultKind::Crash: return "crash";
    case FaultKind::Compromise: return "compromise";
    case FaultKind::KmsDown: return "kms-down";
    case FaultKind::KmsUp: return "kms-up";
    case FaultKind::Approve: return "approve";
  }
  return "unknown";
}

FaultKind parse_fault_kind(std::string_view text) {
  for (FaultKind k : {FaultKind::Crash, FaultKind::Compromise, FaultKind::KmsDown,
                      FaultKind::KmsUp, FaultKind::Approve}) {
    if (to_string(k) == text) return k;
  }
  fail(ErrorKind::ParseError, "unknown fault event: " + std::string(text));
}

std::vector<FaultEvent> faults_from_json(const Json& j) {
  require(j.is_array(), ErrorKind::ParseError, "fault schedule must be a JSON list");
  std::vector<FaultEvent> out;
  try {
    for (const auto& e : j) {
      FaultEvent ev;
      ev.round = canonical::uint_from_json(e.at("round"));
      ev.kind = parse_fault_kind(e.at("event").get<std::string>());
      if (e.contains("target")) {
        const Json& t = e.at("target");
        ev.target = t.is_string() ? t.get<std::string>() : std::to_string(canonical::uint_from_json(t));
      }
      out.push_back(std::move(ev));
    }
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::ParseError, ex.what());
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const FaultEvent& a, const FaultEvent& b) { return a.round < b.round; });
  return out;
}

Enclave* World::find(const std::string& enclaveId) {
  auto it = std::find_if(enclaves.begin(), enclaves.end(),
                         [&](const Enclave& e) { return e.enclaveId == enclaveId; });
  return it == enclaves.end() ? nullptr : &*it;
}

void World::apply_due(KmsConfig& kms) {
  if (applied == 0) {
    std::stable_sort(schedule.begin(), schedule.end(),
                     [](const FaultEvent& a, const FaultEvent& b) { return a.round < b.round; });
  }
  for (; applied < schedule.size() && schedule[applied].round <= clock; ++applied) {
    const FaultEvent& ev = schedule[applied];
    switch (ev.kind) {
      case FaultKind::Crash:
      case FaultKind::Compromise: {
        Enclave* e = find(ev.target);
        require(e != nullptr, ErrorKind::InvalidArgument, "unknown enclave " + ev.target);
        // Crashes are permanent; a compromised enclave that crashes stays crashed.
        if (ev.kind == FaultKind::Crash) {
          e->status = EnclaveStatus::Crashed;
        } else if (e->status == EnclaveStatus::Honest) {
          e->status = EnclaveStatus::Compromised;
        }
        break;
      }
      case FaultKind::KmsDown:
      case FaultKind::KmsUp: {
        std::uint64_t node = 0;
        auto [p, ec] = std::from_chars(ev.target.data(), ev.target.data() + ev.target.size(), node);
        require(ec == std::errc{} && p == ev.target.data() + ev.target.size() && node < kms.n,
                ErrorKind::InvalidArgument, "unknown KMS node " + ev.target);
        kms.nodeUp[node] = ev.kind == FaultKind::KmsUp;
        break;
      }
      case FaultKind::Approve:
        approvals.insert(ev.target);
        break;
    }
  }
}

bool World::has_pending(FaultKind kind) const {
  return std::any_of(schedule.begin() + static_cast<std::ptrdiff_t>(applied), schedule.end(),
                     [&](const FaultEvent& e) { return e.kind == kind; });
}

ExecutionResult recover_and_execute(const SealedContainer& container, const Operation& op,
                                    KmsConfig& kms, const Registry& registry, World& world) {
  const std::uint64_t start = world.clock;
  ExecutionResult result;
  SealedContainer current = container;
  std::vector<ProvenanceRecord> audit;

  auto advance = [&](std::uint64_t rounds) {
    world.clock += rounds;
    world.apply_due(kms);
  };
  auto attested = [&](const Enclave& e) {
    return e.status == EnclaveStatus::Honest && verify_quote(registry, attest_quote(e));
  };

  world.apply_due(kms);
  while (world.clock - start <= kHorizonRounds) {
    // 1. An attested enclave to run on: the host if healthy, else the first
    //    honest one in registry order.
    Enclave* host = world.find(current.host);
    Enclave* target = host && attested(*host) ? host : nullptr;
    if (!target) {
      for (auto& e : world.enclaves) {
        if (attested(e)) {
          target = &e;
          break;
        }
      }
    }
    // Crashes and compromises are permanent, so no later round can help.
    require(target != nullptr, ErrorKind::NotAttested, "no honest attested enclave remains");

    // 2. Key release needs t of n KMS nodes.
    if (kms.up_count() < kms.t) {
      require(world.has_pending(FaultKind::KmsUp), ErrorKind::KeyUnavailable,
              "KMS below threshold with no recovery scheduled");
      advance(1);
      continue;
    }
    if (target != host) {
      Enclave from{current.host, Vendor::VendorA, {}, EnclaveStatus::Crashed};
      if (host) from = *host;
      current = migrate(current, from, *target, kms, registry);
      result.migrated = true;
      ProvenanceRecord rec;
      rec.op = OpKind::Migration;
      rec.meta = {{"from", from.enclaveId},
                  {"to", target->enclaveId},
                  {"round", std::to_string(world.clock)}};
      audit.push_back(std::move(rec));
      advance(kMigrationRounds);
      continue;
    }
    const Hash32 key = derive_key(kms, current.containerId);
    WalletState state = unseal(current, key, world.lastSeenVersion[current.containerId]);

    // 3. Any newly detected compromise forces a key rotation.
    std::vector<std::string> detected;
    for (const auto& e : world.enclaves) {
      if (e.status == EnclaveStatus::Compromised && !world.handledCompromises.contains(e.enclaveId)) {
        detected.push_back(e.enclaveId);
      }
    }
    if (!detected.empty()) {
      RotationResult rotated = rotate_key(kms, current);
      kms = std::move(rotated.kms);
      current = std::move(rotated.container);
      world.handledCompromises.insert(detected.begin(), detected.end());
      world.lastSeenVersion[current.containerId] = current.meta.stateVersion;
      result.rotated = true;
      ProvenanceRecord rec;
      rec.op = OpKind::KeyRotation;
      rec.meta = {{"epoch", std::to_string(kms.epoch)}, {"round", std::to_string(world.clock)}};
      audit.push_back(std::move(rec));
      advance(kRotationRounds);
      continue;
    }

    // 4. Governance quorum, relaxing with elapsed rounds.
    if (!quorum_check(registry, world.approvals, world.clock - start)) {
      bool any_approver = std::any_of(world.approvals.begin(), world.approvals.end(),
                                      [&](const std::string& a) { return registry.approvers.contains(a); });
      require(any_approver || world.has_pending(FaultKind::Approve), ErrorKind::QuorumUnreachable,
              "no approver has approved and none is scheduled to");
      advance(1);
      continue;
    }

    // 5. Execute and append to H, then reseal one version up.
    for (auto& rec : audit) {
      state.history.append(std::move(rec));
      ++state.stateVersion;
    }
    KeyHandle signer(state.keys);
    try {
      op(state, signer);
    } catch (const Error& e) {
      result.opError = e;
    }
    ContainerMeta meta = current.meta;
    ++meta.stateVersion;
    SealedContainer sealed = seal(state, key, current.containerId, std::move(meta));
    sealed.host = target->enclaveId;
    world.lastSeenVersion[sealed.containerId] = sealed.meta.stateVersion;
    result.container = std::move(sealed);
    result.rounds = world.clock - start;
    return result;
  }
  fail(ErrorKind::QuorumUnreachable, "recovery exceeded the simulation horizon");
}

}  // namespace pass::enclave
