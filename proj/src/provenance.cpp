#include "pass/provenance.hpp"

#include <algorithm>
#include <charconv>

#include "pass/crypto.hpp"
#include "pass/serialize.hpp"

namespace pass::provenance {

namespace {

[[noreturn]] void malformed(const ProvenanceRecord& r, const std::string& why) {
  fail(ErrorKind::MalformedLog, "record " + std::to_string(r.seq) + " (" +
                                    std::string(to_string(r.op)) + "): " + why);
}

const SubaccountId& sub_party(const ProvenanceRecord& r, const std::optional<Party>& p,
                              const char* role) {
  if (!p || !std::holds_alternative<SubaccountId>(*p)) {
    malformed(r, std::string(role) + " must be a subaccount");
  }
  return std::get<SubaccountId>(*p);
}

const AssetId& asset_of(const ProvenanceRecord& r) {
  if (!r.asset) malformed(r, "missing asset");
  return *r.asset;
}

Amount amount_of(const ProvenanceRecord& r) {
  if (!r.amount || r.amount->is_zero()) malformed(r, "missing or zero amount");
  return *r.amount;
}

std::uint64_t entry_of(const ProvenanceRecord& r) {
  auto it = r.meta.find(kEntryMeta);
  if (it == r.meta.end()) malformed(r, "missing entry reference");
  std::uint64_t id = 0;
  const auto& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), id);
  if (ec != std::errc{} || ptr != s.data() + s.size()) malformed(r, "bad entry reference");
  return id;
}

}  // namespace

Amount ReplayFolder::implied_balance(const SubaccountId& u, const AssetId& asset) const {
  Amount explicit_balance = ledger_balance(ledger_, u, asset);
  if (const auto* g = std::get_if<GsmDomain>(&asset.kind())) {
    if (default_signer_ && *default_signer_ == u && !touched_domains_.contains(g->dom)) {
      return explicit_balance + Amount(1);
    }
  }
  return explicit_balance;
}

void ReplayFolder::apply(const ProvenanceRecord& r) {
  if (check_seq_ && r.seq != next_seq_) {
    malformed(r, "expected seq " + std::to_string(next_seq_));
  }

  // Validate everything first, then commit, so a rejected record leaves
  // the fold untouched.
  auto checked_sum = [&](Amount a, Amount b) {
    if (a.value() > UINT64_MAX - b.value()) malformed(r, "balance overflow");
    return a + b;
  };

  switch (r.op) {
    case OpKind::Deposit: {
      const AssetId& asset = asset_of(r);
      Amount x = amount_of(r);
      if (asset.is_gsm()) malformed(r, "GSM domains cannot be deposited");
      if (asset.is_unitary() && x != Amount(1)) malformed(r, "unitary asset amount must be 1");
      std::uint64_t entry = entry_of(r);
      if (deposits_.contains(entry)) malformed(r, "duplicate inbox entry");
      deposits_.emplace(entry, Deposit{asset, x, false});
      break;
    }
    case OpKind::Claim: {
      const SubaccountId& to = sub_party(r, r.to, "claimant");
      const AssetId& asset = asset_of(r);
      Amount x = amount_of(r);
      auto it = deposits_.find(entry_of(r));
      if (it == deposits_.end()) malformed(r, "claim of unknown deposit");
      if (it->second.claimed) malformed(r, "deposit claimed twice");
      if (it->second.asset != asset || it->second.amount != x) {
        malformed(r, "claim does not match its deposit");
      }
      checked_sum(ledger_balance(ledger_, to, asset), x);
      it->second.claimed = true;
      ledger_credit(ledger_, to, asset, x);
      break;
    }
    case OpKind::Transfer: {
      const SubaccountId& from = sub_party(r, r.from, "sender");
      const SubaccountId& to = sub_party(r, r.to, "recipient");
      const AssetId& asset = asset_of(r);
      Amount x = amount_of(r);
      if (asset.is_gsm()) malformed(r, "GSM authority moves by GsmGrant");
      if (ledger_balance(ledger_, from, asset) < x) malformed(r, "negative implied balance");
      if (from != to) checked_sum(ledger_balance(ledger_, to, asset), x);
      ledger_debit(ledger_, from, asset, x);
      ledger_credit(ledger_, to, asset, x);
      break;
    }
    case OpKind::Withdraw: {
      const SubaccountId& from = sub_party(r, r.from, "sender");
      const AssetId& asset = asset_of(r);
      Amount x = amount_of(r);
      if (ledger_balance(ledger_, from, asset) < x) malformed(r, "negative implied balance");
      ledger_debit(ledger_, from, asset, x);
      break;
    }
    case OpKind::GsmGrant: {
      const SubaccountId& from = sub_party(r, r.from, "grantor");
      const SubaccountId& to = sub_party(r, r.to, "grantee");
      const AssetId& asset = asset_of(r);
      const auto* g = std::get_if<GsmDomain>(&asset.kind());
      if (!g) malformed(r, "grant of a non-GSM asset");
      if (amount_of(r) != Amount(1)) malformed(r, "GSM grants move exactly one unit");
      if (implied_balance(from, asset) < Amount(1)) malformed(r, "grantor lacks authority");
      if (implied_balance(to, asset) != Amount{} && from != to) {
        malformed(r, "grantee already holds authority");
      }
      if (!touched_domains_.contains(g->dom)) {
        touched_domains_.insert(g->dom);
        if (default_signer_) ledger_credit(ledger_, *default_signer_, asset, Amount(1));
      }
      ledger_debit(ledger_, from, asset, Amount(1));
      ledger_credit(ledger_, to, asset, Amount(1));
      break;
    }
    case OpKind::GsmSign: {
      const SubaccountId& signer = sub_party(r, r.from, "signer");
      const AssetId& asset = asset_of(r);
      if (!asset.is_gsm()) malformed(r, "signing requires a GSM domain");
      if (implied_balance(signer, asset) < Amount(1)) malformed(r, "signer lacks authority");
      break;
    }
    case OpKind::KeyRotation:
    case OpKind::Migration:
      break;
  }
  next_seq_ = r.seq + 1;
}

ProvenanceLog ProvenanceLog::from_records(std::optional<SubaccountId> origin,
                                         std::vector<ProvenanceRecord> records) {
  ProvenanceLog log;
  log.origin_ = origin;
  log.fold_ = ReplayFolder(std::move(origin));
  log.records_.reserve(records.size());
  for (auto& r : records) {
    log.fold_.apply(r);
    log.records_.push_back(std::move(r));
  }
  return log;
}

const ProvenanceRecord& ProvenanceLog::append(ProvenanceRecord record) {
  record.seq = next_seq();
  fold_.apply(record);
  records_.push_back(std::move(record));
  return records_.back();
}

Ledger replay_ledger(std::span<const ProvenanceRecord> records,
                     const std::optional<SubaccountId>& origin) {
  ReplayFolder fold(origin);
  for (const auto& r : records) fold.apply(r);
  return fold.ledger();
}

bool check_allow(const policy::PolicyContext& ctx, const ProvenanceLog& log,
                 const policy::PolicySet& policy) {
  return log.fold().implied_balance(ctx.u, ctx.asset) >= ctx.amount &&
         policy::evaluate(policy, ctx);
}

bool check_allow_replay(const policy::PolicyContext& ctx, const ProvenanceLog& log,
                        const policy::PolicySet& policy) {
  ReplayFolder fold(log.origin());
  try {
    for (const auto& r : log.records()) fold.apply(r);
  } catch (const Error&) {
    return false;
  }
  return fold.implied_balance(ctx.u, ctx.asset) >= ctx.amount && policy::evaluate(policy, ctx);
}

Hash32 digest(std::span<const ProvenanceRecord> records) {
  return sha256(canonical::dump(canonical::to_json(records)));
}

Bytes attestation_message(const Hash32& digest, std::uint64_t coveredSeq, std::uint64_t nonce) {
  canonical::Json j{{"coveredSeq", canonical::uint_to_json(coveredSeq)},
                    {"digest", to_hex(digest)},
                    {"nonce", canonical::uint_to_json(nonce)}};
  std::string s = canonical::dump(j);
  return Bytes(s.begin(), s.end());
}

Attestation attest(const ProvenanceLog& log, const Signer& signer, std::uint64_t nonce) {
  Attestation att;
  att.digest = digest(log);
  att.coveredSeq = log.size();
  att.nonce = nonce;
  att.signature = signer.sign(attestation_message(att.digest, att.coveredSeq, att.nonce));
  return att;
}

bool verify_attestation(const ExternalAddress& pk, const Attestation& att,
                        std::span<const ProvenanceRecord> records) {
  if (att.coveredSeq > records.size()) return false;
  if (digest(records.first(att.coveredSeq)) != att.digest) return false;
  return verify_signature(pk, attestation_message(att.digest, att.coveredSeq, att.nonce),
                          att.signature);
}

bool chain_covers(std::span<const ProvenanceRecord> chain,
                  const std::optional<SubaccountId>& origin, const SubaccountId& u,
                  const AssetId& asset, Amount target) {
  ReplayFolder fold(origin, /*checkSeq=*/false);
  try {
    for (const auto& r : chain) fold.apply(r);
  } catch (const Error&) {
    return false;
  }
  return fold.implied_balance(u, asset) >= target;
}

std::vector<ProvenanceRecord> custody_chain(const ProvenanceLog& log, const SubaccountId& u,
                                            const AssetId& asset) {
  const auto& records = log.records();
  std::map<std::uint64_t, std::size_t> deposit_index;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].op == OpKind::Deposit) deposit_index[entry_of(records[i])] = i;
  }
  // Default GSM authority needs no custody chain; only explicit balances do.
  const Amount target = ledger_balance(log.fold().ledger(), u, asset);
  if (target.is_zero()) {
    fail(ErrorKind::NoProvenance, u.str() + " holds no " + asset.to_string());
  }

  // Backward pass. demand[p] is what p must hold at the current position
  // for every credit already selected downstream to fold without going
  // negative.
  std::map<SubaccountId, std::uint64_t> demand{{u, target.value()}};
  // Each unit is the set of record indexes added or dropped together.
  std::vector<std::vector<std::size_t>> units;
  for (std::size_t i = records.size(); i-- > 0;) {
    const auto& r = records[i];
    if (!r.asset || *r.asset != asset || !r.to) continue;
    const auto* to = std::get_if<SubaccountId>(&*r.to);
    if (!to) continue;
    auto it = demand.find(*to);
    if (it == demand.end() || it->second == 0) continue;
    const std::uint64_t x = r.amount ? r.amount->value() : 0;
    it->second -= std::min(it->second, x);
    if (r.op == OpKind::Claim) {
      units.push_back({deposit_index.at(entry_of(r)), i});
    } else if (r.op == OpKind::Transfer || r.op == OpKind::GsmGrant) {
      units.push_back({i});
      demand[std::get<SubaccountId>(*r.from)] += x;
    }
  }

  auto assemble = [&](const std::vector<bool>& keep) {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < units.size(); ++k) {
      if (keep[k]) idx.insert(idx.end(), units[k].begin(), units[k].end());
    }
    std::sort(idx.begin(), idx.end());
    std::vector<ProvenanceRecord> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(records[i]);
    return out;
  };

  // Units were collected latest-first, so dropping in collection order
  // keeps the lowest-seq credits when several would do.
  std::vector<bool> keep(units.size(), true);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t k = 0; k < units.size(); ++k) {
      if (!keep[k]) continue;
      keep[k] = false;
      if (chain_covers(assemble(keep), log.origin(), u, asset, target)) {
        changed = true;
      } else {
        keep[k] = true;
      }
    }
  }

  auto chain = assemble(keep);
  if (!chain_covers(chain, log.origin(), u, asset, target)) {
    fail(ErrorKind::MalformedLog, "no custody chain covers the balance of " + u.str());
  }
  return chain;
}

}  // namespace pass::provenance
