#include "pass/serialize.hpp"

#include <charconv>

namespace pass::canonical {

namespace {

template <typename F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(ErrorKind::ParseError, e.what());
  }
}

std::string status_name(OutboxStatus s) { return s == OutboxStatus::Pending ? "Pending" : "Broadcast"; }

OutboxStatus parse_status(const std::string& s) {
  if (s == "Pending") return OutboxStatus::Pending;
  if (s == "Broadcast") return OutboxStatus::Broadcast;
  fail(ErrorKind::ParseError, "unknown outbox status: " + s);
}

Json address_set(const std::set<ExternalAddress>& addrs) {
  Json out = Json::array();
  for (const auto& a : addrs) out.push_back(a.to_string());
  return out;
}

std::set<ExternalAddress> address_set_from(const Json& j) {
  std::set<ExternalAddress> out;
  for (const auto& a : j) out.insert(ExternalAddress::parse(a.get<std::string>()));
  return out;
}

}  // namespace

Json uint_to_json(std::uint64_t v) {
  if (v > kMaxSafeInteger) return std::to_string(v);
  return v;
}

std::uint64_t uint_from_json(const Json& j) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    auto v = j.get<std::int64_t>();
    require(v >= 0, ErrorKind::ParseError, "negative integer");
    return static_cast<std::uint64_t>(v);
  }
  require(j.is_string(), ErrorKind::ParseError, "expected unsigned integer");
  const auto& s = j.get_ref<const std::string&>();
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc{} && ptr == s.data() + s.size() && !s.empty(), ErrorKind::ParseError,
          "invalid decimal integer: " + s);
  return v;
}

std::string dump(const Json& j) { return j.dump(-1, ' ', false, Json::error_handler_t::strict); }

Json parse(const std::string& text) {
  return guarded([&] { return Json::parse(text); });
}

Json to_json(const Amount& a) { return uint_to_json(a.value()); }

Amount amount_from_json(const Json& j) { return Amount(uint_from_json(j)); }

Json to_json(const ProvenanceRecord& r) {
  Json j = Json::object();
  j["seq"] = uint_to_json(r.seq);
  j["op"] = std::string(to_string(r.op));
  if (r.asset) j["asset"] = r.asset->to_string();
  if (r.amount) j["amount"] = to_json(*r.amount);
  if (r.from) j["from"] = party_to_string(*r.from);
  if (r.to) j["to"] = party_to_string(*r.to);
  Json meta = Json::object();
  for (const auto& [k, v] : r.meta) meta[k] = v;
  j["meta"] = std::move(meta);
  return j;
}

Json to_json(std::span<const ProvenanceRecord> records) {
  Json arr = Json::array();
  for (const auto& r : records) arr.push_back(to_json(r));
  return arr;
}

ProvenanceRecord record_from_json(const Json& j) {
  return guarded([&] {
    ProvenanceRecord r;
    r.seq = uint_from_json(j.at("seq"));
    r.op = parse_op_kind(j.at("op").get<std::string>());
    if (j.contains("asset")) r.asset = AssetId::parse(j.at("asset").get<std::string>());
    if (j.contains("amount")) r.amount = amount_from_json(j.at("amount"));
    if (j.contains("from")) r.from = parse_party(j.at("from").get<std::string>());
    if (j.contains("to")) r.to = parse_party(j.at("to").get<std::string>());
    for (const auto& [k, v] : j.at("meta").items()) r.meta[k] = v.get<std::string>();
    return r;
  });
}

Json to_json(const InboxEntry& e) {
  return Json{{"entryId", uint_to_json(e.entryId)},
              {"asset", e.asset.to_string()},
              {"amount", to_json(e.amount)},
              {"sender", e.sender.to_string()},
              {"claimed", e.claimed}};
}

InboxEntry inbox_entry_from_json(const Json& j) {
  return guarded([&] {
    InboxEntry e;
    e.entryId = uint_from_json(j.at("entryId"));
    e.asset = AssetId::parse(j.at("asset").get<std::string>());
    e.amount = amount_from_json(j.at("amount"));
    e.sender = ExternalAddress::parse(j.at("sender").get<std::string>());
    e.claimed = j.at("claimed").get<bool>();
    return e;
  });
}

Json to_json(const OutboxEntry& e) {
  Json j{{"asset", e.asset.to_string()},
         {"amount", to_json(e.amount)},
         {"extDst", e.extDst.to_string()},
         {"nonce", uint_to_json(e.nonce)},
         {"status", status_name(e.status)}};
  if (e.payload) j["payload"] = to_hex(*e.payload);
  return j;
}

OutboxEntry outbox_entry_from_json(const Json& j) {
  return guarded([&] {
    OutboxEntry e;
    e.asset = AssetId::parse(j.at("asset").get<std::string>());
    e.amount = amount_from_json(j.at("amount"));
    e.extDst = ExternalAddress::parse(j.at("extDst").get<std::string>());
    e.nonce = uint_from_json(j.at("nonce"));
    e.status = parse_status(j.at("status").get<std::string>());
    if (j.contains("payload")) e.payload = from_hex(j.at("payload").get<std::string>());
    return e;
  });
}

Json to_json(const Ledger& ledger) {
  Json j = Json::object();
  for (const auto& [u, balances] : ledger) {
    Json inner = Json::object();
    for (const auto& [asset, amount] : balances) inner[asset.to_string()] = to_json(amount);
    j[u.str()] = std::move(inner);
  }
  return j;
}

Ledger ledger_from_json(const Json& j) {
  return guarded([&] {
    Ledger out;
    for (const auto& [u, balances] : j.items()) {
      auto& inner = out[SubaccountId(u)];
      for (const auto& [asset, amount] : balances.items()) {
        inner[AssetId::parse(asset)] = amount_from_json(amount);
      }
    }
    return out;
  });
}

Json to_json(const policy::PolicyConjunct& c) {
  using namespace policy;
  if (std::holds_alternative<AllowAll>(c)) return Json{{"kind", "allow-all"}};
  if (const auto* w = std::get_if<WhitelistDest>(&c)) {
    return Json{{"kind", "whitelist"}, {"addresses", address_set(w->allowed)}};
  }
  if (const auto* b = std::get_if<BlacklistDest>(&c)) {
    return Json{{"kind", "blacklist"}, {"addresses", address_set(b->denied)}};
  }
  const auto& cap = std::get<SubaccountSpendCap>(c);
  return Json{{"kind", "spend-cap"}, {"caps", to_json(cap.caps)}, {"spent", to_json(cap.spent)}};
}

policy::PolicyConjunct conjunct_from_json(const Json& j) {
  using namespace policy;
  return guarded([&]() -> PolicyConjunct {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "allow-all") return AllowAll{};
    if (kind == "whitelist") return WhitelistDest{address_set_from(j.at("addresses"))};
    if (kind == "blacklist") return BlacklistDest{address_set_from(j.at("addresses"))};
    if (kind == "spend-cap") {
      SubaccountSpendCap cap;
      cap.caps = ledger_from_json(j.at("caps"));
      if (j.contains("spent")) cap.spent = ledger_from_json(j.at("spent"));
      return cap;
    }
    fail(ErrorKind::ParseError, "unknown policy conjunct kind: " + kind);
  });
}

Json to_json(const policy::PolicySet& p) {
  Json arr = Json::array();
  for (const auto& c : p.conjuncts) arr.push_back(to_json(c));
  return arr;
}

policy::PolicySet policy_from_json(const Json& j) {
  require(j.is_array(), ErrorKind::ParseError, "policy must be a JSON list");
  policy::PolicySet p;
  for (const auto& c : j) p.conjuncts.push_back(conjunct_from_json(c));
  return p;
}

Json to_json(const PublicState& p) {
  Json txs = Json::array();
  for (const auto& t : p.outbox.txs) txs.push_back(to_json(t));
  Json totals = Json::object();
  for (const auto& [asset, amount] : p.assetTotals) totals[asset.to_string()] = to_json(amount);
  return Json{{"pk", p.pk.to_string()},
              {"outbox", Json{{"txs", std::move(txs)}, {"nonce", uint_to_json(p.outbox.nonce)}}},
              {"assetTotals", std::move(totals)}};
}

Json to_json(const provenance::Attestation& a) {
  return Json{{"digest", to_hex(a.digest)},
              {"signature", to_hex(a.signature)},
              {"coveredSeq", uint_to_json(a.coveredSeq)},
              {"nonce", uint_to_json(a.nonce)}};
}

provenance::Attestation attestation_from_json(const Json& j) {
  return guarded([&] {
    provenance::Attestation a;
    a.digest = fixed_from_hex<32>(j.at("digest").get<std::string>());
    a.signature = from_hex(j.at("signature").get<std::string>());
    a.coveredSeq = uint_from_json(j.at("coveredSeq"));
    a.nonce = uint_from_json(j.at("nonce"));
    return a;
  });
}

Json state_to_json(const WalletState& s) {
  Json inbox = Json::array();
  for (const auto& e : s.inbox) inbox.push_back(to_json(e));
  Json outbox = Json::array();
  for (const auto& e : s.outbox) outbox.push_back(to_json(e));
  Json gsm = Json::object();
  for (const auto& [dom, u] : s.gsmAssignments) gsm[dom] = u.str();
  Json subs = Json::array();
  for (const auto& u : s.subaccounts) subs.push_back(u.str());
  Json bindings = Json::object();
  for (const auto& [addr, u] : s.senderBindings) bindings[addr.to_string()] = u.str();

  return Json{{"pk", s.keys.pk.to_string()},
              {"nonce", uint_to_json(s.nonce)},
              {"inbox", std::move(inbox)},
              {"outbox", std::move(outbox)},
              {"ledger", to_json(s.ledger)},
              {"history", to_json(s.history.records())},
              {"gsmAssignments", std::move(gsm)},
              {"root", s.root.str()},
              {"subaccounts", std::move(subs)},
              {"policy", to_json(s.policy)},
              {"senderBindings", std::move(bindings)},
              {"nextEntryId", uint_to_json(s.nextEntryId)},
              {"stateVersion", uint_to_json(s.stateVersion)}};
}

WalletState state_from_json(const Json& j) {
  return guarded([&] {
    WalletState s;
    s.keys.pk = ExternalAddress::parse(j.at("pk").get<std::string>());
    s.nonce = uint_from_json(j.at("nonce"));
    for (const auto& e : j.at("inbox")) s.inbox.push_back(inbox_entry_from_json(e));
    for (const auto& e : j.at("outbox")) s.outbox.push_back(outbox_entry_from_json(e));
    s.ledger = ledger_from_json(j.at("ledger"));
    s.root = SubaccountId(j.at("root").get<std::string>());
    std::vector<ProvenanceRecord> records;
    for (const auto& r : j.at("history")) records.push_back(record_from_json(r));
    s.history = provenance::ProvenanceLog::from_records(s.root, std::move(records));
    for (const auto& [dom, u] : j.at("gsmAssignments").items()) {
      s.gsmAssignments.emplace(dom, SubaccountId(u.get<std::string>()));
    }
    for (const auto& u : j.at("subaccounts")) s.subaccounts.insert(SubaccountId(u.get<std::string>()));
    s.policy = policy_from_json(j.at("policy"));
    for (const auto& [addr, u] : j.at("senderBindings").items()) {
      s.senderBindings.emplace(ExternalAddress::parse(addr), SubaccountId(u.get<std::string>()));
    }
    s.nextEntryId = uint_from_json(j.at("nextEntryId"));
    s.stateVersion = uint_from_json(j.at("stateVersion"));
    return s;
  });
}

}  // namespace pass::canonical
