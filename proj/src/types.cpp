#include "pass/types.hpp"

#include <limits>

namespace pass {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InsufficientBalance: return "InsufficientBalance";
    case ErrorKind::NotAllowed: return "NotAllowed";
    case ErrorKind::UnknownEntry: return "UnknownEntry";
    case ErrorKind::AlreadyClaimed: return "AlreadyClaimed";
    case ErrorKind::AmountMismatch: return "AmountMismatch";
    case ErrorKind::UnknownSubaccount: return "UnknownSubaccount";
    case ErrorKind::UnitaryViolation: return "UnitaryViolation";
    case ErrorKind::SelfTransfer: return "SelfTransfer";
    case ErrorKind::ZeroAmount: return "ZeroAmount";
    case ErrorKind::MalformedLog: return "MalformedLog";
    case ErrorKind::NoProvenance: return "NoProvenance";
    case ErrorKind::NonceMismatch: return "NonceMismatch";
    case ErrorKind::BadSignature: return "BadSignature";
    case ErrorKind::InsufficientOnChainBalance: return "InsufficientOnChainBalance";
    case ErrorKind::NftAlreadyHeld: return "NftAlreadyHeld";
    case ErrorKind::KeyUnavailable: return "KeyUnavailable";
    case ErrorKind::NotAttested: return "NotAttested";
    case ErrorKind::SealedStateCorrupt: return "SealedStateCorrupt";
    case ErrorKind::RollbackDetected: return "RollbackDetected";
    case ErrorKind::QuorumUnreachable: return "QuorumUnreachable";
    case ErrorKind::SnapshotCorrupt: return "SnapshotCorrupt";
    case ErrorKind::Overflow: return "Overflow";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

namespace {

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 + bytes.size() * 2);
  out += "0x";
  for (std::uint8_t b : bytes) {
    out += kDigits[b >> 4];
    out += kDigits[b & 0x0f];
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.starts_with("0x") || hex.starts_with("0X")) hex.remove_prefix(2);
  require(hex.size() % 2 == 0, ErrorKind::ParseError, "odd-length hex string");
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = hex_digit(hex[i]);
    int lo = hex_digit(hex[i + 1]);
    require(hi >= 0 && lo >= 0, ErrorKind::ParseError, "invalid hex digit");
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

Amount Amount::operator+(Amount other) const {
  require(value_ <= std::numeric_limits<std::uint64_t>::max() - other.value_,
          ErrorKind::Overflow, "amount overflow");
  return Amount(value_ + other.value_);
}

Amount Amount::operator-(Amount other) const {
  require(value_ >= other.value_, ErrorKind::InsufficientBalance, "amount underflow");
  return Amount(value_ - other.value_);
}

AssetId::AssetId(Kind kind) : kind_(std::move(kind)) {
  if (const auto* f = std::get_if<Fungible>(&kind_)) {
    require(!f->symbol.empty(), ErrorKind::InvalidArgument, "empty fungible symbol");
  } else if (const auto* n = std::get_if<NonFungible>(&kind_)) {
    require(!n->collection.empty(), ErrorKind::InvalidArgument, "empty NFT collection");
  } else {
    require(!std::get<GsmDomain>(kind_).dom.empty(), ErrorKind::InvalidArgument,
            "empty GSM domain");
  }
}

AssetId AssetId::fungible(std::string symbol) { return AssetId(Fungible{std::move(symbol)}); }

AssetId AssetId::nft(std::string collection, std::uint64_t tokenId) {
  return AssetId(NonFungible{std::move(collection), tokenId});
}

AssetId AssetId::gsm(std::string dom) { return AssetId(GsmDomain{std::move(dom)}); }

AssetId AssetId::parse(std::string_view text) {
  if (text.starts_with("fungible:")) return fungible(std::string(text.substr(9)));
  if (text.starts_with("gsm:")) return gsm(std::string(text.substr(4)));
  if (text.starts_with("nft:")) {
    std::string_view rest = text.substr(4);
    auto colon = rest.rfind(':');
    require(colon != std::string_view::npos && colon + 1 < rest.size(), ErrorKind::ParseError,
            "NFT asset must be nft:<collection>:<tokenId>");
    std::uint64_t id = 0;
    for (char c : rest.substr(colon + 1)) {
      require(c >= '0' && c <= '9', ErrorKind::ParseError, "NFT token id must be decimal");
      require(id <= (std::numeric_limits<std::uint64_t>::max() - 9) / 10, ErrorKind::ParseError,
              "NFT token id too large");
      id = id * 10 + static_cast<std::uint64_t>(c - '0');
    }
    return nft(std::string(rest.substr(0, colon)), id);
  }
  return fungible(std::string(text));
}

std::string AssetId::to_string() const {
  if (const auto* f = std::get_if<Fungible>(&kind_)) return "fungible:" + f->symbol;
  if (const auto* n = std::get_if<NonFungible>(&kind_)) {
    return "nft:" + n->collection + ":" + std::to_string(n->tokenId);
  }
  return "gsm:" + std::get<GsmDomain>(kind_).dom;
}

SubaccountId::SubaccountId(std::string id) : id_(std::move(id)) {
  require(!id_.empty(), ErrorKind::InvalidArgument, "subaccount id must be nonempty");
}

ExternalAddress ExternalAddress::parse(std::string_view hex) {
  require(hex.starts_with("0x") || hex.starts_with("0X"), ErrorKind::ParseError,
          "address must start with 0x");
  return ExternalAddress(fixed_from_hex<20>(hex));
}

std::string_view to_string(OpKind op) {
  switch (op) {
    case OpKind::Deposit: return "Deposit";
    case OpKind::Claim: return "Claim";
    case OpKind::Transfer: return "Transfer";
    case OpKind::Withdraw: return "Withdraw";
    case OpKind::GsmSign: return "GsmSign";
    case OpKind::GsmGrant: return "GsmGrant";
    case OpKind::KeyRotation: return "KeyRotation";
    case OpKind::Migration: return "Migration";
  }
  return "Unknown";
}

OpKind parse_op_kind(std::string_view text) {
  for (OpKind op : {OpKind::Deposit, OpKind::Claim, OpKind::Transfer, OpKind::Withdraw,
                    OpKind::GsmSign, OpKind::GsmGrant, OpKind::KeyRotation, OpKind::Migration}) {
    if (to_string(op) == text) return op;
  }
  fail(ErrorKind::ParseError, "unknown op kind: " + std::string(text));
}

std::string party_to_string(const Party& party) {
  if (const auto* a = std::get_if<ExternalAddress>(&party)) return "ext:" + a->to_string();
  if (const auto* s = std::get_if<SubaccountId>(&party)) return "sub:" + s->str();
  return "outbox";
}

Party parse_party(std::string_view text) {
  if (text == "outbox") return OutboxParty{};
  if (text.starts_with("ext:")) return ExternalAddress::parse(text.substr(4));
  if (text.starts_with("sub:")) return SubaccountId(std::string(text.substr(4)));
  fail(ErrorKind::ParseError, "unknown party: " + std::string(text));
}

Amount ledger_balance(const Ledger& ledger, const SubaccountId& u, const AssetId& asset) {
  auto it = ledger.find(u);
  if (it == ledger.end()) return Amount{};
  auto jt = it->second.find(asset);
  return jt == it->second.end() ? Amount{} : jt->second;
}

void ledger_credit(Ledger& ledger, const SubaccountId& u, const AssetId& asset, Amount x) {
  if (x.is_zero()) return;
  Amount& slot = ledger[u][asset];
  slot += x;
}

void ledger_debit(Ledger& ledger, const SubaccountId& u, const AssetId& asset, Amount x) {
  if (x.is_zero()) return;
  auto it = ledger.find(u);
  require(it != ledger.end(), ErrorKind::InsufficientBalance, "no balance for " + u.str());
  auto jt = it->second.find(asset);
  require(jt != it->second.end(), ErrorKind::InsufficientBalance,
          "no " + asset.to_string() + " balance for " + u.str());
  jt->second -= x;
  if (jt->second.is_zero()) {
    it->second.erase(jt);
    if (it->second.empty()) ledger.erase(it);
  }
}

}  // namespace pass
