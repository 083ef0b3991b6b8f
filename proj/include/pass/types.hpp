#pragma once

// Value types shared by every module. Nothing here mutates wallet state.

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pass/errors.hpp"

namespace pass {

using Bytes = std::vector<std::uint8_t>;
using Hash32 = std::array<std::uint8_t, 32>;

std::string to_hex(std::span<const std::uint8_t> bytes);  // "0x..." lowercase
Bytes from_hex(std::string_view hex);                      // accepts optional 0x

template <std::size_t N>
std::array<std::uint8_t, N> fixed_from_hex(std::string_view hex) {
  Bytes raw = from_hex(hex);
  require(raw.size() == N, ErrorKind::ParseError,
          "expected " + std::to_string(N) + " bytes of hex");
  std::array<std::uint8_t, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = raw[i];
  return out;
}

/// Base-unit quantity. Arithmetic never wraps: underflow and overflow throw.
class Amount {
 public:
  constexpr Amount() = default;
  constexpr explicit Amount(std::uint64_t v) : value_(v) {}

  constexpr std::uint64_t value() const noexcept { return value_; }
  constexpr bool is_zero() const noexcept { return value_ == 0; }

  Amount operator+(Amount other) const;
  Amount operator-(Amount other) const;
  Amount& operator+=(Amount other) { return *this = *this + other; }
  Amount& operator-=(Amount other) { return *this = *this - other; }

  constexpr auto operator<=>(const Amount&) const = default;

 private:
  std::uint64_t value_ = 0;
};

struct Fungible {
  std::string symbol;
  auto operator<=>(const Fungible&) const = default;
};

struct NonFungible {
  std::string collection;
  std::uint64_t tokenId = 0;
  auto operator<=>(const NonFungible&) const = default;
};

struct GsmDomain {
  std::string dom;
  auto operator<=>(const GsmDomain&) const = default;
};

/// Fungible tokens, individual NFT token ids, and GSM signing domains.
/// Canonical text form: "fungible:<symbol>", "nft:<collection>:<id>",
/// "gsm:<domain>". Unprefixed text parses as a fungible symbol.
class AssetId {
 public:
  using Kind = std::variant<Fungible, NonFungible, GsmDomain>;

  AssetId() = default;
  AssetId(Kind kind);  // NOLINT(google-explicit-constructor)

  static AssetId fungible(std::string symbol);
  static AssetId nft(std::string collection, std::uint64_t tokenId);
  static AssetId gsm(std::string dom);
  static AssetId parse(std::string_view text);

  const Kind& kind() const noexcept { return kind_; }
  bool is_fungible() const { return std::holds_alternative<Fungible>(kind_); }
  bool is_nft() const { return std::holds_alternative<NonFungible>(kind_); }
  bool is_gsm() const { return std::holds_alternative<GsmDomain>(kind_); }
  /// NFTs and GSM domains only admit balances in {0, 1}.
  bool is_unitary() const { return !is_fungible(); }

  std::string to_string() const;

  auto operator<=>(const AssetId&) const = default;

 private:
  Kind kind_ = Fungible{};
};

class SubaccountId {
 public:
  SubaccountId() = default;
  explicit SubaccountId(std::string id);

  const std::string& str() const noexcept { return id_; }
  auto operator<=>(const SubaccountId&) const = default;

 private:
  std::string id_;
};

/// 20-byte account address, rendered as lowercase 0x-hex.
class ExternalAddress {
 public:
  using Raw = std::array<std::uint8_t, 20>;

  ExternalAddress() = default;
  explicit ExternalAddress(const Raw& raw) : raw_(raw) {}
  static ExternalAddress parse(std::string_view hex);

  const Raw& raw() const noexcept { return raw_; }
  std::string to_string() const { return to_hex(raw_); }

  auto operator<=>(const ExternalAddress&) const = default;

 private:
  Raw raw_{};
};

struct SecretKeyAccess;

/// Opaque 32-byte signing seed. Its bytes are reachable only through
/// SecretKeyAccess, which is private to the enclave runtime.
class SecretKey {
 public:
  SecretKey() = default;
  bool present() const noexcept { return present_; }
  bool operator==(const SecretKey&) const = default;

 private:
  friend struct SecretKeyAccess;
  std::array<std::uint8_t, 32> bytes_{};
  bool present_ = false;
};

struct KeyPair {
  ExternalAddress pk;
  SecretKey sk;
  bool operator==(const KeyPair&) const = default;
};

struct InboxEntry {
  std::uint64_t entryId = 0;
  AssetId asset;
  Amount amount;
  ExternalAddress sender;
  bool claimed = false;
  bool operator==(const InboxEntry&) const = default;
};

enum class OutboxStatus { Pending, Broadcast };

struct OutboxEntry {
  AssetId asset;
  Amount amount;
  ExternalAddress extDst;
  std::uint64_t nonce = 0;
  std::optional<Bytes> payload;
  OutboxStatus status = OutboxStatus::Pending;
  bool operator==(const OutboxEntry&) const = default;
};

enum class OpKind {
  Deposit,
  Claim,
  Transfer,
  Withdraw,
  GsmSign,
  GsmGrant,
  KeyRotation,
  Migration,
};

std::string_view to_string(OpKind op);
OpKind parse_op_kind(std::string_view text);

struct OutboxParty {
  auto operator<=>(const OutboxParty&) const = default;
};

/// Source or sink of a provenance record. Canonical text form:
/// "ext:0x...", "sub:<id>", "outbox".
using Party = std::variant<ExternalAddress, SubaccountId, OutboxParty>;

std::string party_to_string(const Party& party);
Party parse_party(std::string_view text);

struct ProvenanceRecord {
  std::uint64_t seq = 0;
  OpKind op = OpKind::Deposit;
  std::optional<AssetId> asset;
  std::optional<Amount> amount;
  std::optional<Party> from;
  std::optional<Party> to;
  std::map<std::string, std::string> meta;
  bool operator==(const ProvenanceRecord&) const = default;
};

/// Ledger L with zero balances erased, so structural equality is ledger
/// equality.
using BalanceMap = std::map<AssetId, Amount>;
using Ledger = std::map<SubaccountId, BalanceMap>;

Amount ledger_balance(const Ledger& ledger, const SubaccountId& u, const AssetId& asset);
void ledger_credit(Ledger& ledger, const SubaccountId& u, const AssetId& asset, Amount x);
void ledger_debit(Ledger& ledger, const SubaccountId& u, const AssetId& asset, Amount x);

}  // namespace pass
