#pragma once

// Canonical JSON: sorted keys, no insignificant whitespace, unsigned
// integers above 2^53-1 as decimal strings, byte strings as 0x-hex.

#include <cstdint>
#include <string>

#include <json.hpp>

#include "pass/policy.hpp"
#include "pass/provenance.hpp"
#include "pass/state.hpp"
#include "pass/types.hpp"

namespace pass::canonical {

using Json = nlohmann::json;

inline constexpr std::uint64_t kMaxSafeInteger = (std::uint64_t{1} << 53) - 1;

Json uint_to_json(std::uint64_t v);
std::uint64_t uint_from_json(const Json& j);

/// Compact dump of an object tree whose maps already sort their keys.
std::string dump(const Json& j);
Json parse(const std::string& text);

Json to_json(const Amount& a);
Json to_json(const ProvenanceRecord& r);
Json to_json(std::span<const ProvenanceRecord> records);
Json to_json(const InboxEntry& e);
Json to_json(const OutboxEntry& e);
Json to_json(const Ledger& ledger);
Json to_json(const policy::PolicyConjunct& c);
Json to_json(const policy::PolicySet& p);
Json to_json(const PublicState& p);
Json to_json(const provenance::Attestation& a);

/// Every public field of the wallet; the secret key is never included.
Json state_to_json(const WalletState& s);

Amount amount_from_json(const Json& j);
ProvenanceRecord record_from_json(const Json& j);
InboxEntry inbox_entry_from_json(const Json& j);
OutboxEntry outbox_entry_from_json(const Json& j);
Ledger ledger_from_json(const Json& j);
policy::PolicyConjunct conjunct_from_json(const Json& j);
policy::PolicySet policy_from_json(const Json& j);
provenance::Attestation attestation_from_json(const Json& j);

/// Inverse of state_to_json. The secret key is left absent; the history is
/// re-folded record by record.
WalletState state_from_json(const Json& j);

inline std::string canonical_string(const WalletState& s) { return dump(state_to_json(s)); }

}  // namespace pass::canonical
