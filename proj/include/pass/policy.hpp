#pragma once

#include <map>
#include <optional>
#include <set>
#include <variant>
#include <vector>

#include "pass/types.hpp"

namespace pass::policy {

struct AllowAll {
  bool operator==(const AllowAll&) const = default;
};

struct WhitelistDest {
  std::set<ExternalAddress> allowed;
  bool operator==(const WhitelistDest&) const = default;
};

struct BlacklistDest {
  std::set<ExternalAddress> denied;
  bool operator==(const BlacklistDest&) const = default;
};

/// Per-subaccount outflow caps. `spent` is the window counter; it only
/// advances through record_spend and is cleared by reset_window.
struct SubaccountSpendCap {
  Ledger caps;
  Ledger spent;
  bool operator==(const SubaccountSpendCap&) const = default;
};

using PolicyConjunct = std::variant<AllowAll, WhitelistDest, BlacklistDest, SubaccountSpendCap>;

/// Conjunction of constraints attached to Allow. Empty means allow-all.
struct PolicySet {
  std::vector<PolicyConjunct> conjuncts;
  bool operator==(const PolicySet&) const = default;
};

struct PolicyContext {
  SubaccountId u;
  AssetId asset;
  Amount amount;
  std::optional<ExternalAddress> extDst;  // present for withdrawals only
};

bool evaluate(const PolicyConjunct& conjunct, const PolicyContext& ctx);
bool evaluate(const PolicySet& policy, const PolicyContext& ctx);

// Window counters. Called by the engine after a spend commits.
void record_spend(PolicySet& policy, const PolicyContext& ctx);
void reset_window(PolicySet& policy);

}  // namespace pass::policy
