#include "pass/policy.hpp"

namespace pass::policy {

namespace {

struct ConjunctEvaluator {
  const PolicyContext& ctx;

  bool operator()(const AllowAll&) const { return true; }

  bool operator()(const WhitelistDest& w) const {
    return !ctx.extDst || w.allowed.contains(*ctx.extDst);
  }

  bool operator()(const BlacklistDest& b) const {
    return !ctx.extDst || !b.denied.contains(*ctx.extDst);
  }

  bool operator()(const SubaccountSpendCap& cap) const {
    auto it = cap.caps.find(ctx.u);
    if (it == cap.caps.end()) return true;
    auto jt = it->second.find(ctx.asset);
    if (jt == it->second.end()) return true;
    Amount spent = ledger_balance(cap.spent, ctx.u, ctx.asset);
    // A policy file may carry a counter already past its limit.
    return spent <= jt->second && ctx.amount <= jt->second - spent;
  }
};

}  // namespace

bool evaluate(const PolicyConjunct& conjunct, const PolicyContext& ctx) {
  return std::visit(ConjunctEvaluator{ctx}, conjunct);
}

bool evaluate(const PolicySet& policy, const PolicyContext& ctx) {
  for (const auto& c : policy.conjuncts) {
    if (!evaluate(c, ctx)) return false;
  }
  return true;
}

void record_spend(PolicySet& policy, const PolicyContext& ctx) {
  for (auto& c : policy.conjuncts) {
    auto* cap = std::get_if<SubaccountSpendCap>(&c);
    if (!cap) continue;
    auto it = cap->caps.find(ctx.u);
    if (it == cap->caps.end() || !it->second.contains(ctx.asset)) continue;
    ledger_credit(cap->spent, ctx.u, ctx.asset, ctx.amount);
  }
}

void reset_window(PolicySet& policy) {
  for (auto& c : policy.conjuncts) {
    if (auto* cap = std::get_if<SubaccountSpendCap>(&c)) cap->spent.clear();
  }
}

}  // namespace pass::policy
