#pragma once

// Scripted runs over a wallet hosted in the simulated enclave world. Every
// event executes through recover_and_execute, so fault events shape the
// rounds each later event takes.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "pass/chain.hpp"
#include "pass/enclave.hpp"
#include "pass/state.hpp"

namespace pass::scenario {

/// The world a scenario starts from: three enclaves (e0 primary, e1 on the
/// other vendor, e2), a KMS and a governance registry.
struct WorldConfig {
  std::uint64_t kmsNodes = 5;
  std::uint64_t kmsThreshold = 3;
  std::uint64_t quorum = 1;
  std::uint64_t deltaT = 4;
  std::vector<std::string> approvers{"gov0"};
  std::vector<std::string> initialApprovals{"gov0"};
  std::string seed = "scenario";
};

struct ScenarioResult {
  WalletState state;  // last unsealed view, sk stripped
  chain::SimChain chain;
  enclave::SealedContainer container;
  std::vector<chain::ChainAction> trace;
  std::uint64_t rounds = 0;  // total rounds spent across all events

  nlohmann::json to_json() const;
};

/// Events (a JSON list, each object has "event" and an optional "round"):
///   {"event":"subaccount","u":..}             create a subaccount
///   {"event":"bind","sender":..,"u":..}       bind a depositor to a subaccount
///   {"event":"deposit","from":..,"asset":..,"amount":..}
///   {"event":"claim","u":..,"entry":..}
///   {"event":"transfer","from":..,"to":..,"asset":..,"amount":..}
///   {"event":"withdraw","u":..,"asset":..,"amount":..,"to":..}
///   {"event":"process"}
///   {"event":"fault","kind":crash|compromise|kms-down|kms-up|approve,"target":..}
/// Deposits mint the amount to the sender first, so any address may send.
/// The first failing event aborts the run with its error.
ScenarioResult run(const nlohmann::json& events, const WorldConfig& config = {});

/// One authorized withdraw-and-process under a fault schedule, with the
/// acceptance matrix defaults: n=5, t=3, q=3, one approver, deltaT=4.
struct LivenessConfig {
  std::uint64_t kmsNodes = 5;
  std::uint64_t kmsThreshold = 3;
  std::uint64_t quorum = 3;
  std::uint64_t deltaT = 4;
  std::uint64_t approvers = 1;
};

/// Bound the matrix asserts against: two relaxation steps plus slack.
inline std::uint64_t tau_max(const LivenessConfig& c) { return 2 * c.deltaT + 8; }

struct LivenessReport {
  bool ok = false;
  std::optional<ErrorKind> error;
  std::string detail;
  std::uint64_t rounds = 0;
  bool migrated = false;
  bool rotated = false;
  std::uint64_t tauMax = 0;
  std::uint64_t finalStateVersion = 0;

  nlohmann::json to_json() const;
};

LivenessReport run_liveness(const std::vector<enclave::FaultEvent>& schedule,
                            const LivenessConfig& config = {});

}  // namespace pass::scenario
