#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pass {

enum class ErrorKind {
  // wallet-engine transitions
  InsufficientBalance,
  NotAllowed,
  UnknownEntry,
  AlreadyClaimed,
  AmountMismatch,
  UnknownSubaccount,
  UnitaryViolation,
  SelfTransfer,
  ZeroAmount,
  // provenance
  MalformedLog,
  NoProvenance,
  // chain simulator
  NonceMismatch,
  BadSignature,
  InsufficientOnChainBalance,
  NftAlreadyHeld,
  // enclave / kms
  KeyUnavailable,
  NotAttested,
  SealedStateCorrupt,
  RollbackDetected,
  QuorumUnreachable,
  // persistence
  SnapshotCorrupt,
  // values / formats
  Overflow,
  InvalidArgument,
  ParseError,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Every failure surfaced by the library. `kind()` is stable and machine
/// readable; `what()` carries a human detail string.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(detail), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& detail) {
  throw Error(kind, detail);
}

inline void require(bool cond, ErrorKind kind, const std::string& detail) {
  if (!cond) fail(kind, detail);
}

}  // namespace pass
