#pragma once

// Snapshot files for wallet state. Saves are byte-deterministic and atomic
// (write a temp file, then rename). Loads re-verify the history digest, the
// state checksum and replay_ledger(H) == L before returning.

#include <cstdint>
#include <filesystem>
#include <string>

#include "pass/state.hpp"

namespace pass::persistence {

inline constexpr std::uint64_t kFormatVersion = 1;
inline constexpr const char* kSnapshotExtension = ".pass.json";

struct Snapshot {
  std::uint64_t formatVersion = kFormatVersion;
  std::uint64_t stateVersion = 0;
  WalletState state;  // sk always absent
  Hash32 digestOfH{};
  Hash32 stateDigest{};  // SHA-256 of the canonical state serialization
};

Snapshot make_snapshot(const WalletState& state);

/// Canonical file contents for a state. Equal public state gives equal bytes.
std::string encode(const WalletState& state);

/// Parses and verifies file contents. Throws SnapshotCorrupt on any format,
/// digest or replay mismatch and RollbackDetected when the stored
/// stateVersion is below `minVersion`.
Snapshot decode(const std::string& text, std::uint64_t minVersion = 0);

void save(const WalletState& state, const std::filesystem::path& path);
WalletState load(const std::filesystem::path& path, std::uint64_t minVersion = 0);

/// Writes `contents` to a sibling temp file, flushes it and renames it over
/// `path`. Readers see either the old file or the new one.
void atomic_write(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace pass::persistence
