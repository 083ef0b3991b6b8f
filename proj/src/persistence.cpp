#include "pass/persistence.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pass/crypto.hpp"
#include "pass/serialize.hpp"

namespace pass::persistence {

using canonical::Json;

namespace {

Hash32 state_digest(const WalletState& state) { return sha256(canonical::canonical_string(state)); }

[[noreturn]] void io_fail(const std::string& what, const std::filesystem::path& path) {
  fail(ErrorKind::Io, what + " " + path.string() + ": " + std::strerror(errno));
}

}  // namespace

Snapshot make_snapshot(const WalletState& state) {
  Snapshot s;
  s.stateVersion = state.stateVersion;
  s.state = state;
  s.state.keys.sk = SecretKey{};
  s.digestOfH = provenance::digest(state.history);
  s.stateDigest = state_digest(s.state);
  return s;
}

std::string encode(const WalletState& state) {
  const Snapshot s = make_snapshot(state);
  Json j{{"formatVersion", canonical::uint_to_json(s.formatVersion)},
         {"stateVersion", canonical::uint_to_json(s.stateVersion)},
         {"state", canonical::state_to_json(s.state)},
         {"digestOfH", to_hex(s.digestOfH)},
         {"stateDigest", to_hex(s.stateDigest)}};
  return canonical::dump(j) + "\n";
}

Snapshot decode(const std::string& text, std::uint64_t minVersion) {
  Snapshot s;
  try {
    Json j = canonical::parse(text);
    s.formatVersion = canonical::uint_from_json(j.at("formatVersion"));
    require(s.formatVersion == kFormatVersion, ErrorKind::SnapshotCorrupt,
            "unsupported snapshot format " + std::to_string(s.formatVersion));
    s.stateVersion = canonical::uint_from_json(j.at("stateVersion"));
    s.digestOfH = fixed_from_hex<32>(j.at("digestOfH").get<std::string>());
    s.stateDigest = fixed_from_hex<32>(j.at("stateDigest").get<std::string>());
    s.state = canonical::state_from_json(j.at("state"));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::SnapshotCorrupt) throw;
    fail(ErrorKind::SnapshotCorrupt, std::string("unreadable snapshot: ") + e.what());
  } catch (const std::exception& e) {
    fail(ErrorKind::SnapshotCorrupt, std::string("unreadable snapshot: ") + e.what());
  }

  require(provenance::digest(s.state.history) == s.digestOfH, ErrorKind::SnapshotCorrupt,
          "history digest mismatch");
  require(state_digest(s.state) == s.stateDigest, ErrorKind::SnapshotCorrupt,
          "state digest mismatch");
  require(s.state.stateVersion == s.stateVersion, ErrorKind::SnapshotCorrupt,
          "stateVersion header disagrees with state");
  require(provenance::replay_ledger(s.state.history) == s.state.ledger, ErrorKind::SnapshotCorrupt,
          "ledger does not match replay of history");
  require(s.stateVersion >= minVersion, ErrorKind::RollbackDetected,
          "snapshot version " + std::to_string(s.stateVersion) + " is older than " +
              std::to_string(minVersion));
  return s;
}

void save(const WalletState& state, const std::filesystem::path& path) {
  atomic_write(path, encode(state));
}

WalletState load(const std::filesystem::path& path, std::uint64_t minVersion) {
  return decode(read_file(path), minVersion).state;
}

void atomic_write(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) io_fail("cannot create", tmp);
  std::size_t off = 0;
  while (off < contents.size()) {
    ssize_t n = ::write(fd, contents.data() + off, contents.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      io_fail("cannot write", tmp);
    }
    off += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    io_fail("cannot sync", tmp);
  }
  ::close(fd);
  if (std::rename(tmp.c_str(), path.c_str()) != 0) io_fail("cannot rename onto", path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail("cannot open", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace pass::persistence
