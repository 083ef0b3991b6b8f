#pragma once

// Command-line front end. A wallet lives in one snapshot file plus sidecars
// next to it: <wallet>.chain.json (simulated chain), <wallet>.sealed.json
// (enclave-sealed key container and KMS parameters), <wallet>.version
// (anti-rollback counter) and <wallet>.lock (advisory lock).

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace pass::cli {

struct CliConfig {
  std::filesystem::path walletPath = "wallet.pass.json";
  std::optional<std::filesystem::path> policyPath;
  std::string seed = "pass";
  int verbosity = 0;
  bool json = false;
};

/// Exit 0 on success, 1 on a wallet or runtime error and 2 on a usage
/// error. Failures print {"kind":..,"detail":..} on `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pass::cli
