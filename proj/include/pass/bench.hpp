#pragma once

// Throughput harness. Nine categories, each run for `trials` trials of
// `opsPerTrial` operations (the batch category runs `batchSize`
// deposit+claim pairs per trial). The operation sequence depends only on
// the seed; timings of course vary.

#include <cstdint>
#include <string>
#include <vector>

#include "pass/types.hpp"

namespace pass::bench {

struct BenchConfig {
  std::uint64_t opsPerTrial = 100;
  std::uint64_t trials = 10;
  std::uint64_t batchSize = 10000;
  std::uint64_t threads = 5;
  std::uint64_t seed = 42;
};

/// Throws InvalidArgument unless every count is positive.
void validate(const BenchConfig& config);

struct StatsRow {
  std::string operation;
  std::vector<double> samples;  // ops/sec per trial
  std::uint64_t opsPerTrial = 0;  // operations actually executed in each trial
  double mean = 0;
  double std = 0;  // sample standard deviation
  double min = 0;
  double max = 0;
};

/// Mean, sample standard deviation, min and max of `samples`.
StatsRow summarize(std::string operation, std::vector<double> samples, std::uint64_t opsPerTrial);

struct StatsTable {
  std::vector<StatsRow> rows;
  /// Invariant violations found after any category, prefixed by category.
  std::vector<std::string> violations;
  /// Digest of the final multi-threaded state, for linearizability checks.
  Hash32 multiThreadedDigest{};

  bool invariants_ok() const { return violations.empty(); }
  /// Columns operation,mean,std,min,max.
  std::string to_csv() const;
  std::string to_text() const;
};

StatsTable run_bench(const BenchConfig& config);

/// Runs `ops` mixed operations on one wallet from `threads` workers that
/// take turns in a fixed global order, and returns the digest of the final
/// canonical state. The result is independent of `threads`.
Hash32 multi_threaded_digest(std::uint64_t seed, std::uint64_t ops, std::uint64_t threads);


}  // namespace pass::bench
