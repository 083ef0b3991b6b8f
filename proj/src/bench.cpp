#include "pass/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <functional>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "pass/chain.hpp"
#include "pass/enclave.hpp"
#include "pass/engine.hpp"
#include "pass/invariants.hpp"
#include "pass/serialize.hpp"

namespace pass::bench {

namespace {

using Clock = std::chrono::steady_clock;

const AssetId kToken = AssetId::fungible("ETH");
constexpr std::size_t kSubaccounts = 4;

/// One wallet on its own chain, with a bound depositor per subaccount.
struct Fixture {
  enclave::SimKeySource keys;
  WalletState state;
  chain::SimChain chain;
  std::vector<SubaccountId> subs;
  std::vector<ExternalAddress> depositors;
  ExternalAddress sink;
  std::optional<enclave::KeyHandle> signer;

  explicit Fixture(std::uint64_t seed) : keys("bench/" + std::to_string(seed)) {
    state = engine::create_wallet(SubaccountId("root"), keys);
    signer.emplace(state.keys);
    for (std::size_t i = 0; i < kSubaccounts; ++i) {
      subs.emplace_back("u" + std::to_string(i));
      engine::add_subaccount(state, subs.back());
      ExternalAddress::Raw raw{};
      raw[0] = 0xd0;
      raw[19] = static_cast<std::uint8_t>(i);
      depositors.emplace_back(raw);
      engine::bind_sender(state, depositors.back(), subs.back());
    }
    ExternalAddress::Raw raw{};
    raw[0] = 0xee;
    sink = ExternalAddress(raw);
  }

  /// External deposit mirrored into the inbox, then claimed by the bound
  /// subaccount.
  void deposit_and_claim(std::size_t who, Amount amount) {
    const ExternalAddress& from = depositors[who % depositors.size()];
    chain.faucet(from, kToken, amount);
    chain::InboxEvent ev = chain.external_deposit(from, state.keys.pk, kToken, amount);
    std::uint64_t id = engine::inbox_deposit(state, ev.asset, ev.amount, ev.sender);
    engine::claim_inbox(state, subs[who % subs.size()], id);
  }

  std::uint64_t deposit_only(std::size_t who, Amount amount) {
    const ExternalAddress& from = depositors[who % depositors.size()];
    chain.faucet(from, kToken, amount);
    chain::InboxEvent ev = chain.external_deposit(from, state.keys.pk, kToken, amount);
    return engine::inbox_deposit(state, ev.asset, ev.amount, ev.sender);
  }

  void fund_all(Amount each) {
    for (std::size_t i = 0; i < subs.size(); ++i) deposit_and_claim(i, each);
  }
};

/// Runs `body` once per trial and converts wall time into ops/sec.
StatsRow measure(const std::string& name, const BenchConfig& cfg,
                 const std::function<std::uint64_t(std::uint64_t trial, Clock::duration&)>& body) {
  std::vector<double> samples;
  std::uint64_t executed = 0;
  for (std::uint64_t trial = 0; trial < cfg.trials; ++trial) {
    Clock::duration elapsed{};
    const std::uint64_t ops = body(trial, elapsed);
    require(trial == 0 || ops == executed, ErrorKind::InvalidArgument,
            name + " executed an uneven number of operations across trials");
    executed = ops;
    const double secs =
        std::max(std::chrono::duration<double>(elapsed).count(), 1e-9);
    samples.push_back(static_cast<double>(ops) / secs);
  }
  return summarize(name, std::move(samples), executed);
}

template <typename F>
Clock::duration timed(F&& f) {
  const auto start = Clock::now();
  f();
  return Clock::now() - start;
}

void check_after(StatsTable& table, const std::string& category, const Fixture& fx) {
  for (auto& v : invariants::check(fx.state, fx.chain)) table.violations.push_back(category + ": " + v);
}

/// Op i of the mixed multi-threaded workload. The choice depends only on
/// (seed, i) and the state left by ops 0..i-1.
void mixed_op(Fixture& fx, std::uint64_t seed, std::uint64_t i) {
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + i);
  const std::size_t a = rng() % fx.subs.size();
  const std::size_t b = (a + 1 + rng() % (fx.subs.size() - 1)) % fx.subs.size();
  const Amount held = engine::get_balance(fx.state, fx.subs[a], kToken);
  switch (rng() % 4) {
    case 0:
      fx.deposit_and_claim(a, Amount(1 + rng() % 100));
      break;
    case 1:
      if (held.is_zero()) {
        fx.deposit_and_claim(a, Amount(1 + rng() % 100));
      } else {
        engine::internal_transfer(fx.state, fx.subs[a], fx.subs[b], kToken,
                                  Amount(1 + rng() % held.value()));
      }
      break;
    case 2:
      if (held.is_zero()) {
        fx.deposit_and_claim(a, Amount(1 + rng() % 100));
      } else {
        engine::withdraw(fx.state, fx.subs[a], kToken, Amount(1 + rng() % held.value()), fx.sink);
      }
      break;
    default:
      engine::process_outbox(fx.state, fx.chain, *fx.signer);
      break;
  }
}

/// Workers take turns by ticket: op i belongs to worker i % threads and runs
/// only once ops 0..i-1 have committed. Every op holds the writer lock.
Clock::duration run_turnstile(Fixture& fx, std::uint64_t seed, std::uint64_t ops,
                              std::uint64_t threads) {
  std::mutex mu;
  std::condition_variable cv;
  std::uint64_t next = 0;
  std::exception_ptr error;

  auto worker = [&](std::uint64_t w) {
    for (std::uint64_t i = w; i < ops; i += threads) {
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return next == i || error; });
      if (error) return;
      try {
        mixed_op(fx, seed, i);
      } catch (...) {
        error = std::current_exception();
      }
      ++next;
      cv.notify_all();
    }
  };

  const auto start = Clock::now();
  std::vector<std::thread> pool;
  for (std::uint64_t w = 0; w < threads; ++w) pool.emplace_back(worker, w);
  for (auto& t : pool) t.join();
  const auto elapsed = Clock::now() - start;
  if (error) std::rethrow_exception(error);
  return elapsed;
}

}  // namespace

void validate(const BenchConfig& c) {
  require(c.opsPerTrial > 0 && c.trials > 0 && c.batchSize > 0 && c.threads > 0,
          ErrorKind::InvalidArgument, "bench counts must all be positive");
}

StatsRow summarize(std::string operation, std::vector<double> samples, std::uint64_t opsPerTrial) {
  StatsRow row;
  row.operation = std::move(operation);
  row.opsPerTrial = opsPerTrial;
  if (!samples.empty()) {
    double sum = 0;
    for (double s : samples) sum += s;
    row.mean = sum / static_cast<double>(samples.size());
    double sq = 0;
    for (double s : samples) sq += (s - row.mean) * (s - row.mean);
    row.std = samples.size() > 1 ? std::sqrt(sq / static_cast<double>(samples.size() - 1)) : 0.0;
    auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
    row.min = *lo;
    row.max = *hi;
  }
  row.samples = std::move(samples);
  return row;
}

std::string StatsTable::to_csv() const {
  std::ostringstream out;
  out << "operation,mean,std,min,max\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.2f,%.2f,%.2f,%.2f\n", r.operation.c_str(), r.mean, r.std,
                  r.min, r.max);
    out << buf;
  }
  return out.str();
}

std::string StatsTable::to_text() const {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-22s %14s %14s %14s %14s\n", "operation", "mean ops/s",
                "std", "min", "max");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-22s %14.1f %14.1f %14.1f %14.1f\n", r.operation.c_str(),
                  r.mean, r.std, r.min, r.max);
    out << buf;
  }
  out << (violations.empty() ? "invariants: ok\n" : "invariants: VIOLATED\n");
  for (const auto& v : violations) out << "  " << v << "\n";
  return out.str();
}

Hash32 multi_threaded_digest(std::uint64_t seed, std::uint64_t ops, std::uint64_t threads) {
  Fixture fx(seed);
  run_turnstile(fx, seed, ops, threads);
  return sha256(canonical::canonical_string(fx.state));
}

StatsTable run_bench(const BenchConfig& cfg) {
  validate(cfg);
  StatsTable table;
  const std::uint64_t n = cfg.opsPerTrial;

  {
    std::optional<Fixture> last;
    table.rows.push_back(measure("wallet_creation", cfg, [&](std::uint64_t trial, auto& el) {
      enclave::SimKeySource keys("bench-create/" + std::to_string(cfg.seed + trial));
      std::vector<WalletState> made;
      made.reserve(n);
      el = timed([&] {
        for (std::uint64_t i = 0; i < n; ++i) {
          made.push_back(engine::create_wallet(SubaccountId("root"), keys));
        }
      });
      last.emplace(cfg.seed + trial);
      last->state = made.back();
      return n;
    }));
    check_after(table, "wallet_creation", *last);
  }

  {
    Fixture fx(cfg.seed);
    fx.fund_all(Amount(1000));
    std::uint64_t sink = 0;
    table.rows.push_back(measure("balance_query", cfg, [&](std::uint64_t, auto& el) {
      el = timed([&] {
        for (std::uint64_t i = 0; i < n; ++i) {
          sink += engine::get_balance(fx.state, fx.subs[i % fx.subs.size()], kToken).value();
        }
      });
      return n;
    }));
    require(sink > 0, ErrorKind::InvalidArgument, "balance queries returned nothing");
    check_after(table, "balance_query", fx);
  }

  {
    Fixture fx(cfg.seed);
    table.rows.push_back(measure("inbox_claim", cfg, [&](std::uint64_t, auto& el) {
      std::vector<std::uint64_t> ids;
      for (std::uint64_t i = 0; i < n; ++i) ids.push_back(fx.deposit_only(i, Amount(10)));
      el = timed([&] {
        for (std::uint64_t i = 0; i < n; ++i) {
          engine::claim_inbox(fx.state, fx.subs[i % fx.subs.size()], ids[i]);
        }
      });
      return n;
    }));
    check_after(table, "inbox_claim", fx);
  }

  {
    Fixture fx(cfg.seed);
    fx.fund_all(Amount(1'000'000));
    table.rows.push_back(measure("internal_transfer", cfg, [&](std::uint64_t, auto& el) {
      el = timed([&] {
        for (std::uint64_t i = 0; i < n; ++i) {
          const std::size_t a = i % fx.subs.size();
          engine::internal_transfer(fx.state, fx.subs[a], fx.subs[(a + 1) % fx.subs.size()],
                                    kToken, Amount(1));
        }
      });
      return n;
    }));
    check_after(table, "internal_transfer", fx);
  }

  {
    Fixture fx(cfg.seed);
    fx.fund_all(Amount(1'000'000));
    table.rows.push_back(measure("withdrawal_request", cfg, [&](std::uint64_t, auto& el) {
      el = timed([&] {
        for (std::uint64_t i = 0; i < n; ++i) {
          engine::withdraw(fx.state, fx.subs[i % fx.subs.size()], kToken, Amount(1), fx.sink);
        }
      });
      return n;
    }));
    check_after(table, "withdrawal_request", fx);
  }

  {
    Fixture fx(cfg.seed);
    for (std::uint64_t i = 0; i < n; ++i) fx.deposit_and_claim(i, Amount(5));
    std::size_t seen = 0;
    table.rows.push_back(measure("history_query", cfg, [&](std::uint64_t, auto& el) {
      el = timed([&] {
        for (std::uint64_t i = 0; i < n; ++i) {
          seen += engine::history(fx.state, fx.subs[i % fx.subs.size()]).size();
        }
      });
      return n;
    }));
    require(seen > 0, ErrorKind::InvalidArgument, "history queries returned nothing");
    check_after(table, "history_query", fx);
  }

  {
    Fixture fx(cfg.seed);
    table.rows.push_back(measure("end_to_end", cfg, [&](std::uint64_t, auto& el) {
      el = timed([&] {
        for (std::uint64_t i = 0; i < n; ++i) {
          const std::size_t a = i % fx.subs.size();
          const SubaccountId& next = fx.subs[(a + 1) % fx.subs.size()];
          fx.deposit_and_claim(a, Amount(10));
          engine::internal_transfer(fx.state, fx.subs[a], next, kToken, Amount(4));
          engine::withdraw(fx.state, next, kToken, Amount(3), fx.sink);
          engine::process_outbox(fx.state, fx.chain, *fx.signer);
        }
      });
      return n;
    }));
    check_after(table, "end_to_end", fx);
  }

  {
    std::optional<Fixture> fx;
    table.rows.push_back(measure("batch_deposit_claim", cfg, [&](std::uint64_t trial, auto& el) {
      fx.emplace(cfg.seed + trial);
      std::uint64_t pairs = 0;
      el = timed([&] {
        for (std::uint64_t i = 0; i < cfg.batchSize; ++i) {
          fx->deposit_and_claim(i, Amount(1 + i % 7));
          ++pairs;
        }
      });
      return pairs;
    }));
    check_after(table, "batch_deposit_claim", *fx);
  }

  {
    std::optional<Fixture> fx;
    table.rows.push_back(measure("multi_threaded", cfg, [&](std::uint64_t, auto& el) {
      fx.emplace(cfg.seed);
      el = run_turnstile(*fx, cfg.seed, n, cfg.threads);
      return n;
    }));
    check_after(table, "multi_threaded", *fx);
    table.multiThreadedDigest = sha256(canonical::canonical_string(fx->state));
  }
  return table;
}

}  // namespace pass::bench
