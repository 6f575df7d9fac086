#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pot/oracle.hpp"
#include "pot/runtime.hpp"
#include "pot/workload.hpp"

namespace pot {

/// Ordered `key=value` report, one key per line.
class BenchReport {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }
  void set(const std::string& key, double value);
  void set_bool(const std::string& key, bool value) { set(key, value ? "pass" : "fail"); }

  /// Adds `prefix.commits`, `prefix.aborts.validation`, ... for `s`.
  void add_stats(const std::string& prefix, const RunStats& s);

  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept {
    return entries_;
  }
  std::optional<std::string> get(const std::string& key) const;
  void write(std::ostream& out) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

struct RunRequest {
  WorkloadSpec workload;
  RunConfig config;
};

struct RunOutcome {
  RunResult result;
  std::uint64_t audits = 0;
  std::uint64_t snapshot_violations = 0;
  bool conservation_ok = true;  // bank only; always true otherwise
};

/// One run of `req.workload` under `req.config`.
RunOutcome run_workload(const RunRequest& req);

/// Oracle result for the workload.
OracleResult oracle_for(const WorkloadSpec& spec);

struct DeterminismResult {
  bool pass = false;
  std::uint64_t oracle_digest = 0;
  std::vector<std::uint64_t> digests;
  /// First serialization position (1-based, application transactions only)
  /// whose label differs from the oracle; 0 when the labels agree.
  std::uint64_t first_divergence = 0;
  bool ordered_commits = true;
  bool timed_out = false;
  std::uint32_t max_concurrent_fast = 0;
  std::string detail;
};

/// Runs `system` `runs` times with jitter seeds jitter_base, jitter_base+1, ...
/// and once serially; passes iff every digest and label sequence matches the
/// oracle and every run committed in order. `base` supplies the remaining
/// run settings (gate, watchdog, stripes).
DeterminismResult check_determinism(const WorkloadSpec& spec, System system, std::uint32_t runs,
                                    std::uint64_t jitter_base, const RunConfig& base = {});

struct MicrobenchRow {
  std::uint32_t accesses = 0;
  double read_fraction = 0;
  double tl2_ns_per_txn = 0;
  double pot_ns_per_txn = 0;
  double ratio = 0;  // tl2 time / pot time
};

struct MicrobenchConfig {
  /// runtime: transactions go through run_programs and the Transaction
  /// interface, as an application would issue them. protocol: bare
  /// descriptor calls in a tight loop.
  enum class Level { runtime, protocol };
  Level level = Level::runtime;
  std::size_t n_cells = 1024;
  std::uint32_t txns = 20000;
  std::uint32_t repetitions = 5;  // median, after one discarded warmup
};

/// Single-threaded: times fast-mode Pot transactions against TL2 transactions
/// running the same accesses over an array of counters.
MicrobenchRow microbench(std::uint32_t accesses, double read_fraction,
                         const MicrobenchConfig& cfg = {});

/// TL2 run whose serialization order is written as a replay order.
struct Recording {
  ReplayOrder order;
  std::uint64_t digest = 0;
  RunResult result;
};

Recording record_run(const WorkloadSpec& spec, std::optional<std::uint64_t> jitter_seed);

/// Pot run following `order`. Throws HangReport on divergence.
RunResult replay_run(const WorkloadSpec& spec, const ReplayOrder& order,
                     std::optional<std::uint64_t> jitter_seed);

}  // namespace pot
