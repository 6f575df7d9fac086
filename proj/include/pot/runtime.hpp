#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pot/heap.hpp"
#include "pot/pot.hpp"
#include "pot/sequencer.hpp"
#include "pot/transaction.hpp"

namespace pot {

enum class System { tl2, pot, pot_minus, pot_star, pogl };

std::string_view to_string(System s) noexcept;
std::optional<System> parse_system(std::string_view name) noexcept;
/// Systems that commit in sequencer order.
constexpr bool is_ordered(System s) noexcept { return s != System::tl2; }
Promotion promotion_of(System s) noexcept;

enum class CommitMode { speculative, fast, tl2, pogl, internal_stop };

std::string_view to_string(CommitMode m) noexcept;

struct CommitRecord {
  SeqNo sn = 0;  // TL2: serialization key (wv, or rv + 1 when nothing was written)
  ThreadId thread;
  std::string label;
  CommitMode mode = CommitMode::speculative;
  std::uint32_t attempts = 0;
  std::uint64_t wait_cycles = 0;
};

/// `sn<TAB>thread<TAB>label<TAB>mode<TAB>attempts<TAB>wait_cycles` per line.
void write_commit_log(std::ostream& out, const std::vector<CommitRecord>& log);

struct RunStats {
  std::uint64_t commits = 0;  // application transactions, stop events excluded
  std::uint64_t validation_aborts = 0;
  std::uint64_t gate_aborts = 0;
  std::uint64_t explicit_aborts = 0;
  std::uint64_t promotions = 0;
  std::uint64_t wait_cycles_total = 0;
  std::uint64_t wait_cycles_max = 0;
  std::uint32_t max_concurrent_fast = 0;
  double wall_seconds = 0;

  double mean_wait_cycles() const noexcept {
    return commits == 0 ? 0.0 : static_cast<double>(wait_cycles_total) / commits;
  }
  RunStats& operator+=(const RunStats& o) noexcept;
};

/// Initial heap contents plus one program per initial worker thread.
struct ProgramSet {
  std::size_t n_cells = 0;
  std::vector<Word> initial_cells;  // empty or n_cells long
  std::vector<std::unique_ptr<ThreadProgram>> threads;
};

struct RunConfig {
  System system = System::pot;
  StripeConfig stripes = StripeConfig::one_to_one();
  GateConfig gate;
  /// Enables schedule perturbation; each worker derives its own stream.
  std::optional<std::uint64_t> jitter_seed;
  /// Replaces round-robin sequencing (ordered systems only).
  std::optional<ReplayOrder> replay;
  /// Round-robin hang diagnostic; replay uses the order's own timeout.
  std::optional<std::chrono::milliseconds> hang_timeout;
  std::chrono::milliseconds watchdog{30000};
  bool keep_log = true;
  /// Counts concurrent fast-mode transactions (two atomic RMWs per commit).
  bool track_fast_mode = true;
};

struct RunResult {
  std::vector<Word> cells;
  /// Sorted by sn (TL2: serialization key); includes stop events.
  std::vector<CommitRecord> log;
  /// Sequence numbers in the order commits physically happened.
  std::vector<SeqNo> physical_sns;
  /// Application labels in serialization order. For ordered systems this is
  /// the physical commit order, which equals sn order when the gate works.
  std::vector<std::string> labels;
  std::uint64_t digest = 0;
  RunStats stats;
  bool timed_out = false;
};

/// Runs the programs to completion under `cfg.system`, one OS thread per
/// workload thread. Throws HangReport when replay diverges, and rethrows the
/// first exception escaping a worker.
RunResult run_programs(ProgramSet programs, const RunConfig& cfg);

/// True iff `sns` is exactly 1, 2, ..., K.
bool consecutive_from_one(const std::vector<SeqNo>& sns) noexcept;

/// Replay order that reproduces a run's serialization (stop events excluded).
ReplayOrder replay_order_from(const std::vector<CommitRecord>& log);

}  // namespace pot
