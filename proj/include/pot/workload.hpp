#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pot/runtime.hpp"

namespace pot {

enum class WorkloadKind {
  kv,      // counter array: reads, increments, and blind puts
  bank,    // transfers between accounts plus full-table audits
  mixgen,  // order-sensitive updates over a hot pool sized by conflict_knob
};

std::string_view to_string(WorkloadKind k) noexcept;
std::optional<WorkloadKind> parse_workload(std::string_view name) noexcept;

/// Workload thread `thread` (1-based) spawns a child running `child_txns`
/// transactions from its transaction `txn` (1-based).
struct SpawnSite {
  std::uint32_t thread;
  std::uint32_t txn;
  std::uint32_t child_txns;
};

/// Transaction `txn` of workload thread `thread` aborts explicitly after doing
/// its work. Retry sites abort only on their first attempt.
struct AbortSite {
  std::uint32_t thread;
  std::uint32_t txn;
  AbortPolicy policy = AbortPolicy::no_retry;
};

/// Workload thread `thread` exits after `after_txns` transactions.
struct ExitSite {
  std::uint32_t thread;
  std::uint32_t after_txns;
};

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::kv;
  std::uint32_t n_threads = 4;
  std::uint32_t txns_per_thread = 100;
  std::size_t n_cells = 64;
  std::uint32_t accesses_per_txn = 4;
  double read_fraction = 0.5;
  std::uint32_t conflict_knob = 8;
  std::uint64_t seed = 1;
  std::vector<SpawnSite> spawns;
  std::vector<AbortSite> aborts;
  std::vector<ExitSite> exits;
};

/// Instrumentation shared by the programs of one run.
struct WorkloadProbe {
  std::atomic<std::uint64_t> audits{0};
  /// Audits (in any attempt, committed or not) that saw a wrong bank total.
  std::atomic<std::uint64_t> snapshot_violations{0};
};

constexpr Word kBankInitialBalance = 1000;

/// Fresh programs for one run. `probe` may be null.
ProgramSet make_programs(const WorkloadSpec& spec, std::shared_ptr<WorkloadProbe> probe = nullptr);

/// Sum the bank workload must conserve.
Word bank_total(const WorkloadSpec& spec) noexcept;

/// Hash used for per-thread and per-transaction seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) noexcept;

/// Program that runs a fixed list of labelled transactions. Each one folds a
/// hash of its label into `cell`, so the final value depends on the order.
/// A step may spawn a copy of a prototype child program.
class ScriptedProgram : public ThreadProgram {
 public:
  struct Step {
    std::string label;
    std::shared_ptr<const ScriptedProgram> child;
  };

  explicit ScriptedProgram(std::vector<Step> steps, CellIndex cell = 0)
      : steps_(std::move(steps)), cell_(cell) {}

  static std::unique_ptr<ScriptedProgram> of(std::initializer_list<std::string> labels,
                                             CellIndex cell = 0);

  std::optional<std::string> next_label() override;
  void body(Transaction& tx) override;
  void on_commit() override { ++next_; }

 private:
  std::vector<Step> steps_;
  CellIndex cell_;
  std::size_t next_ = 0;
};

}  // namespace pot
