#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pot/heap.hpp"
#include "pot/write_set.hpp"

namespace pot {

class Jitter;
class Sequencer;

/// When a speculative transaction may switch to fast mode.
enum class Promotion {
  never,     // ordered commits only
  at_start,  // checked when an attempt begins
  live,      // checked at begin, before every read and before every write
};

/// Counts transactions currently in fast mode and remembers the peak.
class FastModeMonitor {
 public:
  void enter() noexcept {
    const std::uint32_t now = current_.fetch_add(1, std::memory_order_acq_rel) + 1;
    std::uint32_t seen = peak_.load(std::memory_order_relaxed);
    while (now > seen && !peak_.compare_exchange_weak(seen, now, std::memory_order_relaxed)) {
    }
  }
  void leave() noexcept { current_.fetch_sub(1, std::memory_order_acq_rel); }
  std::uint32_t current() const noexcept { return current_.load(std::memory_order_acquire); }
  std::uint32_t peak() const noexcept { return peak_.load(std::memory_order_acquire); }

 private:
  std::atomic<std::uint32_t> current_{0};
  std::atomic<std::uint32_t> peak_{0};
};

/// Raised inside a blocked gate once the run has been cancelled.
class RunCancelled : public std::runtime_error {
 public:
  RunCancelled() : std::runtime_error("run cancelled") {}
};

struct GateConfig {
  std::uint32_t spin_budget = 1000;
  /// Test-only mutation: the gate never waits. Breaks ordered commits.
  bool disabled = false;
};

/// Optional collaborators of a blocking gate wait.
struct WaitContext {
  const std::atomic<bool>* cancel = nullptr;
  Sequencer* progress = nullptr;  // consulted for hang reports while yielding
  Jitter* jitter = nullptr;       // perturbs timing before waiting
};

/// Commit gate: a transaction with write version wv passes iff gv = wv - 1.
class GlobalOrderGate {
 public:
  explicit GlobalOrderGate(const std::atomic<std::uint64_t>& gv, GateConfig cfg = {})
      : gv_(gv), cfg_(cfg) {}

  bool open_for(SeqNo wv) const noexcept {
    return gv_.load(std::memory_order_acquire) == wv - 1;
  }

  /// Blocks until the gate opens for `wv`. Returns elapsed cycles.
  /// Throws RunCancelled or HangReport (from `ctx.progress`).
  std::uint64_t wait(SeqNo wv, const WaitContext& ctx = {}) const;

  const GateConfig& config() const noexcept { return cfg_; }

 private:
  const std::atomic<std::uint64_t>& gv_;
  GateConfig cfg_;
};

/// Preordered transaction descriptor. The sequence number `wv` is fixed for
/// every attempt of one transaction; `rv` is resampled per attempt.
///
/// Speculative mode defers writes into W and validates R against rv. Fast mode
/// is entered only while gv = wv - 1; it writes in place (version stamp,
/// release fence, value) and keeps an undo log for explicit aborts.
class PotTxn {
 public:
  enum class Mode { speculative, fast };
  enum class PromoteResult { promoted, unchanged, aborted };
  enum class Status { idle, live, committed, aborted };

  struct UndoRecord {
    CellIndex cell;
    Version version;
    Word value;
  };

  explicit PotTxn(Promotion promotion = Promotion::live, FastModeMonitor* monitor = nullptr)
      : promotion_(promotion), monitor_(monitor) {}

  /// Binds the descriptor to a new transaction.
  void assign(SeqNo wv) noexcept {
    wv_ = wv;
    attempts_ = 0;
    promotions_ = 0;
    status_ = Status::idle;
  }

  /// Starts an attempt: samples rv and, unless promotion is disabled, enters
  /// fast mode at once if the gate is open.
  void begin(const VersionedHeap& h) {
    leave_fast();
    rv_ = h.clock().load(std::memory_order_relaxed);
    std::atomic_thread_fence(std::memory_order_acquire);
    reads_.clear();
    writes_.clear();
    undo_.clear();
    ++attempts_;
    status_ = Status::live;
    // R and W are empty, so promotion needs no validation or write-back.
    if (promotion_ != Promotion::never && rv_ == wv_ - 1) enter_fast();
  }

  /// nullopt means the attempt must abort (speculative only).
  std::optional<Word> read(VersionedHeap& h, CellIndex i) {
    if (mode_ == Mode::fast) {
      h.check_index(i);
      return h.load(i);
    }
    return read_slow(h, i);
  }
  /// false means a live promotion failed validation and the attempt must abort.
  bool write(VersionedHeap& h, CellIndex i, Word v) {
    if (mode_ == Mode::fast) {
      write_in_place(h, i, v);
      return true;
    }
    return write_slow(h, i, v);
  }

  PromoteResult try_promote(VersionedHeap& h);

  /// R check: every read slot still has version <= rv.
  bool validate(const VersionedHeap& h) const;

  /// Caller holds the turn. Speculative: validate, then write back W. Fast:
  /// nothing to do. false: validation failed and the attempt was discarded.
  bool finish_at_gate(VersionedHeap& h);

  /// Release fence, then gv = wv. Caller holds the turn.
  void publish(VersionedHeap& h) noexcept {
    leave_fast();
    std::atomic_thread_fence(std::memory_order_release);
    h.clock().store(wv_, std::memory_order_release);
    status_ = Status::committed;
  }

  /// Fast mode: restores overwritten values in reverse order and drops back to
  /// speculative mode. Touched slots keep version wv.
  void roll_back(VersionedHeap& h);

  /// Drops the current attempt. A fast attempt must be rolled back first.
  void discard();

  Mode mode() const noexcept { return mode_; }
  Status status() const noexcept { return status_; }
  bool fast() const noexcept { return mode_ == Mode::fast; }
  SeqNo write_version() const noexcept { return wv_; }
  Version read_version() const noexcept { return rv_; }
  std::uint32_t attempts() const noexcept { return attempts_; }
  std::uint32_t promotions() const noexcept { return promotions_; }
  Promotion promotion() const noexcept { return promotion_; }
  const std::vector<CellIndex>& read_set() const noexcept { return reads_; }
  const WriteSet& write_set() const noexcept { return writes_; }
  const std::vector<UndoRecord>& undo_log() const noexcept { return undo_; }

 private:
  std::optional<Word> read_slow(VersionedHeap& h, CellIndex i);
  bool write_slow(VersionedHeap& h, CellIndex i, Word v);

  void enter_fast() noexcept {
    mode_ = Mode::fast;
    if (monitor_ != nullptr) monitor_->enter();
  }
  void leave_fast() noexcept {
    if (mode_ != Mode::fast) return;
    mode_ = Mode::speculative;
    if (monitor_ != nullptr) monitor_->leave();
  }
  void write_in_place(VersionedHeap& h, CellIndex i, Word v) {
    h.check_index(i);
    undo_.push_back({i, h.version_of(i), h.load(i)});
    h.write_versioned(i, v, wv_);
  }

  Promotion promotion_;
  FastModeMonitor* monitor_;
  Mode mode_ = Mode::speculative;
  Status status_ = Status::idle;
  SeqNo wv_ = 0;
  Version rv_ = 0;
  std::uint32_t attempts_ = 0;
  std::uint32_t promotions_ = 0;
  std::vector<CellIndex> reads_;
  WriteSet writes_;
  std::vector<UndoRecord> undo_;
};

}  // namespace pot
