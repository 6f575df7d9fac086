#pragma once

#include <optional>
#include <vector>

#include "pot/heap.hpp"
#include "pot/write_set.hpp"

namespace pot {

/// TL2-style optimistic transaction: deferred updates, versioned locks taken
/// at commit, gv advanced by 2 per writer. The nondeterministic baseline.
///
/// The descriptor holds no reference to the heap, so it can be copied to
/// branch an interleaving explorer.
class Tl2Txn {
 public:
  enum class Status { idle, live, committed, aborted };

  explicit Tl2Txn(std::uint64_t owner_id = 1) : owner_(owner_id) {}

  void begin(const VersionedHeap& h) {
    rv_ = h.clock().load(std::memory_order_relaxed);
    std::atomic_thread_fence(std::memory_order_acquire);
    wv_ = 0;
    reads_.clear();
    writes_.clear();
    held_.clear();
    status_ = Status::live;
  }

  /// nullopt means the transaction must abort.
  std::optional<Word> read(const VersionedHeap& h, CellIndex i) {
    if (const Word* buffered = writes_.find(i)) return *buffered;
    const ReadObservation obs = h.read_versioned(i);
    if (!VersionedHeap::is_locked(obs.v1) && obs.v1 <= rv_ && obs.v1 == obs.v2) {
      reads_.push_back(i);
      return obs.value;
    }
    status_ = Status::aborted;
    return std::nullopt;
  }
  void write(CellIndex i, Word v) { writes_.put(i, v); }

  /// Runs the commit phases below in order. Returns the write version, or
  /// `rv` for a read-only transaction (which commits without touching gv).
  /// nullopt: aborted, all locks restored.
  std::optional<Version> commit(VersionedHeap& h);

  // Commit phases, exposed for scripted interleavings. On a failed phase the
  // caller must call abort().
  bool lock_write_set(VersionedHeap& h);
  Version acquire_write_version(VersionedHeap& h);
  bool validate_read_set(const VersionedHeap& h) const;
  void write_back(VersionedHeap& h);

  /// Restores held locks to their prior versions and discards the attempt.
  void abort(VersionedHeap& h);

  Status status() const noexcept { return status_; }
  Version read_version() const noexcept { return rv_; }
  Version write_version() const noexcept { return wv_; }
  bool read_only() const noexcept { return writes_.empty(); }
  const std::vector<CellIndex>& read_set() const noexcept { return reads_; }
  const WriteSet& write_set() const noexcept { return writes_; }
  std::size_t locks_held() const noexcept { return held_.size(); }

  /// Position in the serialization order: wv for writers, rv + 1 for
  /// read-only transactions (after every writer they observed, before any
  /// writer they did not).
  std::uint64_t serialization_key() const noexcept {
    return writes_.empty() ? rv_ + 1 : wv_;
  }

 private:
  struct HeldLock {
    std::size_t stripe;
    CellIndex cell;
    Version prior;
  };

  const HeldLock* held_stripe(std::size_t stripe) const noexcept;

  std::uint64_t owner_;
  Status status_ = Status::idle;
  Version rv_ = 0;
  Version wv_ = 0;
  std::vector<CellIndex> reads_;
  WriteSet writes_;
  std::vector<HeldLock> held_;
};

}  // namespace pot
