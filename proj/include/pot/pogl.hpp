#pragma once

#include <vector>

#include "pot/heap.hpp"

namespace pot {

/// Preordered global lock: the body runs only while gv = wv - 1, reading and
/// writing cells directly. Old values are logged so an explicit abort can
/// undo the body. Waiting is the caller's job (GlobalOrderGate).
class PoglTxn {
 public:
  void assign(SeqNo wv) noexcept {
    wv_ = wv;
    attempts_ = 0;
  }

  /// Starts an attempt. Caller has passed the gate.
  void begin() noexcept {
    undo_.clear();
    owns_turn_ = true;
    ++attempts_;
  }

  Word read(const VersionedHeap& h, CellIndex i) const {
    h.check_index(i);
    return h.load(i);
  }

  void write(VersionedHeap& h, CellIndex i, Word v) {
    h.check_index(i);
    undo_.push_back({i, h.load(i)});
    h.store(i, v);
  }

  void roll_back(VersionedHeap& h) noexcept {
    for (auto it = undo_.rbegin(); it != undo_.rend(); ++it) h.store(it->cell, it->value);
    undo_.clear();
  }

  /// Release fence, then gv = wv.
  void publish(VersionedHeap& h) noexcept {
    std::atomic_thread_fence(std::memory_order_release);
    h.clock().store(wv_, std::memory_order_release);
    owns_turn_ = false;
  }

  SeqNo write_version() const noexcept { return wv_; }
  bool owns_turn() const noexcept { return owns_turn_; }
  std::uint32_t attempts() const noexcept { return attempts_; }

 private:
  struct UndoRecord {
    CellIndex cell;
    Word value;
  };

  SeqNo wv_ = 0;
  bool owns_turn_ = false;
  std::uint32_t attempts_ = 0;
  std::vector<UndoRecord> undo_;
};

}  // namespace pot
