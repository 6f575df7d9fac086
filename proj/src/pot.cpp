#include "pot/pot.hpp"

#include <thread>

#include "pot/cycles.hpp"
#include "pot/jitter.hpp"
#include "pot/sequencer.hpp"

namespace pot {

std::uint64_t GlobalOrderGate::wait(SeqNo wv, const WaitContext& ctx) const {
  if (ctx.jitter != nullptr) ctx.jitter->perturb();
  if (cfg_.disabled || open_for(wv)) return 0;
  const std::uint64_t t0 = cycle_now();
  for (std::uint32_t i = 0; i < cfg_.spin_budget; ++i) {
    cpu_relax();
    if (open_for(wv)) return cycle_now() - t0;
  }
  for (std::uint64_t yields = 0; !open_for(wv); ++yields) {
    if (ctx.cancel != nullptr && ctx.cancel->load(std::memory_order_relaxed)) {
      throw RunCancelled();
    }
    if (ctx.progress != nullptr && yields % 256 == 0) {
      if (auto report = ctx.progress->check_progress(gv_.load(std::memory_order_acquire))) {
        throw *report;
      }
    }
    std::this_thread::yield();
  }
  return cycle_now() - t0;
}

bool PotTxn::validate(const VersionedHeap& h) const {
  std::atomic_thread_fence(std::memory_order_acquire);
  for (CellIndex cell : reads_) {
    if (h.version_of(cell) > rv_) return false;
  }
  return true;
}

PotTxn::PromoteResult PotTxn::try_promote(VersionedHeap& h) {
  if (mode_ == Mode::fast) return PromoteResult::unchanged;
  if (h.clock().load(std::memory_order_acquire) != wv_ - 1) return PromoteResult::unchanged;
  if (!validate(h)) {
    discard();
    return PromoteResult::aborted;
  }
  for (const auto& [cell, value] : writes_) write_in_place(h, cell, value);
  reads_.clear();
  writes_.clear();
  enter_fast();
  ++promotions_;
  return PromoteResult::promoted;
}

std::optional<Word> PotTxn::read_slow(VersionedHeap& h, CellIndex i) {
  if (mode_ == Mode::speculative && promotion_ == Promotion::live) {
    if (try_promote(h) == PromoteResult::aborted) return std::nullopt;
  }
  if (mode_ == Mode::fast) {
    h.check_index(i);
    return h.load(i);
  }
  if (const Word* buffered = writes_.find(i)) return *buffered;
  const ReadObservation obs = h.read_versioned(i);
  if (obs.v1 <= rv_ && obs.v1 == obs.v2) {
    reads_.push_back(i);
    return obs.value;
  }
  discard();
  return std::nullopt;
}

bool PotTxn::write_slow(VersionedHeap& h, CellIndex i, Word v) {
  if (mode_ == Mode::speculative && promotion_ == Promotion::live) {
    if (try_promote(h) == PromoteResult::aborted) return false;
  }
  if (mode_ == Mode::fast) {
    write_in_place(h, i, v);
  } else {
    h.check_index(i);
    writes_.put(i, v);
  }
  return true;
}

bool PotTxn::finish_at_gate(VersionedHeap& h) {
  if (mode_ == Mode::fast) return true;
  if (!validate(h)) {
    discard();
    return false;
  }
  for (const auto& [cell, value] : writes_) h.write_versioned(cell, value, wv_);
  return true;
}

void PotTxn::roll_back(VersionedHeap& h) {
  // Versions stay at wv. Restoring them would let a reader pair a pre-stamp v1
  // with a restored v2 around the undone value.
  for (auto it = undo_.rbegin(); it != undo_.rend(); ++it) h.store(it->cell, it->value);
  std::atomic_thread_fence(std::memory_order_release);
  undo_.clear();
  leave_fast();
}

void PotTxn::discard() {
  reads_.clear();
  writes_.clear();
  status_ = Status::aborted;
}

}  // namespace pot
