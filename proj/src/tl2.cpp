#include "pot/tl2.hpp"

namespace pot {

const Tl2Txn::HeldLock* Tl2Txn::held_stripe(std::size_t stripe) const noexcept {
  for (const auto& l : held_) {
    if (l.stripe == stripe) return &l;
  }
  return nullptr;
}

bool Tl2Txn::lock_write_set(VersionedHeap& h) {
  for (const auto& [cell, value] : writes_) {
    const std::size_t stripe = h.stripe_of(cell);
    if (const auto prior = h.try_lock_stripe(cell, rv_, owner_)) {
      held_.push_back({stripe, cell, *prior});
      continue;
    }
    // Striped heaps map several written cells onto one lock.
    if (held_stripe(stripe) == nullptr) return false;
  }
  return true;
}

Version Tl2Txn::acquire_write_version(VersionedHeap& h) {
  wv_ = h.clock().fetch_add(2, std::memory_order_acq_rel) + 2;
  return wv_;
}

bool Tl2Txn::validate_read_set(const VersionedHeap& h) const {
  for (CellIndex cell : reads_) {
    Version v = h.version_of(cell);
    if (VersionedHeap::is_locked(v)) {
      const HeldLock* mine = held_stripe(h.stripe_of(cell));
      if (mine == nullptr) return false;
      v = mine->prior;
    }
    if (v > rv_) return false;
  }
  return true;
}

void Tl2Txn::write_back(VersionedHeap& h) {
  for (const auto& [cell, value] : writes_) h.store(cell, value);
  std::atomic_thread_fence(std::memory_order_release);
  for (const auto& l : held_) h.unlock_stripe(l.cell, wv_, owner_);
  held_.clear();
  status_ = Status::committed;
}

void Tl2Txn::abort(VersionedHeap& h) {
  for (const auto& l : held_) h.unlock_stripe(l.cell, l.prior, owner_);
  held_.clear();
  status_ = Status::aborted;
}

std::optional<Version> Tl2Txn::commit(VersionedHeap& h) {
  if (writes_.empty()) {
    status_ = Status::committed;
    return rv_;
  }
  if (!lock_write_set(h)) {
    abort(h);
    return std::nullopt;
  }
  acquire_write_version(h);
  if (!validate_read_set(h)) {
    abort(h);
    return std::nullopt;
  }
  write_back(h);
  return wv_;
}

}  // namespace pot
