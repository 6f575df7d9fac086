#include "pot/heap.hpp"

#include <bit>
#include <string>

namespace pot {

namespace {

std::size_t stripe_count_for(std::size_t n_cells, const StripeConfig& c) {
  if (n_cells == 0) throw std::invalid_argument("heap must hold at least one cell");
  if (c.kind == StripeConfig::Kind::one_to_one) return n_cells;
  if (c.size == 0 || !std::has_single_bit(c.size)) {
    throw std::invalid_argument("stripe table size must be a power of two");
  }
  if (c.shift >= 64) throw std::invalid_argument("stripe shift out of range");
  return c.size;
}

}  // namespace

VersionedHeap::VersionedHeap(std::size_t n_cells, StripeConfig stripes)
    : n_cells_(n_cells),
      n_stripes_(stripe_count_for(n_cells, stripes)),
      config_(stripes),
      cells_(std::make_unique<std::atomic<Word>[]>(n_cells_)),
      meta_(std::make_unique<std::atomic<Version>[]>(n_stripes_))
#ifndef NDEBUG
      ,
      owners_(std::make_unique<std::atomic<std::uint64_t>[]>(n_stripes_))
#endif
{
  for (std::size_t i = 0; i < n_cells_; ++i) cells_[i].store(0, std::memory_order_relaxed);
  for (std::size_t s = 0; s < n_stripes_; ++s) {
    meta_[s].store(0, std::memory_order_relaxed);
#ifndef NDEBUG
    owners_[s].store(0, std::memory_order_relaxed);
#endif
  }
}

VersionedHeap::VersionedHeap(const VersionedHeap& other)
    : VersionedHeap(other.n_cells_, other.config_) {
  for (std::size_t i = 0; i < n_cells_; ++i) {
    cells_[i].store(other.cells_[i].load(std::memory_order_relaxed),
                    std::memory_order_relaxed);
  }
  for (std::size_t s = 0; s < n_stripes_; ++s) {
    meta_[s].store(other.meta_[s].load(std::memory_order_relaxed),
                   std::memory_order_relaxed);
#ifndef NDEBUG
    owners_[s].store(other.owners_[s].load(std::memory_order_relaxed),
                     std::memory_order_relaxed);
#endif
  }
  gv_.store(other.gv_.load(std::memory_order_relaxed), std::memory_order_relaxed);
}

void VersionedHeap::throw_out_of_range(CellIndex i) const {
  throw ContractViolation("cell index " + std::to_string(i) +
                          " out of range for heap of " + std::to_string(n_cells_));
}

std::optional<Version> VersionedHeap::try_lock_stripe(CellIndex i, Version rv,
                                    [[maybe_unused]] std::uint64_t owner) {
  check_index(i);
  const std::size_t s = stripe_of(i);
  Version cur = meta_[s].load(std::memory_order_relaxed);
  if (is_locked(cur) || cur > rv) return std::nullopt;
  if (!meta_[s].compare_exchange_strong(cur, cur | 1U, std::memory_order_acquire,
                                        std::memory_order_relaxed)) {
    return std::nullopt;
  }
#ifndef NDEBUG
  owners_[s].store(owner, std::memory_order_relaxed);
#endif
  return cur;
}

void VersionedHeap::unlock_stripe(CellIndex i, Version new_version,
                                  [[maybe_unused]] std::uint64_t owner) {
  check_index(i);
  const std::size_t s = stripe_of(i);
  if (is_locked(new_version)) {
    throw ContractViolation("unlock must store an even version");
  }
#ifndef NDEBUG
  if (!is_locked(meta_[s].load(std::memory_order_relaxed)) ||
      owners_[s].load(std::memory_order_relaxed) != owner) {
    throw ContractViolation("stripe unlocked by a transaction that does not own it");
  }
  owners_[s].store(0, std::memory_order_relaxed);
#endif
  meta_[s].store(new_version, std::memory_order_release);
}

std::vector<Word> VersionedHeap::snapshot_cells() const {
  std::vector<Word> out(n_cells_);
  for (std::size_t i = 0; i < n_cells_; ++i) out[i] = cells_[i].load(std::memory_order_acquire);
  return out;
}

std::vector<Version> VersionedHeap::snapshot_versions() const {
  std::vector<Version> out(n_stripes_);
  for (std::size_t s = 0; s < n_stripes_; ++s) out[s] = meta_[s].load(std::memory_order_acquire);
  return out;
}

}  // namespace pot
