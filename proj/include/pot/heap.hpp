#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "pot/types.hpp"

namespace pot {

/// How cells map onto version slots.
struct StripeConfig {
  enum class Kind { one_to_one, striped };
  Kind kind = Kind::one_to_one;
  std::size_t size = 0;  // number of slots, power of two (striped only)
  unsigned shift = 0;    // cells per slot = 2^shift (striped only)

  static StripeConfig one_to_one() { return {}; }
  static StripeConfig striped(std::size_t size, unsigned shift) {
    return {Kind::striped, size, shift};
  }
};

/// The three observations of a fenced versioned read.
struct ReadObservation {
  Version v1;
  Word value;
  Version v2;
};

/// Shared transactional memory: word cells, one version slot per stripe, and
/// the global clock `gv`.
///
/// Ordering contract:
///  - read_versioned: slot load, acquire fence, cell load, acquire fence, slot
///    load.
///  - write_versioned: slot store, release fence, cell store. A reader that
///    observes the value therefore observes a version >= the stamped one.
///  - gv loads are acquire, gv stores release.
///
/// In TL2 mode a slot holds a vlock: odd = locked, even = unlocked version.
class VersionedHeap {
 public:
  explicit VersionedHeap(std::size_t n_cells,
                         StripeConfig stripes = StripeConfig::one_to_one());

  /// Copies a quiescent heap (no concurrent access to either side).
  VersionedHeap(const VersionedHeap& other);
  VersionedHeap& operator=(const VersionedHeap&) = delete;

  std::size_t size() const noexcept { return n_cells_; }
  std::size_t stripe_count() const noexcept { return n_stripes_; }
  const StripeConfig& stripe_config() const noexcept { return config_; }

  std::size_t stripe_of(CellIndex i) const noexcept {
    return config_.kind == StripeConfig::Kind::one_to_one
               ? i
               : (i >> config_.shift) & (n_stripes_ - 1);
  }

  ReadObservation read_versioned(CellIndex i) const {
    check_index(i);
    const auto& slot = meta_[stripe_of(i)];
    ReadObservation obs;
    obs.v1 = slot.load(std::memory_order_relaxed);
    std::atomic_thread_fence(std::memory_order_acquire);
    obs.value = cells_[i].load(std::memory_order_relaxed);
    std::atomic_thread_fence(std::memory_order_acquire);
    obs.v2 = slot.load(std::memory_order_relaxed);
    return obs;
  }

  void write_versioned(CellIndex i, Word value, Version version) {
    check_index(i);
    meta_[stripe_of(i)].store(version, std::memory_order_relaxed);
    std::atomic_thread_fence(std::memory_order_release);
    cells_[i].store(value, std::memory_order_relaxed);
  }

  /// Plain accessors used by fast-mode and lock-based paths.
  Word load(CellIndex i) const noexcept {
    return cells_[i].load(std::memory_order_relaxed);
  }
  void store(CellIndex i, Word v) noexcept {
    cells_[i].store(v, std::memory_order_relaxed);
  }

  Version version_of(CellIndex i) const noexcept {
    return meta_[stripe_of(i)].load(std::memory_order_acquire);
  }
  void set_version(CellIndex i, Version v) noexcept {
    meta_[stripe_of(i)].store(v, std::memory_order_relaxed);
  }

  // TL2 vlocks. `owner` is only checked in debug builds. On success returns
  // the unlocked version that was replaced.
  std::optional<Version> try_lock_stripe(CellIndex i, Version rv, std::uint64_t owner);
  void unlock_stripe(CellIndex i, Version new_version, std::uint64_t owner);
  static constexpr bool is_locked(Version v) noexcept { return (v & 1U) != 0; }

  std::atomic<std::uint64_t>& clock() noexcept { return gv_; }
  const std::atomic<std::uint64_t>& clock() const noexcept { return gv_; }
  std::uint64_t clock_value() const noexcept {
    return gv_.load(std::memory_order_acquire);
  }

  std::vector<Word> snapshot_cells() const;
  std::vector<Version> snapshot_versions() const;

  void check_index(CellIndex i) const {
    if (i >= n_cells_) throw_out_of_range(i);
  }

 private:
  [[noreturn]] void throw_out_of_range(CellIndex i) const;

  std::size_t n_cells_;
  std::size_t n_stripes_;
  StripeConfig config_;
  std::unique_ptr<std::atomic<Word>[]> cells_;
  std::unique_ptr<std::atomic<Version>[]> meta_;
#ifndef NDEBUG
  std::unique_ptr<std::atomic<std::uint64_t>[]> owners_;
#endif
  alignas(64) std::atomic<std::uint64_t> gv_{0};
};

}  // namespace pot
