#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "pot/types.hpp"

namespace pot {

/// Insertion-ordered map of buffered writes (cell -> value) with an
/// open-addressing index. Last write to a cell wins.
class WriteSet {
 public:
  struct Entry {
    CellIndex cell;
    Word value;
  };

  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  const Word* find(CellIndex cell) const noexcept {
    if (entries_.empty()) return nullptr;
    for (std::size_t slot = hash(cell);; slot = (slot + 1) & mask_) {
      const std::uint32_t e = index_[slot];
      if (e == 0) return nullptr;
      if (entries_[e - 1].cell == cell) return &entries_[e - 1].value;
    }
  }

  void put(CellIndex cell, Word value) {
    if ((entries_.size() + 1) * 2 > index_.size()) grow();
    for (std::size_t slot = hash(cell);; slot = (slot + 1) & mask_) {
      std::uint32_t& e = index_[slot];
      if (e == 0) {
        entries_.push_back({cell, value});
        e = static_cast<std::uint32_t>(entries_.size());
        return;
      }
      if (entries_[e - 1].cell == cell) {
        entries_[e - 1].value = value;
        return;
      }
    }
  }

  void clear() noexcept {
    if (entries_.empty()) return;
    if (entries_.size() * 8 < index_.size()) {
      // Reverse insertion order keeps every remaining probe chain intact.
      for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) erase_slot_of(it->cell);
    } else {
      std::fill(index_.begin(), index_.end(), 0U);
    }
    entries_.clear();
  }

 private:
  std::size_t hash(CellIndex cell) const noexcept {
    return static_cast<std::size_t>((cell * 0x9E3779B97F4A7C15ULL) >> 32) & mask_;
  }

  void erase_slot_of(CellIndex cell) noexcept {
    for (std::size_t slot = hash(cell);; slot = (slot + 1) & mask_) {
      std::uint32_t& e = index_[slot];
      if (e == 0) return;
      if (entries_[e - 1].cell == cell) {
        e = 0;
        return;
      }
    }
  }

  void grow() {
    const std::size_t cap = index_.empty() ? 16 : index_.size() * 2;
    index_.assign(cap, 0U);
    mask_ = cap - 1;
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      std::size_t slot = hash(entries_[k].cell);
      while (index_[slot] != 0) slot = (slot + 1) & mask_;
      index_[slot] = static_cast<std::uint32_t>(k + 1);
    }
  }

  std::vector<Entry> entries_;
  std::vector<std::uint32_t> index_;
  std::size_t mask_ = 0;
};

}  // namespace pot
