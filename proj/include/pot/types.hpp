#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace pot {

/// Value stored in one transactional cell.
using Word = std::uint64_t;
/// Per-stripe version stamp. In ordered modes versions are sequence numbers.
using Version = std::uint64_t;
/// Position of a sequenced event in the global order, starting at 1.
using SeqNo = std::uint64_t;
using CellIndex = std::size_t;

/// Deterministic identity of a workload thread (not the OS thread id).
class ThreadId {
 public:
  constexpr ThreadId() = default;
  constexpr explicit ThreadId(std::uint32_t v) : value_(v) {}
  constexpr std::uint32_t value() const noexcept { return value_; }
  friend constexpr auto operator<=>(ThreadId, ThreadId) = default;

 private:
  std::uint32_t value_ = 0;
};

/// Raised when a caller breaks an operation's precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace pot

template <>
struct std::hash<pot::ThreadId> {
  std::size_t operator()(pot::ThreadId t) const noexcept { return t.value(); }
};
