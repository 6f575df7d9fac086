#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "pot/types.hpp"

namespace pot {

enum class AbortPolicy { retry, no_retry };

/// Thrown by Transaction::abort and caught by the runtime's retry loop.
struct ExplicitAbort {
  AbortPolicy policy;
};

class ThreadProgram;

/// Accessor handed to a transaction body. Reads may unwind the body with an
/// internal conflict signal; bodies must not catch exceptions they do not own.
class Transaction {
 public:
  virtual ~Transaction() = default;

  virtual Word read(CellIndex i) = 0;
  virtual void write(CellIndex i, Word v) = 0;

  /// Starts `program` as a child thread once this transaction commits.
  /// Discarded if the attempt aborts.
  virtual void spawn(std::unique_ptr<ThreadProgram> program) = 0;

  virtual ThreadId thread() const = 0;
  /// 1 for the first attempt of this transaction.
  virtual std::uint32_t attempt() const = 0;

  [[noreturn]] void abort(AbortPolicy policy) { throw ExplicitAbort{policy}; }
};

/// A workload thread, driven one transaction at a time.
///
/// Contract: `body` is a pure function of its reads and the program's own
/// committed state, so re-running it after an abort is transparent.
class ThreadProgram {
 public:
  virtual ~ThreadProgram() = default;

  /// Label of the next transaction, or nullopt when the thread exits.
  virtual std::optional<std::string> next_label() = 0;
  virtual void body(Transaction& tx) = 0;
  /// Called once after the transaction from the last next_label() committed
  /// (including no-retry aborts).
  virtual void on_commit() {}
};

}  // namespace pot
