#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pot/types.hpp"

namespace pot {

/// Sequencer misuse that is not a contract violation of the caller's code,
/// e.g. stopping a thread twice.
class SequencerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A replayed program stopped following its recorded order.
class HangReport : public std::runtime_error {
 public:
  HangReport(SeqNo stuck_at, std::optional<ThreadId> thread, std::string label,
             const std::string& reason);

  SeqNo stuck_at() const noexcept { return stuck_at_; }
  const std::optional<ThreadId>& thread() const noexcept { return thread_; }
  const std::string& label() const noexcept { return label_; }

 private:
  SeqNo stuck_at_;
  std::optional<ThreadId> thread_;
  std::string label_;
};

struct ReplayEntry {
  ThreadId thread;
  std::string label;
  friend bool operator==(const ReplayEntry&, const ReplayEntry&) = default;
};

/// Explicit serialization order: entry k (0-based) receives sequence number k+1.
struct ReplayOrder {
  std::vector<ReplayEntry> entries;
  std::chrono::milliseconds hang_timeout{2000};

  /// `thread_id<TAB>txn_label` per line.
  static ReplayOrder parse(std::istream& in);
  static ReplayOrder load(const std::string& path);
  void write(std::ostream& out) const;
};

/// Lifecycle events the sequencer has ordered.
struct LifecycleEvent {
  enum class Kind { spawn, stop };
  Kind kind;
  ThreadId thread;
  std::uint64_t round;  // spawn: first round of the child; stop: round of the stop slot
  SeqNo sn;             // spawn: creating transaction (0 during setup); stop: slot
};

/// Ordering phase. Threads form a tree rooted at the main thread; within each
/// round every live thread owns one slot, granted in post-order of the tree.
/// A thread's k-th sequenced event (transaction or stop) uses its k-th round.
///
/// Callers must request a thread's next number only after that thread's
/// previous event has committed; under that discipline the assignment is a
/// pure function of the sequenced history and never blocks.
class Sequencer {
 public:
  static constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();
  static constexpr std::size_t kDefaultCapacity = 4096;

  explicit Sequencer(std::size_t max_threads = kDefaultCapacity);
  explicit Sequencer(ReplayOrder order, std::size_t max_threads = kDefaultCapacity);
  ~Sequencer();

  Sequencer(const Sequencer&) = delete;
  Sequencer& operator=(const Sequencer&) = delete;

  bool replaying() const noexcept { return replay_ != nullptr; }

  ThreadId register_main();

  /// Adds a child of `parent`. `creating_txn` is the sequence number of the
  /// transaction that created it; nullopt is only allowed before any number
  /// has been handed out, and places the child in round 1.
  ThreadId spawn(ThreadId parent, std::optional<SeqNo> creating_txn);

  /// Removes the root from the round order. Setup phase only; the root keeps
  /// its place in the tree.
  void detach_main();

  /// Sequences the thread's exit in its next slot and removes it from later
  /// rounds. Returns nullopt in replay mode, where exits own no slot.
  std::optional<SeqNo> stop(ThreadId t);

  /// Sequence number of the thread's next transaction. `label` is only
  /// consulted in replay mode.
  SeqNo get_seq_no(ThreadId t, std::string_view label = {}) {
    // A stop or spawn bumps the epoch, so a stopped or unknown thread never
    // has a valid cache and always takes the checked path.
    if (t.value() < capacity_ && replay_ == nullptr) {
      Node& n = nodes_[t.value()];
      const std::uint64_t r = n.next_round;
      if (epoch_.load(std::memory_order_acquire) == n.cache_epoch && r <= n.cache_horizon) {
        const SeqNo sn = n.cache_sn + (r - n.cache_round) * n.cache_round_size;
        n.last_sn = sn;
        n.last_round = r;
        n.next_round = r + 1;
        return sn;
      }
    }
    return get_seq_no_checked(t, label);
  }

  /// Threads owning a slot in `round`, in slot order. Complete once every event
  /// of the previous round has been sequenced.
  std::vector<ThreadId> round_members(std::uint64_t round) const;
  std::vector<ThreadId> post_order() const;

  /// Round of the thread's next slot.
  std::uint64_t next_round(ThreadId t) const;
  bool is_stopped(ThreadId t) const;
  std::size_t thread_count() const;

  std::vector<LifecycleEvent> lifecycle_events() const;

  /// Hang diagnostic. Returns a report once `committed` (the current gv) has
  /// not moved for longer than the hang timeout while work is outstanding.
  std::optional<HangReport> check_progress(
      SeqNo committed,
      std::chrono::steady_clock::time_point now = std::chrono::steady_clock::now());
  void set_hang_timeout(std::optional<std::chrono::milliseconds> timeout);

 private:
  struct Node {
    std::uint32_t id = 0;
    std::optional<std::uint32_t> parent;
    std::vector<std::uint32_t> children;
    std::uint64_t first_round = 1;
    std::uint64_t stop_round = kNever;  // guarded by mu_
    bool detached = false;
    bool in_use = false;

    // Owner-thread state.
    bool stopped = false;
    std::uint64_t next_round = 1;
    std::uint64_t last_round = 0;
    SeqNo last_sn = 0;

    // Fast path: while the epoch is unchanged, membership is constant over
    // rounds [cache_round, cache_horizon].
    std::uint64_t cache_epoch = kNever;
    std::uint64_t cache_round = 0;
    std::uint64_t cache_horizon = 0;
    std::uint64_t cache_round_size = 0;
    SeqNo cache_sn = 0;

    std::size_t replay_cursor = 0;
  };
  struct Replay;

  SeqNo get_seq_no_checked(ThreadId t, std::string_view label);

  Node& node(ThreadId t);
  const Node& node(ThreadId t) const;
  ThreadId add_node(std::optional<std::uint32_t> parent, std::uint64_t first_round);
  void post_order_into(std::uint32_t id, std::vector<std::uint32_t>& out) const;
  bool active_in(const Node& n, std::uint64_t round) const noexcept;
  SeqNo assign_slow(Node& n);
  SeqNo assign_replay(Node& n, std::string_view label);

  mutable std::mutex mu_;
  std::unique_ptr<Node[]> nodes_;
  std::size_t capacity_;
  std::uint32_t n_nodes_ = 0;
  std::atomic<std::uint64_t> epoch_{0};
  std::vector<LifecycleEvent> events_;
  std::unique_ptr<Replay> replay_;

  std::optional<std::chrono::milliseconds> hang_timeout_;
  SeqNo progress_seen_ = 0;
  std::optional<std::chrono::steady_clock::time_point> progress_since_;
};

}  // namespace pot
