#include "pot/sequencer.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <utility>

namespace pot {

namespace {

std::string describe_hang(SeqNo sn, const std::optional<ThreadId>& thread,
                          const std::string& label, const std::string& reason) {
  std::string msg = "hang at sn " + std::to_string(sn);
  if (thread) msg += ", thread " + std::to_string(thread->value());
  if (!label.empty()) msg += ", label '" + label + "'";
  return msg + ": " + reason;
}

}  // namespace

HangReport::HangReport(SeqNo stuck_at, std::optional<ThreadId> thread, std::string label,
                       const std::string& reason)
    : std::runtime_error(describe_hang(stuck_at, thread, label, reason)),
      stuck_at_(stuck_at),
      thread_(thread),
      label_(std::move(label)) {}

ReplayOrder ReplayOrder::parse(std::istream& in) {
  ReplayOrder order;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    std::uint32_t tid = 0;
    const char* first = line.data();
    const char* last = line.data() + (tab == std::string::npos ? line.size() : tab);
    auto [ptr, ec] = std::from_chars(first, last, tid);
    if (tab == std::string::npos || ec != std::errc{} || ptr != last) {
      throw std::invalid_argument("malformed replay record on line " + std::to_string(line_no));
    }
    order.entries.push_back({ThreadId{tid}, line.substr(tab + 1)});
  }
  return order;
}

ReplayOrder ReplayOrder::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open replay order file " + path);
  return parse(in);
}

void ReplayOrder::write(std::ostream& out) const {
  for (const auto& e : entries) out << e.thread.value() << '\t' << e.label << '\n';
}

struct Sequencer::Replay {
  ReplayOrder order;
  std::vector<std::vector<SeqNo>> slots;  // by thread id
};

Sequencer::Sequencer(std::size_t max_threads)
    : nodes_(std::make_unique<Node[]>(max_threads)), capacity_(max_threads) {}

Sequencer::Sequencer(ReplayOrder order, std::size_t max_threads) : Sequencer(max_threads) {
  replay_ = std::make_unique<Replay>();
  replay_->slots.resize(max_threads);
  for (std::size_t k = 0; k < order.entries.size(); ++k) {
    const auto tid = order.entries[k].thread.value();
    if (tid >= max_threads) {
      throw std::invalid_argument("replay order names thread " + std::to_string(tid) +
                                  " beyond the sequencer capacity");
    }
    replay_->slots[tid].push_back(k + 1);
  }
  hang_timeout_ = order.hang_timeout;
  replay_->order = std::move(order);
}

Sequencer::~Sequencer() = default;

Sequencer::Node& Sequencer::node(ThreadId t) {
  if (t.value() >= n_nodes_) {
    throw SequencerError("unknown thread " + std::to_string(t.value()));
  }
  return nodes_[t.value()];
}

const Sequencer::Node& Sequencer::node(ThreadId t) const {
  return const_cast<Sequencer*>(this)->node(t);
}

ThreadId Sequencer::add_node(std::optional<std::uint32_t> parent, std::uint64_t first_round) {
  if (n_nodes_ == capacity_) throw SequencerError("sequencer thread capacity exhausted");
  Node& n = nodes_[n_nodes_];
  n.id = n_nodes_;
  n.parent = parent;
  n.first_round = first_round;
  n.next_round = first_round;
  n.in_use = true;
  return ThreadId{n_nodes_++};
}

ThreadId Sequencer::register_main() {
  std::lock_guard lock(mu_);
  if (n_nodes_ != 0) throw SequencerError("main thread already registered");
  return add_node(std::nullopt, 1);
}

ThreadId Sequencer::spawn(ThreadId parent, std::optional<SeqNo> creating_txn) {
  std::lock_guard lock(mu_);
  Node& p = node(parent);
  std::uint64_t first = 1;
  if (!creating_txn) {
    if (std::any_of(nodes_.get(), nodes_.get() + n_nodes_,
                                      [](const Node& n) { return n.last_sn != 0; })) {
      throw ContractViolation("setup spawns must precede sequencing");
    }
  } else if (!replaying()) {
    if (p.last_sn != *creating_txn) {
      throw ContractViolation("spawn must be attributed to the parent's current transaction");
    }
    first = p.last_round + 1;
  }
  const ThreadId child = add_node(parent.value(), first);
  p.children.push_back(child.value());
  events_.push_back({LifecycleEvent::Kind::spawn, child, first, creating_txn.value_or(0)});
  epoch_.fetch_add(1, std::memory_order_release);
  return child;
}

void Sequencer::detach_main() {
  std::lock_guard lock(mu_);
  if (n_nodes_ == 0) throw SequencerError("no main thread registered");
  if (std::any_of(nodes_.get(), nodes_.get() + n_nodes_,
                  [](const Node& n) { return n.last_sn != 0; })) {
    throw ContractViolation("main thread can only detach before sequencing starts");
  }
  nodes_[0].detached = true;
  nodes_[0].stopped = true;
  epoch_.fetch_add(1, std::memory_order_release);
}

bool Sequencer::active_in(const Node& n, std::uint64_t round) const noexcept {
  return n.in_use && !n.detached && n.first_round <= round && round <= n.stop_round;
}

void Sequencer::post_order_into(std::uint32_t id, std::vector<std::uint32_t>& out) const {
  for (auto child : nodes_[id].children) post_order_into(child, out);
  out.push_back(id);
}

std::vector<ThreadId> Sequencer::post_order() const {
  std::lock_guard lock(mu_);
  std::vector<std::uint32_t> ids;
  if (n_nodes_ > 0) post_order_into(0, ids);
  std::vector<ThreadId> out;
  out.reserve(ids.size());
  for (auto id : ids) out.emplace_back(id);
  return out;
}

std::vector<ThreadId> Sequencer::round_members(std::uint64_t round) const {
  std::lock_guard lock(mu_);
  std::vector<std::uint32_t> ids;
  if (n_nodes_ > 0) post_order_into(0, ids);
  std::vector<ThreadId> out;
  for (auto id : ids) {
    if (active_in(nodes_[id], round)) out.emplace_back(id);
  }
  return out;
}

SeqNo Sequencer::assign_slow(Node& n) {
  const std::uint64_t r = n.next_round;

  SeqNo base = 0;
  std::uint64_t horizon = kNever;
  for (std::uint32_t i = 0; i < n_nodes_; ++i) {
    const Node& m = nodes_[i];
    if (!m.in_use || m.detached) continue;
    if (m.first_round < r) {
      const std::uint64_t last = std::min(m.stop_round, r - 1);
      if (last >= m.first_round) base += last - m.first_round + 1;
    }
    if (m.first_round > r) horizon = std::min(horizon, m.first_round - 1);
    if (active_in(m, r) && m.stop_round != kNever) horizon = std::min(horizon, m.stop_round);
  }

  std::vector<std::uint32_t> order;
  order.reserve(n_nodes_);
  post_order_into(0, order);
  std::uint64_t size = 0;
  std::optional<std::uint64_t> index;
  for (auto id : order) {
    if (!active_in(nodes_[id], r)) continue;
    if (id == n.id) index = size;
    ++size;
  }
  if (!index) {
    throw SequencerError("thread " + std::to_string(n.id) + " owns no slot in round " +
                         std::to_string(r));
  }

  const SeqNo sn = base + *index + 1;
  n.cache_epoch = epoch_.load(std::memory_order_relaxed);
  n.cache_round = r;
  n.cache_horizon = horizon;
  n.cache_round_size = size;
  n.cache_sn = sn;
  n.last_sn = sn;
  n.last_round = r;
  n.next_round = r + 1;
  return sn;
}

SeqNo Sequencer::assign_replay(Node& n, std::string_view label) {
  const auto& slots = replay_->slots[n.id];
  const auto& entries = replay_->order.entries;
  if (n.replay_cursor >= slots.size()) {
    throw HangReport(entries.size() + 1, ThreadId{n.id}, std::string(label),
                     "transaction is not part of the recorded order");
  }
  const SeqNo sn = slots[n.replay_cursor];
  const auto& expected = entries[sn - 1];
  if (expected.label != label) {
    throw HangReport(sn, ThreadId{n.id}, expected.label,
                     "program diverged from the recording (executed '" + std::string(label) +
                         "')");
  }
  ++n.replay_cursor;
  n.last_sn = sn;
  return sn;
}

SeqNo Sequencer::get_seq_no_checked(ThreadId t, std::string_view label) {
  if (t.value() >= capacity_) throw SequencerError("unknown thread");
  Node& n = nodes_[t.value()];
  if (!n.in_use) throw SequencerError("unknown thread " + std::to_string(t.value()));
  if (n.stopped) {
    throw SequencerError("thread " + std::to_string(t.value()) + " has stopped");
  }
  if (replay_) return assign_replay(n, label);
  std::lock_guard lock(mu_);
  return assign_slow(n);
}

std::optional<SeqNo> Sequencer::stop(ThreadId t) {
  std::lock_guard lock(mu_);
  Node& n = node(t);
  if (n.stopped) {
    throw SequencerError("thread " + std::to_string(t.value()) + " already stopped");
  }
  std::optional<SeqNo> sn;
  std::uint64_t round = n.next_round;
  if (!replay_) {
    sn = assign_slow(n);
    n.stop_round = round;
  }
  n.stopped = true;
  events_.push_back({LifecycleEvent::Kind::stop, t, round, sn.value_or(0)});
  epoch_.fetch_add(1, std::memory_order_release);
  return sn;
}

std::uint64_t Sequencer::next_round(ThreadId t) const { return node(t).next_round; }

bool Sequencer::is_stopped(ThreadId t) const { return node(t).stopped; }

std::size_t Sequencer::thread_count() const {
  std::lock_guard lock(mu_);
  return n_nodes_;
}

std::vector<LifecycleEvent> Sequencer::lifecycle_events() const {
  std::lock_guard lock(mu_);
  return events_;
}

void Sequencer::set_hang_timeout(std::optional<std::chrono::milliseconds> timeout) {
  std::lock_guard lock(mu_);
  hang_timeout_ = timeout;
  progress_since_.reset();
}

std::optional<HangReport> Sequencer::check_progress(SeqNo committed,
                                                    std::chrono::steady_clock::time_point now) {
  std::lock_guard lock(mu_);
  if (!hang_timeout_) return std::nullopt;
  if (!progress_since_ || committed != progress_seen_) {
    progress_seen_ = committed;
    progress_since_ = now;
    return std::nullopt;
  }
  if (now - *progress_since_ < *hang_timeout_) return std::nullopt;
  if (replay_) {
    const auto& entries = replay_->order.entries;
    if (committed >= entries.size()) return std::nullopt;
    const auto& e = entries[committed];
    return HangReport(committed + 1, e.thread, e.label,
                      "recorded transaction was never executed");
  }
  return HangReport(committed + 1, std::nullopt, "",
                    "no sequenced event committed within the hang timeout");
}

}  // namespace pot
