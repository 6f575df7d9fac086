#include "pot/runtime.hpp"

#include <algorithm>
#include <condition_variable>
#include <exception>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "pot/cycles.hpp"
#include "pot/digest.hpp"
#include "pot/jitter.hpp"
#include "pot/pogl.hpp"
#include "pot/tl2.hpp"

namespace pot {

std::string_view to_string(System s) noexcept {
  switch (s) {
    case System::tl2: return "tl2";
    case System::pot: return "pot";
    case System::pot_minus: return "pot-minus";
    case System::pot_star: return "pot-star";
    case System::pogl: return "pogl";
  }
  return "?";
}

std::optional<System> parse_system(std::string_view name) noexcept {
  for (System s : {System::tl2, System::pot, System::pot_minus, System::pot_star, System::pogl}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

Promotion promotion_of(System s) noexcept {
  switch (s) {
    case System::pot_minus: return Promotion::never;
    case System::pot_star: return Promotion::at_start;
    default: return Promotion::live;
  }
}

std::string_view to_string(CommitMode m) noexcept {
  switch (m) {
    case CommitMode::speculative: return "speculative";
    case CommitMode::fast: return "fast";
    case CommitMode::tl2: return "tl2";
    case CommitMode::pogl: return "pogl";
    case CommitMode::internal_stop: return "internal-stop";
  }
  return "?";
}

void write_commit_log(std::ostream& out, const std::vector<CommitRecord>& log) {
  for (const auto& r : log) {
    out << r.sn << '\t' << r.thread.value() << '\t' << r.label << '\t' << to_string(r.mode)
        << '\t' << r.attempts << '\t' << r.wait_cycles << '\n';
  }
}

RunStats& RunStats::operator+=(const RunStats& o) noexcept {
  commits += o.commits;
  validation_aborts += o.validation_aborts;
  gate_aborts += o.gate_aborts;
  explicit_aborts += o.explicit_aborts;
  promotions += o.promotions;
  wait_cycles_total += o.wait_cycles_total;
  wait_cycles_max = std::max(wait_cycles_max, o.wait_cycles_max);
  max_concurrent_fast = std::max(max_concurrent_fast, o.max_concurrent_fast);
  return *this;
}

bool consecutive_from_one(const std::vector<SeqNo>& sns) noexcept {
  for (std::size_t k = 0; k < sns.size(); ++k) {
    if (sns[k] != k + 1) return false;
  }
  return true;
}

ReplayOrder replay_order_from(const std::vector<CommitRecord>& log) {
  ReplayOrder order;
  for (const auto& r : log) {
    if (r.mode != CommitMode::internal_stop) order.entries.push_back({r.thread, r.label});
  }
  return order;
}

namespace {

struct ConflictAbort {};

constexpr std::string_view kStopLabel = "stop";

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) noexcept {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct Worker {
  ThreadId id;
  std::unique_ptr<ThreadProgram> program;
  std::optional<Jitter> jitter;
  RunStats stats;
  std::vector<std::unique_ptr<ThreadProgram>> pending;
  std::uint32_t attempt = 0;

  void perturb() {
    if (jitter) jitter->perturb();
  }
};

class Run {
 public:
  Run(const RunConfig& cfg, std::size_t n_cells);

  RunResult execute(ProgramSet programs);

 private:
  class Tl2Access;
  class PotAccess;
  class PoglAccess;

  void launch(ThreadId id, std::unique_ptr<ThreadProgram> program);
  void worker_main(Worker& w);
  void run_tl2(Worker& w, Tl2Txn& t, const std::string& label);
  void run_pot(Worker& w, PotTxn& t, const std::string& label);
  void run_pogl(Worker& w, PoglTxn& t, const std::string& label);
  void exit_thread(Worker& w);
  void finish_turn(Worker& w, SeqNo sn, const std::string& label, CommitMode mode,
                   std::uint32_t attempts, std::uint64_t waited) {
    append(sn, w.id, label, mode, attempts, waited);
    if (!w.pending.empty()) spawn_pending(w, sn);
    ++w.stats.commits;
    w.stats.wait_cycles_total += waited;
    w.stats.wait_cycles_max = std::max(w.stats.wait_cycles_max, waited);
  }
  void spawn_pending(Worker& w, SeqNo sn);
  void append(SeqNo sn, ThreadId thread, const std::string& label, CommitMode mode,
              std::uint32_t attempts, std::uint64_t waited) {
    if (cfg_.keep_log) append_locked({sn, thread, label, mode, attempts, waited});
  }
  void append_locked(CommitRecord rec);
  void check_cancel() const {
    if (cancel_.load(std::memory_order_relaxed)) throw RunCancelled();
  }
  WaitContext wait_context(Worker& w) {
    return {&cancel_, progress_, w.jitter ? &*w.jitter : nullptr};
  }

  const RunConfig& cfg_;
  VersionedHeap heap_;
  std::unique_ptr<Sequencer> seq_;
  Sequencer* progress_ = nullptr;  // hang diagnostics while waiting (replay only)
  GlobalOrderGate gate_;
  FastModeMonitor monitor_;
  std::atomic<bool> cancel_{false};
  std::atomic<std::uint32_t> next_tl2_id_{1};

  std::mutex log_mu_;
  std::vector<CommitRecord> log_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t live_ = 0;
  std::vector<std::thread> threads_;
  std::exception_ptr error_;
  RunStats stats_;
};

class Run::Tl2Access final : public Transaction {
 public:
  Tl2Access(Run& run, Worker& w, Tl2Txn& t) : run_(run), w_(w), t_(t) {}
  Word read(CellIndex i) override {
    w_.perturb();
    if (auto v = t_.read(run_.heap_, i)) return *v;
    throw ConflictAbort{};
  }
  void write(CellIndex i, Word v) override {
    run_.heap_.check_index(i);
    t_.write(i, v);
  }
  void spawn(std::unique_ptr<ThreadProgram> p) override { w_.pending.push_back(std::move(p)); }
  ThreadId thread() const override { return w_.id; }
  std::uint32_t attempt() const override { return w_.attempt; }

 private:
  Run& run_;
  Worker& w_;
  Tl2Txn& t_;
};

class Run::PotAccess final : public Transaction {
 public:
  PotAccess(Run& run, Worker& w, PotTxn& t) : run_(run), w_(w), t_(t) {}
  Word read(CellIndex i) override {
    w_.perturb();
    if (auto v = t_.read(run_.heap_, i)) return *v;
    throw ConflictAbort{};
  }
  void write(CellIndex i, Word v) override {
    if (!t_.write(run_.heap_, i, v)) throw ConflictAbort{};
  }
  void spawn(std::unique_ptr<ThreadProgram> p) override { w_.pending.push_back(std::move(p)); }
  ThreadId thread() const override { return w_.id; }
  std::uint32_t attempt() const override { return t_.attempts(); }

 private:
  Run& run_;
  Worker& w_;
  PotTxn& t_;
};

class Run::PoglAccess final : public Transaction {
 public:
  PoglAccess(Run& run, Worker& w, PoglTxn& t) : run_(run), w_(w), t_(t) {}
  Word read(CellIndex i) override { return t_.read(run_.heap_, i); }
  void write(CellIndex i, Word v) override { t_.write(run_.heap_, i, v); }
  void spawn(std::unique_ptr<ThreadProgram> p) override { w_.pending.push_back(std::move(p)); }
  ThreadId thread() const override { return w_.id; }
  std::uint32_t attempt() const override { return t_.attempts(); }

 private:
  Run& run_;
  Worker& w_;
  PoglTxn& t_;
};

Run::Run(const RunConfig& cfg, std::size_t n_cells)
    : cfg_(cfg), heap_(n_cells, cfg.stripes), gate_(heap_.clock(), cfg.gate) {
  if (!is_ordered(cfg.system)) {
    if (cfg.replay) throw std::invalid_argument("replay requires an ordered system");
    return;
  }
  seq_ = cfg.replay ? std::make_unique<Sequencer>(*cfg.replay) : std::make_unique<Sequencer>();
  if (!cfg.replay && cfg.hang_timeout) seq_->set_hang_timeout(cfg.hang_timeout);
  if (seq_->replaying()) progress_ = seq_.get();
}

void Run::append_locked(CommitRecord rec) {
  std::lock_guard lock(log_mu_);
  log_.push_back(std::move(rec));
}

void Run::launch(ThreadId id, std::unique_ptr<ThreadProgram> program) {
  std::lock_guard lock(mu_);
  ++live_;
  threads_.emplace_back([this, id, p = std::move(program)]() mutable {
    Worker w;
    w.id = id;
    w.program = std::move(p);
    if (cfg_.jitter_seed) w.jitter.emplace(mix_seed(*cfg_.jitter_seed, id.value()));
    worker_main(w);
  });
}

void Run::worker_main(Worker& w) {
  try {
    Tl2Txn tl2(w.id.value() + 1);
    PotTxn pot(promotion_of(cfg_.system), cfg_.track_fast_mode ? &monitor_ : nullptr);
    PoglTxn pogl;
    while (auto label = w.program->next_label()) {
      switch (cfg_.system) {
        case System::tl2: run_tl2(w, tl2, *label); break;
        case System::pogl: run_pogl(w, pogl, *label); break;
        default: run_pot(w, pot, *label); break;
      }
      w.program->on_commit();
    }
    exit_thread(w);
  } catch (const RunCancelled&) {
  } catch (...) {
    std::lock_guard lock(mu_);
    if (!error_) error_ = std::current_exception();
    cancel_.store(true, std::memory_order_relaxed);
  }
  std::lock_guard lock(mu_);
  stats_ += w.stats;
  --live_;
  cv_.notify_all();
}

void Run::spawn_pending(Worker& w, SeqNo sn) {
  for (auto& child : w.pending) launch(seq_->spawn(w.id, sn), std::move(child));
  w.pending.clear();
}

void Run::run_tl2(Worker& w, Tl2Txn& t, const std::string& label) {
  Tl2Access tx(*this, w, t);
  for (std::uint32_t attempt = 1;; ++attempt) {
    check_cancel();
    w.perturb();
    if (attempt > 1) {
      // Bounded exponential backoff, then hand the CPU away.
      const std::uint32_t spins = 1U << std::min<std::uint32_t>(attempt, 10);
      for (std::uint32_t s = 0; s < spins; ++s) cpu_relax();
      if (attempt > 4) std::this_thread::yield();
    }
    w.attempt = attempt;
    w.pending.clear();
    t.begin(heap_);
    std::optional<Version> committed;
    try {
      w.program->body(tx);
      committed = t.commit(heap_);
      if (!committed) {
        ++w.stats.validation_aborts;
        continue;
      }
    } catch (const ConflictAbort&) {
      t.abort(heap_);
      ++w.stats.validation_aborts;
      continue;
    } catch (const ExplicitAbort& a) {
      t.abort(heap_);
      ++w.stats.explicit_aborts;
      if (a.policy == AbortPolicy::retry) continue;
      w.pending.clear();
      append(t.read_version() + 1, w.id, label, CommitMode::tl2, attempt, 0);
      ++w.stats.commits;
      return;
    }
    append(t.serialization_key(), w.id, label, CommitMode::tl2, attempt, 0);
    for (auto& child : w.pending) {
      launch(ThreadId{next_tl2_id_.fetch_add(1, std::memory_order_relaxed)}, std::move(child));
    }
    w.pending.clear();
    ++w.stats.commits;
    return;
  }
}

void Run::run_pot(Worker& w, PotTxn& t, const std::string& label) {
  const SeqNo wv = seq_->get_seq_no(w.id, label);
  t.assign(wv);
  PotAccess tx(*this, w, t);
  const WaitContext ctx = wait_context(w);
  std::uint64_t waited = 0;
  for (;;) {
    check_cancel();
    w.perturb();
    w.pending.clear();
    t.begin(heap_);
    try {
      w.program->body(tx);
    } catch (const ConflictAbort&) {
      ++w.stats.validation_aborts;
      continue;
    } catch (const ExplicitAbort& a) {
      ++w.stats.explicit_aborts;
      const CommitMode mode = t.fast() ? CommitMode::fast : CommitMode::speculative;
      if (t.fast()) t.roll_back(heap_);
      t.discard();
      if (a.policy == AbortPolicy::retry) continue;
      w.pending.clear();
      waited += gate_.wait(wv, ctx);
      if (!t.validate(heap_)) {
        ++w.stats.gate_aborts;
        continue;
      }
      finish_turn(w, wv, label, mode, t.attempts(), waited);
      w.stats.promotions += t.promotions();
      t.publish(heap_);
      return;
    }
    if (!t.fast()) {
      waited += gate_.wait(wv, ctx);
      if (!t.finish_at_gate(heap_)) {
        ++w.stats.gate_aborts;
        continue;
      }
    }
    finish_turn(w, wv, label, t.fast() ? CommitMode::fast : CommitMode::speculative, t.attempts(),
                waited);
    w.stats.promotions += t.promotions();
    t.publish(heap_);
    return;
  }
}

void Run::run_pogl(Worker& w, PoglTxn& t, const std::string& label) {
  const SeqNo wv = seq_->get_seq_no(w.id, label);
  t.assign(wv);
  PoglAccess tx(*this, w, t);
  const std::uint64_t waited = gate_.wait(wv, wait_context(w));
  for (;;) {
    w.pending.clear();
    t.begin();
    try {
      w.program->body(tx);
    } catch (const ExplicitAbort& a) {
      ++w.stats.explicit_aborts;
      t.roll_back(heap_);
      if (a.policy == AbortPolicy::retry) continue;
      w.pending.clear();
    }
    finish_turn(w, wv, label, CommitMode::pogl, t.attempts(), waited);
    t.publish(heap_);
    return;
  }
}

void Run::exit_thread(Worker& w) {
  if (seq_ == nullptr) return;
  const std::optional<SeqNo> sn = seq_->stop(w.id);
  if (!sn) return;
  const std::uint64_t waited = gate_.wait(*sn, wait_context(w));
  append(*sn, w.id, std::string(kStopLabel), CommitMode::internal_stop, 1, waited);
  std::atomic_thread_fence(std::memory_order_release);
  heap_.clock().store(*sn, std::memory_order_release);
}

RunResult Run::execute(ProgramSet programs) {
  if (!programs.initial_cells.empty()) {
    if (programs.initial_cells.size() != heap_.size()) {
      throw std::invalid_argument("initial cells do not match the heap size");
    }
    for (std::size_t i = 0; i < heap_.size(); ++i) heap_.store(i, programs.initial_cells[i]);
  }

  std::vector<ThreadId> ids;
  if (seq_) {
    const ThreadId main = seq_->register_main();
    for (std::size_t k = 0; k < programs.threads.size(); ++k) {
      ids.push_back(seq_->spawn(main, std::nullopt));
    }
    seq_->detach_main();
  } else {
    for (std::size_t k = 0; k < programs.threads.size(); ++k) {
      ids.emplace_back(next_tl2_id_.fetch_add(1, std::memory_order_relaxed));
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t k = 0; k < ids.size(); ++k) launch(ids[k], std::move(programs.threads[k]));

  RunResult result;
  {
    std::unique_lock lock(mu_);
    if (!cv_.wait_until(lock, t0 + cfg_.watchdog, [&] { return live_ == 0; })) {
      result.timed_out = true;
      cancel_.store(true, std::memory_order_relaxed);
      cv_.wait(lock, [&] { return live_ == 0; });
    }
  }
  for (auto& th : threads_) th.join();
  const auto t1 = std::chrono::steady_clock::now();
  if (error_) std::rethrow_exception(error_);

  result.stats = stats_;
  result.stats.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
  result.stats.max_concurrent_fast = monitor_.peak();
  result.cells = heap_.snapshot_cells();

  result.physical_sns.reserve(log_.size());
  for (const auto& r : log_) result.physical_sns.push_back(r.sn);
  if (is_ordered(cfg_.system)) {
    for (const auto& r : log_) {
      if (r.mode != CommitMode::internal_stop) result.labels.push_back(r.label);
    }
  }
  std::stable_sort(log_.begin(), log_.end(),
                   [](const CommitRecord& a, const CommitRecord& b) { return a.sn < b.sn; });
  if (!is_ordered(cfg_.system)) {
    for (const auto& r : log_) result.labels.push_back(r.label);
  }
  result.log = std::move(log_);
  result.digest = run_digest(result.cells, result.labels);
  return result;
}

}  // namespace

RunResult run_programs(ProgramSet programs, const RunConfig& cfg) {
  if (programs.n_cells == 0) throw std::invalid_argument("program set needs at least one cell");
  Run run(cfg, programs.n_cells);
  return run.execute(std::move(programs));
}

}  // namespace pot
