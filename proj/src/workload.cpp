#include "pot/workload.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace pot {

std::string_view to_string(WorkloadKind k) noexcept {
  switch (k) {
    case WorkloadKind::kv: return "kv";
    case WorkloadKind::bank: return "bank";
    case WorkloadKind::mixgen: return "mixgen";
  }
  return "?";
}

std::optional<WorkloadKind> parse_workload(std::string_view name) noexcept {
  for (WorkloadKind k : {WorkloadKind::kv, WorkloadKind::bank, WorkloadKind::mixgen}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) noexcept {
  std::uint64_t z = seed ^ (salt * 0x9e3779b97f4a7c15ULL);
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Word bank_total(const WorkloadSpec& spec) noexcept {
  return static_cast<Word>(spec.n_cells) * kBankInitialBalance;
}

namespace {

std::uint64_t name_hash(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class WorkloadProgram final : public ThreadProgram {
 public:
  WorkloadProgram(std::shared_ptr<const WorkloadSpec> spec, std::shared_ptr<WorkloadProbe> probe,
                  std::string name, std::uint32_t script_thread, std::uint32_t n_txns)
      : spec_(std::move(spec)),
        probe_(std::move(probe)),
        name_(std::move(name)),
        script_thread_(script_thread),
        n_txns_(n_txns),
        thread_seed_(derive_seed(spec_->seed, name_hash(name_))) {}

  std::optional<std::string> next_label() override {
    if (done_ >= n_txns_) return std::nullopt;
    return name_ + "." + std::to_string(done_ + 1);
  }

  void body(Transaction& tx) override {
    const std::uint32_t txn = done_ + 1;
    const std::uint64_t seed = derive_seed(thread_seed_, txn);
    switch (spec_->kind) {
      case WorkloadKind::kv: kv(tx, seed); break;
      case WorkloadKind::bank: bank(tx, seed); break;
      case WorkloadKind::mixgen: mixgen(tx, seed); break;
    }
    if (script_thread_ == 0) return;
    for (const auto& s : spec_->spawns) {
      if (s.thread == script_thread_ && s.txn == txn) {
        tx.spawn(std::make_unique<WorkloadProgram>(spec_, probe_,
                                                   name_ + "s" + std::to_string(txn), 0,
                                                   s.child_txns));
      }
    }
    for (const auto& a : spec_->aborts) {
      if (a.thread != script_thread_ || a.txn != txn) continue;
      if (a.policy == AbortPolicy::no_retry || tx.attempt() == 1) tx.abort(a.policy);
    }
  }

  void on_commit() override { ++done_; }

 private:
  bool roll_read(std::minstd_rand& rng) const {
    return static_cast<double>(rng() % 1000) < spec_->read_fraction * 1000.0;
  }

  void kv(Transaction& tx, std::uint64_t seed) const {
    std::minstd_rand rng(static_cast<std::uint32_t>(seed % 2147483646) + 1);
    Word acc = 0;
    for (std::uint32_t op = 0; op < spec_->accesses_per_txn; ++op) {
      const CellIndex cell = rng() % spec_->n_cells;
      if (roll_read(rng)) {
        acc += tx.read(cell);
      } else if (op % 2 == 1) {
        tx.write(cell, tx.read(cell) + 1);
      } else {
        tx.write(cell, derive_seed(seed ^ acc, op) & 0xffff);
      }
    }
  }

  void bank(Transaction& tx, std::uint64_t seed) const {
    std::minstd_rand rng(static_cast<std::uint32_t>(seed % 2147483646) + 1);
    const std::size_t n = spec_->n_cells;
    if (roll_read(rng)) {
      Word sum = 0;
      for (CellIndex i = 0; i < n; ++i) sum += tx.read(i);
      if (probe_) {
        probe_->audits.fetch_add(1, std::memory_order_relaxed);
        if (sum != bank_total(*spec_)) {
          probe_->snapshot_violations.fetch_add(1, std::memory_order_relaxed);
        }
      }
      return;
    }
    for (std::uint32_t k = 0; k < std::max<std::uint32_t>(1, spec_->accesses_per_txn / 2); ++k) {
      const CellIndex from = rng() % n;
      const CellIndex to = (from + 1 + rng() % (n - 1)) % n;
      const Word amount = rng() % 100;
      const Word balance = tx.read(from);
      if (balance < amount) continue;
      const Word other = tx.read(to);
      tx.write(from, balance - amount);
      tx.write(to, other + amount);
    }
  }

  void mixgen(Transaction& tx, std::uint64_t seed) const {
    std::minstd_rand rng(static_cast<std::uint32_t>(seed % 2147483646) + 1);
    const std::size_t n = spec_->n_cells;
    const std::size_t hot = std::clamp<std::size_t>(spec_->conflict_knob, 1, n);
    Word acc = seed;
    for (std::uint32_t op = 0; op < spec_->accesses_per_txn; ++op) {
      const bool in_hot = hot == n || rng() % 2 == 0;
      const CellIndex cell = in_hot ? rng() % hot : hot + rng() % (n - hot);
      if (roll_read(rng)) {
        acc = acc * 31 + tx.read(cell);
      } else {
        tx.write(cell, tx.read(cell) * 6364136223846793005ULL + (acc | 1));
      }
    }
  }

  std::shared_ptr<const WorkloadSpec> spec_;
  std::shared_ptr<WorkloadProbe> probe_;
  std::string name_;
  std::uint32_t script_thread_;
  std::uint32_t n_txns_;
  std::uint64_t thread_seed_;
  std::uint32_t done_ = 0;
};

}  // namespace

ProgramSet make_programs(const WorkloadSpec& spec, std::shared_ptr<WorkloadProbe> probe) {
  if (spec.n_cells == 0) throw std::invalid_argument("workload needs at least one cell");
  if (spec.kind == WorkloadKind::bank && spec.n_cells < 2) {
    throw std::invalid_argument("bank workload needs at least two accounts");
  }
  if (spec.read_fraction < 0 || spec.read_fraction > 1) {
    throw std::invalid_argument("read fraction must lie in [0, 1]");
  }
  auto shared = std::make_shared<const WorkloadSpec>(spec);
  ProgramSet ps;
  ps.n_cells = spec.n_cells;
  if (spec.kind == WorkloadKind::bank) ps.initial_cells.assign(spec.n_cells, kBankInitialBalance);
  for (std::uint32_t k = 1; k <= spec.n_threads; ++k) {
    std::uint32_t n = spec.txns_per_thread;
    for (const auto& e : spec.exits) {
      if (e.thread == k) n = std::min(n, e.after_txns);
    }
    ps.threads.push_back(
        std::make_unique<WorkloadProgram>(shared, probe, "t" + std::to_string(k), k, n));
  }
  return ps;
}

std::unique_ptr<ScriptedProgram> ScriptedProgram::of(std::initializer_list<std::string> labels,
                                                     CellIndex cell) {
  std::vector<Step> steps;
  for (const auto& l : labels) steps.push_back({l, nullptr});
  return std::make_unique<ScriptedProgram>(std::move(steps), cell);
}

std::optional<std::string> ScriptedProgram::next_label() {
  if (next_ >= steps_.size()) return std::nullopt;
  return steps_[next_].label;
}

void ScriptedProgram::body(Transaction& tx) {
  const Step& step = steps_[next_];
  tx.write(cell_, tx.read(cell_) * 31 + name_hash(step.label) % 1000003);
  if (step.child) tx.spawn(std::make_unique<ScriptedProgram>(*step.child));
}

}  // namespace pot
