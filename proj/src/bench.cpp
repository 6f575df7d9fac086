#include "pot/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "pot/digest.hpp"
#include "pot/pot.hpp"
#include "pot/tl2.hpp"

namespace pot {

void BenchReport::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void BenchReport::set(const std::string& key, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", value);
  set(key, std::string(buf));
}

void BenchReport::add_stats(const std::string& prefix, const RunStats& s) {
  set(prefix + ".commits", s.commits);
  set(prefix + ".aborts.validation", s.validation_aborts);
  set(prefix + ".aborts.gate", s.gate_aborts);
  set(prefix + ".aborts.explicit", s.explicit_aborts);
  set(prefix + ".promotions", s.promotions);
  set(prefix + ".wait_cycles.mean", s.mean_wait_cycles());
  set(prefix + ".wait_cycles.max", s.wait_cycles_max);
  set(prefix + ".max_concurrent_fast", static_cast<std::uint64_t>(s.max_concurrent_fast));
  set(prefix + ".wall_seconds", s.wall_seconds);
}

std::optional<std::string> BenchReport::get(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

void BenchReport::write(std::ostream& out) const {
  for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
}

RunOutcome run_workload(const RunRequest& req) {
  auto probe = std::make_shared<WorkloadProbe>();
  RunOutcome out;
  out.result = run_programs(make_programs(req.workload, probe), req.config);
  out.audits = probe->audits.load();
  out.snapshot_violations = probe->snapshot_violations.load();
  if (req.workload.kind == WorkloadKind::bank && !out.result.timed_out) {
    const Word sum = std::accumulate(out.result.cells.begin(), out.result.cells.end(), Word{0});
    out.conservation_ok = sum == bank_total(req.workload);
  }
  return out;
}

OracleResult oracle_for(const WorkloadSpec& spec) { return oracle_run(make_programs(spec)); }

DeterminismResult check_determinism(const WorkloadSpec& spec, System system, std::uint32_t runs,
                                    std::uint64_t jitter_base, const RunConfig& base) {
  DeterminismResult out;
  const OracleResult oracle = oracle_for(spec);
  out.oracle_digest = oracle.digest;
  out.pass = true;
  auto note = [&out](const std::string& msg) {
    if (out.detail.empty()) out.detail = msg;
  };
  for (std::uint32_t r = 0; r < runs; ++r) {
    RunRequest req{spec, base};
    req.config.system = system;
    req.config.jitter_seed = jitter_base + r;
    const RunOutcome run = run_workload(req);
    const RunResult& res = run.result;
    out.digests.push_back(res.digest);
    out.max_concurrent_fast = std::max(out.max_concurrent_fast, res.stats.max_concurrent_fast);
    // A partial log from a timed-out run still shows whether commits were ordered.
    if (is_ordered(system) && !consecutive_from_one(res.physical_sns)) {
      out.ordered_commits = false;
      out.pass = false;
      note("run " + std::to_string(r) + " committed out of order");
    }
    if (res.timed_out) {
      out.timed_out = true;
      out.pass = false;
      note("run " + std::to_string(r) + " hit the watchdog");
      continue;
    }
    if (res.labels != oracle.labels && out.first_divergence == 0) {
      const std::size_t n = std::min(res.labels.size(), oracle.labels.size());
      std::size_t k = 0;
      while (k < n && res.labels[k] == oracle.labels[k]) ++k;
      out.first_divergence = k + 1;
    }
    if (res.digest != oracle.digest || res.labels != oracle.labels) {
      out.pass = false;
      std::string msg = "run " + std::to_string(r) + " digest " + hex_digest(res.digest) +
                        " differs from oracle " + hex_digest(oracle.digest);
      if (out.first_divergence != 0) {
        msg += "; labels diverge at position " + std::to_string(out.first_divergence);
      }
      note(msg);
    }
  }
  return out;
}

namespace {

// Accesses for a window of transactions, reused cyclically so the plan stays
// cache resident and does not dominate the timing.
struct AccessPlan {
  std::uint32_t window = 0;
  std::uint32_t accesses = 0;
  std::vector<CellIndex> cells;
  std::vector<std::uint8_t> reads;

  std::size_t offset(std::size_t txn) const noexcept { return (txn % window) * accesses; }
};

constexpr std::uint32_t kPlanWindow = 256;

AccessPlan make_plan(std::uint32_t txns, std::uint32_t accesses, double read_fraction,
                     std::size_t n_cells) {
  AccessPlan p;
  p.window = std::min(txns, kPlanWindow);
  p.accesses = accesses;
  const std::size_t total = static_cast<std::size_t>(p.window) * accesses;
  p.cells.resize(total);
  p.reads.resize(total);
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<CellIndex> cell(0, n_cells - 1);
  std::bernoulli_distribution read(read_fraction);
  for (std::size_t k = 0; k < total; ++k) {
    p.cells[k] = cell(rng);
    p.reads[k] = read(rng) ? 1 : 0;
  }
  return p;
}

volatile Word g_sink = 0;

double time_tl2(const AccessPlan& plan, std::uint32_t txns, std::uint32_t accesses,
                std::size_t n_cells) {
  VersionedHeap h(n_cells);
  Tl2Txn t;
  Word acc = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t k = 0; k < txns; ++k) {
    t.begin(h);
    for (std::size_t a = 0, pos = plan.offset(k); a < accesses; ++a, ++pos) {
      if (plan.reads[pos]) {
        acc += *t.read(h, plan.cells[pos]);
      } else {
        t.write(plan.cells[pos], acc + a);
      }
    }
    acc += *t.commit(h);
  }
  const auto t1 = std::chrono::steady_clock::now();
  g_sink = acc;
  return std::chrono::duration<double, std::nano>(t1 - t0).count() / txns;
}

double time_pot(const AccessPlan& plan, std::uint32_t txns, std::uint32_t accesses,
                std::size_t n_cells) {
  VersionedHeap h(n_cells);
  Sequencer seq;
  const ThreadId main = seq.register_main();
  const ThreadId tid = seq.spawn(main, std::nullopt);
  seq.detach_main();
  PotTxn t(Promotion::live);
  Word acc = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t k = 0; k < txns; ++k) {
    t.assign(seq.get_seq_no(tid));
    t.begin(h);
    for (std::size_t a = 0, pos = plan.offset(k); a < accesses; ++a, ++pos) {
      if (plan.reads[pos]) {
        acc += *t.read(h, plan.cells[pos]);
      } else {
        t.write(h, plan.cells[pos], acc + a);
      }
    }
    t.finish_at_gate(h);
    t.publish(h);
  }
  const auto t1 = std::chrono::steady_clock::now();
  g_sink = acc + t.write_version();
  return std::chrono::duration<double, std::nano>(t1 - t0).count() / txns;
}

// Drives the same plan through the runtime's transaction API.
class PlanProgram final : public ThreadProgram {
 public:
  PlanProgram(const AccessPlan& plan, std::uint32_t txns, double& ns_per_txn)
      : plan_(plan), txns_(txns), ns_per_txn_(ns_per_txn) {}

  std::optional<std::string> next_label() override {
    if (done_ == 0) t0_ = std::chrono::steady_clock::now();
    if (done_ < txns_) return std::string("m");
    const auto t1 = std::chrono::steady_clock::now();
    ns_per_txn_ = std::chrono::duration<double, std::nano>(t1 - t0_).count() / txns_;
    g_sink = acc_;
    return std::nullopt;
  }

  void body(Transaction& tx) override {
    Word acc = acc_;
    for (std::size_t a = 0, pos = plan_.offset(done_); a < plan_.accesses; ++a, ++pos) {
      if (plan_.reads[pos]) {
        acc += tx.read(plan_.cells[pos]);
      } else {
        tx.write(plan_.cells[pos], acc + a);
      }
    }
    pending_ = acc;
  }

  void on_commit() override {
    acc_ = pending_;
    ++done_;
  }

 private:
  const AccessPlan& plan_;
  std::uint32_t txns_;
  double& ns_per_txn_;
  std::uint32_t done_ = 0;
  Word acc_ = 0;
  Word pending_ = 0;
  std::chrono::steady_clock::time_point t0_;
};

double time_runtime(System system, const AccessPlan& plan, std::uint32_t txns,
                    std::size_t n_cells) {
  double ns = 0;
  ProgramSet ps;
  ps.n_cells = n_cells;
  ps.threads.push_back(std::make_unique<PlanProgram>(plan, txns, ns));
  RunConfig cfg;
  cfg.system = system;
  cfg.keep_log = false;
  cfg.track_fast_mode = false;
  run_programs(std::move(ps), cfg);
  return ns;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

MicrobenchRow microbench(std::uint32_t accesses, double read_fraction,
                         const MicrobenchConfig& cfg) {
  if (cfg.txns == 0 || cfg.n_cells == 0) {
    throw std::invalid_argument("microbench needs transactions and cells");
  }
  const AccessPlan plan = make_plan(cfg.txns, accesses, read_fraction, cfg.n_cells);
  auto once = [&](System s) {
    if (cfg.level == MicrobenchConfig::Level::runtime) {
      return time_runtime(s, plan, cfg.txns, cfg.n_cells);
    }
    return s == System::tl2 ? time_tl2(plan, cfg.txns, accesses, cfg.n_cells)
                            : time_pot(plan, cfg.txns, accesses, cfg.n_cells);
  };
  once(System::tl2);
  once(System::pot);
  std::vector<double> tl2, pot;
  for (std::uint32_t r = 0; r < std::max<std::uint32_t>(1, cfg.repetitions); ++r) {
    tl2.push_back(once(System::tl2));
    pot.push_back(once(System::pot));
  }
  MicrobenchRow row;
  row.accesses = accesses;
  row.read_fraction = read_fraction;
  row.tl2_ns_per_txn = median(tl2);
  row.pot_ns_per_txn = median(pot);
  row.ratio = row.tl2_ns_per_txn / row.pot_ns_per_txn;
  return row;
}

Recording record_run(const WorkloadSpec& spec, std::optional<std::uint64_t> jitter_seed) {
  if (!spec.spawns.empty()) {
    throw std::invalid_argument("record/replay does not support spawn scripts");
  }
  RunRequest req{spec, {}};
  req.config.system = System::tl2;
  req.config.jitter_seed = jitter_seed;
  Recording rec;
  rec.result = run_workload(req).result;
  rec.order = replay_order_from(rec.result.log);
  rec.digest = rec.result.digest;
  return rec;
}

RunResult replay_run(const WorkloadSpec& spec, const ReplayOrder& order,
                     std::optional<std::uint64_t> jitter_seed) {
  RunRequest req{spec, {}};
  req.config.system = System::pot;
  req.config.jitter_seed = jitter_seed;
  req.config.replay = order;
  return run_workload(req).result;
}

}  // namespace pot
