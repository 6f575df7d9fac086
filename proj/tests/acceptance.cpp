// Acceptance gate: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pot/bench.hpp"
#include "pot/digest.hpp"
#include "pot/oracle.hpp"
#include "programs.hpp"
#include "tl2_explorer.hpp"

namespace {

using namespace pot;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
  void require(bool ok, const std::string& why) {
    if (!ok) fail(why);
  }
};

// Observations shared between criteria that judge the same runs.
struct Ledger {
  std::uint32_t max_fast = 0;
  std::uint64_t runs = 0;
  std::uint64_t timeouts = 0;
  std::uint64_t unordered = 0;
  std::string first_unordered;

  void note(const DeterminismResult& r, std::uint32_t n_runs, const std::string& what) {
    max_fast = std::max(max_fast, r.max_concurrent_fast);
    runs += n_runs;
    if (r.timed_out) ++timeouts;
    if (!r.ordered_commits) {
      if (unordered++ == 0) first_unordered = what;
    }
  }
  void note(const RunResult& r, System s, const std::string& what) {
    max_fast = std::max(max_fast, r.stats.max_concurrent_fast);
    ++runs;
    if (r.timed_out) ++timeouts;
    if (is_ordered(s) && !consecutive_from_one(r.physical_sns)) {
      if (unordered++ == 0) first_unordered = what;
    }
  }
};

constexpr WorkloadKind kKinds[] = {WorkloadKind::kv, WorkloadKind::bank, WorkloadKind::mixgen};
constexpr std::uint32_t kThreads[] = {1, 2, 4, 8};
constexpr std::uint64_t kSeeds[] = {1, 2, 3};

WorkloadSpec grid_spec(WorkloadKind kind, std::uint32_t threads, std::uint64_t seed) {
  WorkloadSpec s;
  s.kind = kind;
  s.n_threads = threads;
  s.txns_per_thread = 60;
  s.n_cells = kind == WorkloadKind::bank ? 12 : 32;
  s.accesses_per_txn = 4;
  s.read_fraction = kind == WorkloadKind::bank ? 0.25 : 0.5;
  s.conflict_knob = 4;
  s.seed = seed;
  return s;
}

std::string describe(const WorkloadSpec& s, System sys) {
  std::ostringstream o;
  o << to_string(sys) << "/" << to_string(s.kind) << "/t" << s.n_threads << "/s" << s.seed;
  return o.str();
}

// Criteria run in dependency order; lines are printed by number at the end.
std::map<int, std::string> g_lines;

void report(int n, const std::string& name, const Verdict& v, double secs, bool& all) {
  char head[128];
  std::snprintf(head, sizeof head, "criterion %d %-28s %s (%.1fs)", n, name.c_str(),
                v.pass ? "PASS" : "FAIL", secs);
  g_lines[n] = std::string(head) + (v.detail.empty() ? "" : ": " + v.detail);
  std::fprintf(stderr, "%s\n", g_lines[n].c_str());
  all = all && v.pass;
}

// 1 and 2: jittered Pot runs agree with each other and the oracle; every
// ordered system matches the oracle digest.
void determinism_and_equivalence(Ledger& ledger, bool& all) {
  Verdict det, eq;
  const auto t0 = Clock::now();
  for (WorkloadKind kind : kKinds) {
    for (std::uint32_t threads : kThreads) {
      for (std::uint64_t seed : kSeeds) {
        const WorkloadSpec spec = grid_spec(kind, threads, seed);
        const auto r = check_determinism(spec, System::pot, 20, seed * 1000);
        ledger.note(r, 20, describe(spec, System::pot));
        det.require(r.pass, describe(spec, System::pot) + ": " + r.detail);
        eq.require(r.pass, describe(spec, System::pot) + ": " + r.detail);
      }
    }
  }
  const double det_secs = seconds_since(t0);
  det.require(det_secs < 120, "took " + std::to_string(det_secs) + "s");
  report(1, "determinism", det, det_secs, all);

  const auto t1 = Clock::now();
  for (WorkloadKind kind : kKinds) {
    for (std::uint32_t threads : kThreads) {
      for (std::uint64_t seed : kSeeds) {
        const WorkloadSpec spec = grid_spec(kind, threads, seed);
        for (System sys : {System::pot_minus, System::pot_star, System::pogl}) {
          const auto r = check_determinism(spec, sys, 2, seed * 7919);
          ledger.note(r, 2, describe(spec, sys));
          eq.require(r.pass, describe(spec, sys) + ": " + r.detail);
        }
      }
    }
  }
  report(2, "oracle equivalence", eq, seconds_since(t1) + det_secs, all);
}

// 3: the worked spawn and skip examples under every ordered system.
void worked_examples(Ledger& ledger, bool& all) {
  Verdict v;
  const auto t0 = Clock::now();
  const std::vector<std::string> spawn_order{"a", "d", "b", "e", "g", "c", "f", "h"};
  const std::vector<std::string> skip_order{"a", "d", "b", "e", "f"};
  v.require(oracle_run(testing::spawn_scenario()).labels == spawn_order, "oracle spawn order");
  v.require(oracle_run(testing::skip_scenario()).labels == skip_order, "oracle skip order");
  for (System sys : testing::ordered_systems()) {
    for (std::uint64_t jitter = 1; jitter <= 10; ++jitter) {
      RunConfig cfg;
      cfg.system = sys;
      cfg.jitter_seed = jitter;
      const RunResult spawn = run_programs(testing::spawn_scenario(), cfg);
      const RunResult skip = run_programs(testing::skip_scenario(), cfg);
      ledger.note(spawn, sys, "spawn scenario");
      ledger.note(skip, sys, "skip scenario");
      v.require(spawn.labels == spawn_order,
                std::string("spawn order under ") + std::string(to_string(sys)));
      v.require(skip.labels == skip_order,
                std::string("skip order under ") + std::string(to_string(sys)));
    }
  }
  report(3, "sequencer worked examples", v, seconds_since(t0), all);
}

// 6: bank audits never see a broken total; every committed state conserves it.
void opacity_proxy(Ledger& ledger, bool& all) {
  Verdict v;
  const auto t0 = Clock::now();
  WorkloadSpec spec;
  spec.kind = WorkloadKind::bank;
  spec.n_threads = 8;
  spec.txns_per_thread = 12500;  // 10^5 transactions
  spec.n_cells = 16;
  spec.accesses_per_txn = 4;
  spec.read_fraction = 0.2;
  spec.seed = 6;
  std::ostringstream detail;
  for (System sys : {System::tl2, System::pot}) {
    RunRequest req{spec, {}};
    req.config.system = sys;
    req.config.jitter_seed = 6;
    req.config.keep_log = false;
    const RunOutcome out = run_workload(req);
    ledger.note(out.result, sys, describe(spec, sys));
    v.require(!out.result.timed_out, describe(spec, sys) + " hit the watchdog");
    v.require(out.result.stats.commits == 100000, describe(spec, sys) + " commit count");
    v.require(out.audits > 0, describe(spec, sys) + " ran no audits");
    v.require(out.snapshot_violations == 0,
              describe(spec, sys) + " snapshot violations " +
                  std::to_string(out.snapshot_violations));
    v.require(out.conservation_ok, describe(spec, sys) + " broke conservation");
    detail << to_string(sys) << " audits=" << out.audits
           << " aborts=" << out.result.stats.validation_aborts << " ";
  }
  if (v.pass) v.detail = detail.str();
  report(6, "opacity proxy", v, seconds_since(t0), all);
}

// 7 (part): runs with threads exiting mid-program, spawns, and aborts.
void exit_runs(Ledger& ledger, Verdict& v) {
  for (WorkloadKind kind : kKinds) {
    for (std::uint64_t seed : kSeeds) {
      WorkloadSpec spec = grid_spec(kind, 4, seed);
      spec.exits = {{1, 3}, {3, 0}, {4, 17}};
      spec.spawns = {{2, 5, 6}, {4, 2, 9}};
      spec.aborts = {{2, 7, AbortPolicy::no_retry}, {4, 4, AbortPolicy::retry}};
      const OracleResult oracle = oracle_for(spec);
      for (System sys : {System::tl2, System::pot, System::pot_minus, System::pot_star,
                         System::pogl}) {
        RunRequest req{spec, {}};
        req.config.system = sys;
        req.config.jitter_seed = seed + 40;
        const RunResult r = run_workload(req).result;
        ledger.note(r, sys, describe(spec, sys) + " with exits");
        v.require(!r.timed_out, describe(spec, sys) + " with exits hit the watchdog");
        if (is_ordered(sys)) {
          v.require(r.digest == oracle.digest, describe(spec, sys) + " with exits != oracle");
        }
      }
    }
  }
}

// 4: ordered commits everywhere, and the checker catches a disabled gate.
void ordered_commits(const Ledger& ledger, bool& all) {
  Verdict v;
  const auto t0 = Clock::now();
  v.require(ledger.unordered == 0, "out-of-order commits in " + ledger.first_unordered);
  RunConfig broken;
  broken.gate.disabled = true;
  broken.watchdog = std::chrono::seconds(2);  // readers may livelock without the gate
  WorkloadSpec spec = grid_spec(WorkloadKind::kv, 4, 1);
  spec.n_cells = 8;
  spec.txns_per_thread = 200;
  const auto mutant = check_determinism(spec, System::pot, 5, 1, broken);
  v.require(!mutant.ordered_commits, "gate-disabled mutation still committed in order");
  v.require(!mutant.pass, "gate-disabled mutation passed the determinism check");
  if (v.pass) {
    v.detail = std::to_string(ledger.runs) + " runs checked; gate-disabled mutation: " +
               mutant.detail;
  }
  report(4, "ordered commits", v, seconds_since(t0), all);
}

// 5: single-thread fast-mode Pot vs TL2 trend.
void microbench_trend(bool& all) {
  Verdict v;
  const auto t0 = Clock::now();
  MicrobenchConfig cfg;
  cfg.txns = 200000;
  cfg.repetitions = 9;
  std::ostringstream rows;
  auto ratio = [&](std::uint32_t accesses, double reads) {
    const MicrobenchRow r = microbench(accesses, reads, cfg);
    rows << " " << accesses << "@" << reads << "=" << r.ratio;
    return r.ratio;
  };
  const double zero = ratio(0, 0);
  v.require(zero >= 0.8 && zero <= 1.3, "ratio(0 accesses) = " + std::to_string(zero));
  const double one_write = ratio(1, 0);
  const double many_writes = ratio(64, 0);
  v.require(many_writes >= 2.0, "ratio(64 writes) = " + std::to_string(many_writes));
  v.require(many_writes >= one_write, "ratio(64 writes) < ratio(1 write)");
  for (std::uint32_t a : {1, 2, 4, 8, 16, 32, 64}) {
    const double r = ratio(a, 1.0);
    v.require(r >= 0.7 && r <= 2.0,
              "ratio(" + std::to_string(a) + " reads) = " + std::to_string(r));
  }
  const double secs = seconds_since(t0);
  v.require(secs < 60, "took " + std::to_string(secs) + "s");
  v.detail = (v.pass ? "" : v.detail + ";") + rows.str();
  report(5, "microbench trend", v, secs, all);
}

// 8: TL2 recording replayed by Pot; a truncated order produces a hang report.
void record_replay(Ledger& ledger, bool& all) {
  Verdict v;
  const auto t0 = Clock::now();
  for (WorkloadKind kind : kKinds) {
    for (std::uint64_t seed : kSeeds) {
      const WorkloadSpec spec = grid_spec(kind, 4, seed);
      const Recording rec = record_run(spec, seed);
      for (std::uint64_t jitter : {seed, seed + 100}) {
        const RunResult rep = replay_run(spec, rec.order, jitter);
        ledger.note(rep, System::pot, describe(spec, System::pot) + " replay");
        v.require(!rep.timed_out && rep.digest == rec.digest,
                  describe(spec, System::pot) + " replay digest differs");
        v.require(rep.labels == rec.result.labels,
                  describe(spec, System::pot) + " replay labels differ");
      }
      ReplayOrder truncated = rec.order;
      truncated.entries.resize(truncated.entries.size() / 2);
      truncated.hang_timeout = std::chrono::milliseconds(500);
      const auto h0 = Clock::now();
      bool hung = false;
      try {
        replay_run(spec, truncated, seed);
      } catch (const HangReport&) {
        hung = true;
      }
      const double waited = seconds_since(h0);
      v.require(hung, describe(spec, System::pot) + " truncated replay did not report a hang");
      v.require(waited < 0.5 + 2.0, describe(spec, System::pot) + " hang report took " +
                                        std::to_string(waited) + "s");
    }
  }
  report(8, "record/replay", v, seconds_since(t0), all);
}

// 9: exhaustive TL2 interleavings of small scripts against serial permutations.
void tl2_serializability(bool& all) {
  using testing::ExploreScenario;
  Verdict v;
  const auto t0 = Clock::now();
  std::uint64_t scenarios = 0, terminals = 0;
  auto check = [&](const ExploreScenario& sc, const std::string& name) {
    const auto st = testing::explore(sc);
    ++scenarios;
    terminals += st.terminals;
    v.require(st.terminals > 0, name + " reached no terminal state");
    v.require(st.failures == 0, name + ": " + st.first_failure);
    v.require(st.lock_leaks == 0, name + " leaked locks");
    v.require(st.key_order_mismatches == 0, name + " serialization key order mismatch");
  };
  const std::vector<ExploreScenario> hand = {
      {{{{{true, 0}, {false, 1}}}, {{{true, 1}, {false, 0}}}}, 2},
      {{{{{true, 0}, {false, 0}}}, {{{true, 0}, {false, 0}}}, {{{true, 0}, {false, 0}}}}, 1},
      {{{{{true, 0}, {false, 1}}}, {{{true, 1}, {false, 2}}}, {{{true, 2}, {false, 0}}}}, 3},
      {{{{{true, 0}, {false, 1}}, {{true, 1}, {false, 2}}},
        {{{false, 0}}, {{true, 2}, {true, 0}}}},
       4},
      // The full bound: 3 threads x 3 transactions over 4 cells.
      {{{{{true, 0}}, {{false, 1}}, {{true, 2}}},
        {{{false, 0}}, {{true, 1}}, {{false, 3}}},
        {{{true, 3}}, {{false, 2}}, {{false, 0}}}},
       4},
  };
  for (std::size_t k = 0; k < hand.size(); ++k) check(hand[k], "hand-picked " + std::to_string(k));
  ExploreScenario striped = hand[2];
  striped.stripes = StripeConfig::striped(2, 1);
  check(striped, "hand-picked striped");

  // Random scripts inside the bound, limited to what exhaustive search
  // finishes quickly: at most 7 transactions and 12 operations in total.
  std::mt19937_64 rng(2718);
  int random = 0;
  while (random < 60) {
    const ExploreScenario sc = testing::random_scenario(rng);
    std::size_t txns = 0, ops = 0;
    for (const auto& t : sc.threads) {
      txns += t.size();
      for (const auto& tx : t) ops += tx.size();
    }
    if (txns > 7 || ops > 12) continue;
    check(sc, "random " + std::to_string(random++));
  }
  ExploreScenario mutant = hand[0];
  mutant.skip_validation = true;
  v.require(testing::explore(mutant).failures > 0, "explorer missed a skipped validation");
  if (v.pass) {
    v.detail = std::to_string(scenarios) + " scenarios, " + std::to_string(terminals) +
               " terminal interleavings";
  }
  report(9, "tl2 serializability", v, seconds_since(t0), all);
}

}  // namespace

int main() {
  bool all = true;
  Ledger ledger;
  determinism_and_equivalence(ledger, all);
  worked_examples(ledger, all);

  Verdict live;
  const auto t7 = Clock::now();
  exit_runs(ledger, live);

  record_replay(ledger, all);
  opacity_proxy(ledger, all);
  ordered_commits(ledger, all);
  microbench_trend(all);

  live.require(ledger.max_fast == 1,
               "max concurrent fast = " + std::to_string(ledger.max_fast));
  live.require(ledger.timeouts == 0, std::to_string(ledger.timeouts) + " runs hit the watchdog");
  if (live.pass) live.detail = std::to_string(ledger.runs) + " runs, max concurrent fast = 1";
  report(7, "single fast + liveness", live, seconds_since(t7), all);

  tl2_serializability(all);
  for (const auto& [n, line] : g_lines) std::printf("%s\n", line.c_str());
  std::printf("acceptance: %s\n", all ? "PASS" : "FAIL");
  return all ? 0 : 1;
}
