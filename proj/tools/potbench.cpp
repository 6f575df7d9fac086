// potbench: command-line front end for the deterministic STM harness.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "pot/bench.hpp"
#include "pot/digest.hpp"

namespace {

struct WorkloadFlags {
  std::string workload = "kv";
  std::uint32_t threads = 4;
  std::uint32_t txns = 200;
  std::size_t cells = 64;
  std::uint32_t accesses = 4;
  double read_fraction = 0.5;
  std::uint32_t conflict = 8;
  std::uint64_t seed = 1;

  void add_to(CLI::App& app) {
    app.add_option("--workload", workload, "kv | bank | mixgen")
        ->check(CLI::IsMember({"kv", "bank", "mixgen"}));
    app.add_option("--threads", threads, "Worker threads")->check(CLI::Range(1U, 1024U));
    app.add_option("--txns", txns, "Transactions per thread");
    app.add_option("--cells", cells, "Heap cells")->check(CLI::PositiveNumber);
    app.add_option("--accesses", accesses, "Accesses per transaction");
    app.add_option("--read-fraction", read_fraction, "Fraction of read accesses")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--conflict", conflict, "Hot-pool size (mixgen)");
    app.add_option("--seed", seed, "Workload seed");
  }

  pot::WorkloadSpec spec() const {
    pot::WorkloadSpec s;
    s.kind = *pot::parse_workload(workload);
    s.n_threads = threads;
    s.txns_per_thread = txns;
    s.n_cells = cells;
    s.accesses_per_txn = accesses;
    s.read_fraction = read_fraction;
    s.conflict_knob = conflict;
    s.seed = seed;
    return s;
  }
};

void add_workload_keys(pot::BenchReport& report, const WorkloadFlags& w) {
  report.set("workload", w.workload);
  report.set("threads", static_cast<std::uint64_t>(w.threads));
  report.set("txns_per_thread", static_cast<std::uint64_t>(w.txns));
  report.set("seed", w.seed);
}

void write_log_file(const std::string& path, const std::vector<pot::CommitRecord>& log) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  pot::write_commit_log(out, log);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic STM harness: preordered transactions vs. TL2"};
  app.require_subcommand(1);

  WorkloadFlags wl;
  std::string system = "pot";
  std::optional<std::uint64_t> jitter;
  std::string log_path;

  auto* run = app.add_subcommand("run", "Execute a workload once");
  wl.add_to(*run);
  run->add_option("--system", system, "tl2 | pot | pot-minus | pot-star | pogl")
      ->check(CLI::IsMember({"tl2", "pot", "pot-minus", "pot-star", "pogl"}));
  run->add_option("--jitter", jitter, "Schedule-perturbation seed");
  run->add_option("--log", log_path, "Commit log output file");

  std::uint32_t runs = 20;
  std::uint64_t jitter_base = 1;
  auto* det = app.add_subcommand("check-determinism", "Compare repeated jittered runs to the oracle");
  wl.add_to(*det);
  det->add_option("--system", system, "Ordered system to check")
      ->check(CLI::IsMember({"pot", "pot-minus", "pot-star", "pogl"}));
  det->add_option("--runs", runs, "Number of jittered runs")->check(CLI::Range(2U, 100000U));
  det->add_option("--jitter-base", jitter_base, "First jitter seed");

  std::string accesses_csv = "0,1,2,4,8,16,32,64";
  std::string fractions_csv = "0,0.5,1";
  pot::MicrobenchConfig mb;
  auto* micro = app.add_subcommand("microbench", "Single-thread fast-mode Pot vs TL2");
  micro->add_option("--accesses", accesses_csv, "Comma-separated access counts");
  micro->add_option("--read-fraction", fractions_csv, "Comma-separated read fractions");
  micro->add_option("--txns", mb.txns, "Transactions per timed repetition");
  micro->add_option("--reps", mb.repetitions, "Timed repetitions (median)");
  std::string level = "runtime";
  micro->add_option("--level", level, "runtime | protocol")
      ->check(CLI::IsMember({"runtime", "protocol"}));

  std::string order_path;
  auto* rec = app.add_subcommand("record", "Run TL2 and record its serialization order");
  wl.add_to(*rec);
  rec->add_option("--jitter", jitter, "Schedule-perturbation seed");
  rec->add_option("--order", order_path, "Replay order output file")->required();
  rec->add_option("--log", log_path, "Commit log output file");

  std::uint32_t hang_ms = 2000;
  auto* rep = app.add_subcommand("replay", "Run Pot following a recorded order");
  wl.add_to(*rep);
  rep->add_option("--jitter", jitter, "Schedule-perturbation seed");
  rep->add_option("--order", order_path, "Replay order file")->required();
  rep->add_option("--hang-timeout-ms", hang_ms, "Hang diagnostic timeout");
  rep->add_option("--log", log_path, "Commit log output file");

  CLI11_PARSE(app, argc, argv);

  pot::BenchReport report;
  try {
    if (*run) {
      const pot::System sys = *pot::parse_system(system);
      pot::RunRequest req{wl.spec(), {}};
      req.config.system = sys;
      req.config.jitter_seed = jitter;
      const pot::RunOutcome out = pot::run_workload(req);
      report.set("command", std::string("run"));
      report.set("system", system);
      add_workload_keys(report, wl);
      report.set("digest", pot::hex_digest(out.result.digest));
      report.add_stats(system, out.result.stats);
      bool ok = !out.result.timed_out && out.conservation_ok;
      if (pot::is_ordered(sys)) {
        const bool ordered = pot::consecutive_from_one(out.result.physical_sns);
        report.set_bool("check.ordered_commits", ordered);
        ok = ok && ordered;
      }
      if (wl.workload == "bank") {
        report.set("bank.audits", out.audits);
        report.set("bank.snapshot_violations", out.snapshot_violations);
        report.set_bool("check.conservation", out.conservation_ok);
      }
      report.set_bool("check.terminated", !out.result.timed_out);
      write_log_file(log_path, out.result.log);
      report.write(std::cout);
      return ok ? 0 : 1;
    }
    if (*det) {
      const auto res =
          pot::check_determinism(wl.spec(), *pot::parse_system(system), runs, jitter_base);
      report.set("command", std::string("check-determinism"));
      report.set("system", system);
      add_workload_keys(report, wl);
      report.set("runs", static_cast<std::uint64_t>(runs));
      report.set("oracle_digest", pot::hex_digest(res.oracle_digest));
      for (std::size_t k = 0; k < res.digests.size(); ++k) {
        report.set("digest." + std::to_string(k), pot::hex_digest(res.digests[k]));
      }
      report.set_bool("check.ordered_commits", res.ordered_commits);
      report.set("first_divergence", res.first_divergence);
      report.set("max_concurrent_fast", static_cast<std::uint64_t>(res.max_concurrent_fast));
      if (!res.detail.empty()) report.set("detail", res.detail);
      report.set_bool("check.determinism", res.pass);
      report.write(std::cout);
      return res.pass ? 0 : 1;
    }
    if (*micro) {
      mb.level = level == "protocol" ? pot::MicrobenchConfig::Level::protocol
                                     : pot::MicrobenchConfig::Level::runtime;
      report.set("command", std::string("microbench"));
      report.set("level", level);
      for (const auto& f : split_csv(fractions_csv)) {
        for (const auto& a : split_csv(accesses_csv)) {
          const auto row = pot::microbench(static_cast<std::uint32_t>(std::stoul(a)),
                                           std::stod(f), mb);
          const std::string key = "reads" + f + ".accesses" + a;
          report.set(key + ".tl2_ns", row.tl2_ns_per_txn);
          report.set(key + ".pot_ns", row.pot_ns_per_txn);
          report.set(key + ".ratio", row.ratio);
        }
      }
      report.write(std::cout);
      return 0;
    }
    if (*rec) {
      const pot::Recording r = pot::record_run(wl.spec(), jitter);
      std::ofstream out(order_path);
      if (!out) throw std::runtime_error("cannot write " + order_path);
      r.order.write(out);
      write_log_file(log_path, r.result.log);
      report.set("command", std::string("record"));
      add_workload_keys(report, wl);
      report.set("digest", pot::hex_digest(r.digest));
      report.set("transactions", static_cast<std::uint64_t>(r.order.entries.size()));
      report.add_stats("tl2", r.result.stats);
      report.write(std::cout);
      return 0;
    }
    if (*rep) {
      pot::ReplayOrder order = pot::ReplayOrder::load(order_path);
      order.hang_timeout = std::chrono::milliseconds(hang_ms);
      report.set("command", std::string("replay"));
      add_workload_keys(report, wl);
      try {
        const pot::RunResult r = pot::replay_run(wl.spec(), order, jitter);
        write_log_file(log_path, r.log);
        report.set("digest", pot::hex_digest(r.digest));
        report.add_stats("pot", r.stats);
        report.set_bool("check.replay", !r.timed_out);
        report.write(std::cout);
        return r.timed_out ? 1 : 0;
      } catch (const pot::HangReport& h) {
        report.set("hang", std::string(h.what()));
        report.set_bool("check.replay", false);
        report.write(std::cout);
        return 1;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "potbench: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
