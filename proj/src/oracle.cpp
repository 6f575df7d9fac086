#include "pot/oracle.hpp"

#include <map>
#include <stdexcept>

#include "pot/digest.hpp"
#include "pot/sequencer.hpp"

namespace pot {

namespace {

class SerialTxn final : public Transaction {
 public:
  SerialTxn(std::vector<Word>& cells, ThreadId thread) : cells_(cells), thread_(thread) {}

  Word read(CellIndex i) override { return cells_.at(i); }
  void write(CellIndex i, Word v) override {
    Word& cell = cells_.at(i);
    undo_.emplace_back(i, cell);
    cell = v;
  }
  void spawn(std::unique_ptr<ThreadProgram> p) override { spawned.push_back(std::move(p)); }
  ThreadId thread() const override { return thread_; }
  std::uint32_t attempt() const override { return attempt_; }

  void begin() {
    ++attempt_;
    undo_.clear();
    spawned.clear();
  }
  void undo() {
    for (auto it = undo_.rbegin(); it != undo_.rend(); ++it) cells_[it->first] = it->second;
    undo_.clear();
    spawned.clear();
  }

  std::vector<std::unique_ptr<ThreadProgram>> spawned;

 private:
  std::vector<Word>& cells_;
  ThreadId thread_;
  std::uint32_t attempt_ = 0;
  std::vector<std::pair<CellIndex, Word>> undo_;
};

}  // namespace

OracleResult oracle_run(ProgramSet programs) {
  if (programs.n_cells == 0) throw std::invalid_argument("program set needs at least one cell");
  OracleResult out;
  out.cells = programs.initial_cells.empty() ? std::vector<Word>(programs.n_cells, 0)
                                             : programs.initial_cells;
  if (out.cells.size() != programs.n_cells) {
    throw std::invalid_argument("initial cells do not match the heap size");
  }

  Sequencer seq;
  std::map<std::uint32_t, std::unique_ptr<ThreadProgram>> threads;
  const ThreadId main = seq.register_main();
  for (auto& p : programs.threads) threads.emplace(seq.spawn(main, std::nullopt).value(), std::move(p));
  seq.detach_main();

  SeqNo expected = 1;
  for (std::uint64_t round = 1;; ++round) {
    const auto members = seq.round_members(round);
    if (members.empty()) break;
    for (ThreadId t : members) {
      ThreadProgram& prog = *threads.at(t.value());
      const auto label = prog.next_label();
      if (!label) {
        const auto sn = seq.stop(t);
        if (sn != expected) throw std::logic_error("oracle stop out of sequence");
        out.events.push_back({expected++, t, "stop", true});
        continue;
      }
      const SeqNo sn = seq.get_seq_no(t, *label);
      if (sn != expected) throw std::logic_error("oracle transaction out of sequence");
      SerialTxn tx(out.cells, t);
      for (;;) {
        tx.begin();
        try {
          prog.body(tx);
        } catch (const ExplicitAbort& a) {
          tx.undo();
          if (a.policy == AbortPolicy::retry) continue;
        }
        break;
      }
      for (auto& child : tx.spawned) threads.emplace(seq.spawn(t, sn).value(), std::move(child));
      prog.on_commit();
      out.labels.push_back(*label);
      out.events.push_back({expected++, t, *label, false});
    }
  }
  out.digest = run_digest(out.cells, out.labels);
  return out;
}

}  // namespace pot
