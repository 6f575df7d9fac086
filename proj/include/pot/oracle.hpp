#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pot/runtime.hpp"

namespace pot {

struct OracleEvent {
  SeqNo sn;
  ThreadId thread;
  std::string label;  // "stop" for exits
  bool stop;
};

struct OracleResult {
  std::vector<Word> cells;
  std::vector<std::string> labels;  // application transactions only
  std::vector<OracleEvent> events;  // every sequenced event, in sn order
  std::uint64_t digest = 0;
};

/// Executes the programs one transaction at a time on a plain array, in the
/// order a fresh round-robin sequencer assigns. Shares only the sequencer's
/// order function and the programs with the concurrent systems.
OracleResult oracle_run(ProgramSet programs);

}  // namespace pot
