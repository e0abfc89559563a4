#pragma once

#include <vector>

#include "rmaft/logging.hpp"
#include "rmaft/machine.hpp"
#include "rmaft/program.hpp"
#include "rmaft/workloads.hpp"

namespace probe {

struct InsertCounts {
  bool expected_collision = false;
  bool observed_collision = false;  // the first CAS found the slot taken
  std::size_t puts = 0;
  std::size_t gets = 0;
};

/// Runs the inserts one after another, in generation order, on a fresh
/// machine and reads the log statistics around each one.
inline std::vector<InsertCounts> kvstore_counts(std::size_t processes, std::size_t cells,
                                                const rmaft::Workload& w) {
  using namespace rmaft;
  Machine m(MachineConfig{processes, cells, true});
  FtLog log(m, LoggingConfig{false, false});
  m.set_observer(&log);
  std::vector<InsertCounts> out;
  for (const auto& ins : w.inserts) {
    const auto& prog = w.programs[ins.process.index()];
    const auto before = log.stats();
    InsertCounts c;
    c.expected_collision = ins.collision;
    for (std::size_t i = ins.first_op; i < ins.end_op; ++i) {
      execute_op(m, ins.process, prog[i]);
      if (i == ins.first_op + 1) c.observed_collision = m.cell(ins.process, prog[ins.first_op].local_cell) != 0;
    }
    c.puts = log.stats().logged_puts - before.logged_puts;
    c.gets = log.stats().logged_gets - before.logged_gets;
    out.push_back(c);
  }
  return out;
}

}  // namespace probe
