#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rmaft/program.hpp"
#include "rmaft/types.hpp"

namespace rmaft {

/// Rounds of puts and gets closed by a gsync. Access-deterministic by
/// construction: a source only writes the cells it owns (cell % N == src)
/// in the lower half of a window, never twice per round; gets read cells
/// nobody writes in that round and land in distinct upper-half cells.
struct RandomGsyncParams {
  std::size_t rounds = 3;
  std::size_t ops_per_round = 4;  // accesses per process per round
  double get_fraction = 0.3;
  double flush_prob = 0.3;        // chance of a flush after an access
  double combine_prob = 0.0;      // chance a put accumulates
  double blocking_prob = 0.1;
};

/// Critical sections: lock a random peer, put into it, unlock.
struct LockPutParams {
  std::size_t sessions = 4;
  std::size_t puts_per_session = 2;
  /// Any cell instead of the cells the source owns.
  bool shared_cells = false;
};

/// Distributed hash table inserts. Each process owns a volume laid out as
///   [0, S)        slot keys            [S, 2S)  slot next pointers
///   [2S, 3S)      slot tail pointers   3S       next free node
///   3S + 1 + 2i   node i key           3S + 2 + 2i  node i next
/// and uses its last four cells as scratch for fetched values.
struct KvStoreParams {
  std::size_t inserts = 8;  // per process
  std::uint64_t key_range = 1000;
  std::size_t slots = 16;
  std::size_t waits = 1;    // no-op steps between inserts
};

struct KvInsert {
  ProcessId process;
  ProcessId volume;
  std::uint64_t key = 0;
  bool collision = false;
  std::size_t first_op = 0;  // [first_op, end_op) in the process's program
  std::size_t end_op = 0;
};

struct Workload {
  std::vector<Program> programs;
  bool uses_gsync = false;
  bool uses_locks = false;
  bool has_combining = false;
  bool access_deterministic = true;
  std::vector<KvInsert> inserts;
};

Workload random_gsync_workload(std::size_t processes, std::size_t cells, const RandomGsyncParams& params,
                               std::uint64_t seed);
Workload lock_put_workload(std::size_t processes, std::size_t cells, const LockPutParams& params, std::uint64_t seed);
Workload kvstore_workload(std::size_t processes, std::size_t cells, const KvStoreParams& params, std::uint64_t seed);

/// Smallest window that can hold every insert of the workload.
std::size_t kvstore_min_cells(std::size_t processes, const KvStoreParams& params);

}  // namespace rmaft
