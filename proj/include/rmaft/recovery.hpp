#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rmaft/checkpoint.hpp"
#include "rmaft/logging.hpp"
#include "rmaft/machine.hpp"
#include "rmaft/types.hpp"

namespace rmaft {

enum class RecoveryScheme { Gsync, Locks };

struct RecoveryPlan {
  ProcessId failed;
  ProcessId replacement;
  std::vector<Action> put_logs;
  std::vector<Action> get_logs;
  bool fallback = false;
  std::string fallback_reason;
  std::vector<Determinant> replay_trace;
};

/// Replay order for gsync codes: strata of equal GNC in ascending order;
/// inside a stratum repeatedly the puts with the smallest EC, then the gets
/// with the smallest GC. Ties go to the lower peer id, then issue order.
std::vector<Action> order_gsync_replay(std::span<const Action> puts, std::span<const Action> gets);
/// Replay order for lock codes: SC strata ascending, EC ascending inside.
std::vector<Action> order_locks_replay(std::span<const Action> puts);

/// Restores p_f (reusing its id) from its latest checkpoint and replays the
/// logs the peers hold about it. Falls back (without replaying anything)
/// when some peer's N, M or U flag is raised or logs about p_f were lost;
/// the caller then runs fallback_rollback. CatastrophicFailure if the
/// checkpoint cannot be rebuilt.
RecoveryPlan recover_gsync(Machine& machine, FtLog& log, const CheckpointStore& store, ProcessId failed);
RecoveryPlan recover_locks(Machine& machine, FtLog& log, const CheckpointStore& store, ProcessId failed);
RecoveryPlan recover(RecoveryScheme scheme, Machine& machine, FtLog& log, const CheckpointStore& store,
                     ProcessId failed);

/// Every process back to the last coordinated checkpoint: windows, counters,
/// crashed processes revived, in-flight state and all logs dropped. Returns
/// the resume data stored with the set.
std::vector<std::uint64_t> fallback_rollback(Machine& machine, FtLog& log, CheckpointStore& store);

/// Each fetched action replayed once and nothing else. Returns a
/// description of the first problem.
std::optional<std::string> check_exactly_once(const RecoveryPlan& plan);
/// Counter order along the replay trace.
std::optional<std::string> check_replay_order(const RecoveryPlan& plan, RecoveryScheme scheme);

}  // namespace rmaft
