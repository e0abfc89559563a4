#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rmaft/logging.hpp"
#include "rmaft/machine.hpp"
#include "rmaft/order_graph.hpp"
#include "rmaft/types.hpp"

namespace rmaft {

/// Counters of the owner at capture time.
struct CheckpointMeta {
  std::vector<Counter> epoch_out;  // E(owner -> q)
  std::vector<Counter> epoch_in;   // E(q -> owner)
  Counter gnc = 0;
  Counter gc = 0;
  Counter sc = 0;

  friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

struct Checkpoint {
  ProcessId owner;
  std::uint64_t seq = 0;
  std::vector<Word> payload;
  CheckpointMeta meta;
  std::uint64_t event = OrderGraph::kNone;  // capture event in the trace
};

/// One checksum group: computing members plus the parity that the group's
/// checksum process keeps (m = 1, plain XOR).
class XorGroup {
 public:
  XorGroup(std::vector<ProcessId> members, std::size_t cells);

  const std::vector<ProcessId>& members() const { return members_; }
  bool contains(ProcessId p) const;
  std::span<const Word> parity() const { return parity_; }
  void set_parity(std::vector<Word> parity);

  /// parity ^= old ^ new
  void xor_update(ProcessId member, std::span<const Word> old_payload, std::span<const Word> new_payload);
  /// `survivors` holds the payload of every other member. Fewer than that
  /// means two members are gone.
  std::vector<Word> xor_recover(ProcessId lost, std::span<const std::span<const Word>> survivors) const;

 private:
  std::vector<ProcessId> members_;
  std::vector<Word> parity_;
};

/// A coordinated checkpoint: one checkpoint per process plus whatever the
/// driver needs to resume (program counters).
struct CheckpointSet {
  std::vector<Checkpoint> members;
  ControlState control;
  std::vector<std::uint64_t> resume;
};

/// Local checkpoint copies plus group parities. Each process keeps its own
/// latest payload; the parity lets a lost one be rebuilt.
class CheckpointStore {
 public:
  /// Processes are split into `groups` consecutive blocks of ceil(N/groups).
  CheckpointStore(std::size_t processes, std::size_t cells, std::size_t groups);

  std::size_t group_count() const { return groups_.size(); }
  const XorGroup& group(std::size_t i) const { return groups_.at(i); }
  std::size_t group_of(ProcessId p) const { return group_of_.at(p.index()); }

  /// Snapshot of p's committed memory; p must hold no open epoch.
  Checkpoint capture(Machine& machine, ProcessId p);
  /// Makes `c` the owner's latest checkpoint and folds it into the parity.
  void commit(Checkpoint c);
  const Checkpoint& latest(ProcessId p) const { return latest_.at(p.index()); }

  void commit_coordinated(CheckpointSet set);
  const std::optional<CheckpointSet>& coordinated() const { return coordinated_; }

  /// Rebuilds `lost`'s latest (or coordinated) payload from the parity and
  /// the other members' copies. Throws CatastrophicFailure when another
  /// member of the group is down too.
  std::vector<Word> recover_payload(const Machine& machine, ProcessId lost) const;
  std::vector<Word> recover_coordinated_payload(const Machine& machine, ProcessId lost) const;

  /// Latest checkpoints and parities revert to the coordinated set.
  void rollback_to_coordinated();

  std::uint64_t captures() const { return captures_; }

 private:
  std::vector<Word> rebuild(const Machine& machine, ProcessId lost, const std::vector<Checkpoint>& copies,
                            const std::vector<Word>& parity) const;

  std::size_t cells_;
  std::vector<XorGroup> groups_;
  std::vector<std::size_t> group_of_;
  std::vector<Checkpoint> latest_;
  std::vector<std::uint64_t> next_seq_;
  std::optional<CheckpointSet> coordinated_;
  std::vector<std::vector<Word>> coordinated_parity_;
  std::uint64_t captures_ = 0;
};

/// Gsync scheme: call right after a gsync completed and before any other RMA
/// call. `barrier` adds the optional barrier before the captures.
CheckpointSet coordinated_checkpoint_gsync(Machine& machine, CheckpointStore& store, bool barrier,
                                           std::vector<std::uint64_t> resume = {});

/// Locks scheme, split for a scheduler: each process joins once its lock
/// counter is zero (flush to everyone, enter the barrier); the capture runs
/// once everyone has joined.
void locks_checkpoint_join(Machine& machine, ProcessId p);
CheckpointSet locks_checkpoint_capture(Machine& machine, CheckpointStore& store, std::vector<std::uint64_t> resume = {});
/// All three phases at once; every live process must have LC = 0.
CheckpointSet coordinated_checkpoint_locks(Machine& machine, CheckpointStore& store,
                                           std::vector<std::uint64_t> resume = {});

struct ConsistencyResult {
  bool consistent = true;
  std::optional<std::pair<ProcessId, ProcessId>> violation;  // first cohb-ordered pair
};

/// A set is consistent iff no two of its captures are ordered by cohb.
ConsistencyResult rma_consistency_check(std::span<const Checkpoint> set, const OrderGraph& graph);

/// Drops every peer's log entries that `c` already covers and clears the
/// owner's lost-log marker.
std::size_t trim_after_checkpoint(FtLog& log, const Checkpoint& c);

struct CheckpointConfirmation {
  ProcessId victim;
  std::uint64_t seq = 0;
  CheckpointMeta meta;
  std::size_t trimmed = 0;
};

/// Largest single log the requester holds, by peer; empty if it holds none.
std::optional<ProcessId> choose_victim(const FtLog& log, ProcessId requester);

/// Forces `victim` to checkpoint: close its epochs, lock its checkpoint
/// buffer, capture and fold into the parity, unlock, confirm, trim.
CheckpointConfirmation demand_checkpoint(Machine& machine, CheckpointStore& store, FtLog& log, ProcessId requester,
                                         ProcessId victim);

}  // namespace rmaft
