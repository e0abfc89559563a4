#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rmaft/order_graph.hpp"
#include "rmaft/types.hpp"

namespace rmaft {

struct MachineConfig {
  std::size_t processes = 2;
  std::size_t window_cells = 16;
  /// Whether a completed gsync adds pairwise hb edges between participants.
  bool gsync_adds_hb = true;
};

/// Hooks for the fault-tolerance layer. Called synchronously from inside the
/// machine operation that triggers them.
class MachineObserver {
 public:
  virtual ~MachineObserver() = default;
  virtual void before_get_issue(ProcessId /*src*/, ProcessId /*trg*/) {}
  virtual void on_put_issued(const Action& /*a*/, Counter /*open_epoch*/) {}
  virtual void on_get_issued(const Action& /*a*/) {}
  /// Accesses src -> trg committed when that epoch closed; gets carry data.
  virtual void on_epoch_closed(ProcessId /*src*/, ProcessId /*trg*/, std::span<const Action> /*committed*/) {}
  /// `racing_sources` have an uncommitted put to the same cell of `p`.
  virtual void on_local_write(ProcessId /*p*/, std::size_t /*cell*/, std::span<const ProcessId> /*racing_sources*/) {}
  virtual void on_operation(ProcessId /*p*/) {}
};

/// Counter state captured with a coordinated checkpoint.
struct ControlState {
  std::vector<Counter> epochs;  // row-major E(src -> trg)
  std::vector<Counter> gc;
  std::vector<Counter> sc;
  std::vector<Counter> gnc;
  std::vector<Counter> sc_held;  // row-major, SC value fetched by src at trg

  friend bool operator==(const ControlState&, const ControlState&) = default;
};

/// Deterministic simulated RMA machine. Puts and gets are buffered per
/// (src, trg) epoch and commit when a flush, unlock or gsync closes it:
/// gets snapshot the committed target memory first, then puts apply in issue
/// order. Windows start zeroed.
class Machine {
 public:
  explicit Machine(MachineConfig config);

  void set_observer(MachineObserver* observer) { observer_ = observer; }

  const MachineConfig& config() const { return config_; }
  std::size_t processes() const { return config_.processes; }
  std::size_t window_cells() const { return config_.window_cells; }

  Action issue_put(ProcessId src, ProcessId trg, std::size_t cell, Word value, bool combine, bool blocking = false);
  Action issue_get(ProcessId src, ProcessId trg, std::size_t cell, std::size_t local_cell, bool blocking = false);
  Action issue_get(ProcessId src, ProcessId trg, std::size_t cell) { return issue_get(src, trg, cell, cell); }
  /// Atomics count as both a get and a combining put. Returns {get, put}.
  std::pair<Action, Action> issue_compare_swap(ProcessId src, ProcessId trg, std::size_t cell, Word compare, Word swap,
                                               std::size_t local_cell);
  std::pair<Action, Action> issue_fetch_add(ProcessId src, ProcessId trg, std::size_t cell, Word addend,
                                            std::size_t local_cell);

  SyncAction flush(ProcessId src, ProcessId trg);
  SyncAction flush_all(ProcessId src);
  /// Empty result: the lock is held by someone else and the caller blocks.
  std::optional<SyncAction> try_lock(ProcessId src, ProcessId trg, StructureId str = kWholeWindow);
  SyncAction unlock(ProcessId src, ProcessId trg, StructureId str = kWholeWindow);

  /// Collective gsync split into arrival and completion so a scheduler can
  /// interleave arrivals. gsync() runs a whole round for every live process.
  SyncAction gsync_enter(ProcessId p);
  bool gsync_ready() const;
  void gsync_complete();
  void gsync();
  bool gsync_waiting(ProcessId p) const { return gsync_arrived_[p.index()]; }
  /// True after a gsync completed and before the next RMA call.
  bool at_gsync_point() const { return at_gsync_point_; }

  /// Dispatch by category, for callers driven by data.
  SyncAction sync(SyncType type, ProcessId src, std::optional<ProcessId> trg, StructureId str = kWholeWindow);

  /// Process barrier used by the checkpoint schemes (no memory effects).
  void barrier_enter(ProcessId p);
  bool barrier_ready() const;
  void barrier_complete();
  bool barrier_waiting(ProcessId p) const { return barrier_arrived_[p.index()]; }

  Word local_read(ProcessId p, std::size_t cell);
  void local_write(ProcessId p, std::size_t cell, Word value);

  std::span<const Word> window(ProcessId p) const;
  Word cell(ProcessId p, std::size_t cell) const;
  Counter epoch(ProcessId src, ProcessId trg) const { return epochs_[pair(src, trg)]; }
  Counter get_counter(ProcessId p) const { return gc_[p.index()]; }
  Counter sync_counter(ProcessId p) const { return sc_[p.index()]; }
  Counter gsync_counter(ProcessId p) const { return gnc_[p.index()]; }
  Counter lock_count(ProcessId p) const { return lc_[p.index()]; }
  std::optional<ProcessId> lock_holder(ProcessId trg, StructureId str = kWholeWindow) const;
  /// Application locks (not protocol structure locks) currently held by p.
  std::size_t locks_held_by(ProcessId p) const;

  bool has_pending(ProcessId src) const;
  bool has_pending_puts(ProcessId src) const;
  std::size_t pending_count(ProcessId src, ProcessId trg) const { return pending_[pair(src, trg)].size(); }

  /// Protocol-internal structure locks (logs, checkpoint buffers). They share
  /// the lock table but do not touch SC/LC or the trace.
  bool try_lock_structure(ProcessId owner, StructureId str, ProcessId by);
  void unlock_structure(ProcessId owner, StructureId str, ProcessId by);

  OrderGraph& graph() { return graph_; }
  const OrderGraph& graph() const { return graph_; }
  std::uint64_t record_internal(ProcessId p, InternalEvent ev);
  std::uint64_t last_event(ProcessId p) const { return last_event_[p.index()]; }

  // Fault model.
  void crash(ProcessId p);
  bool crashed(ProcessId p) const { return crashed_[p.index()]; }
  void revive(ProcessId p) { crashed_[p.index()] = false; }
  void restore_window(ProcessId p, std::span<const Word> payload);
  /// Apply a logged access straight to committed memory (recovery replay).
  void apply_replayed(ProcessId p, const Action& a);

  ControlState control() const;
  void restore_control(const ControlState& state);
  /// Drops every buffered access, lock and collective arrival.
  void reset_in_flight();

 private:
  std::size_t pair(ProcessId src, ProcessId trg) const { return src.index() * config_.processes + trg.index(); }
  void check_process(ProcessId p) const;
  void check_live(ProcessId p) const;
  void check_access(ProcessId src, ProcessId trg, std::size_t cell) const;
  void check_cell(std::size_t cell) const;
  Action stamp(AccessType type, ProcessId src, ProcessId trg) const;
  std::uint64_t append_access(Action a);
  std::uint64_t append_sync(SyncType type, ProcessId src, std::optional<ProcessId> trg, std::optional<StructureId> str);
  void touch(ProcessId p);
  /// Commits the buffered accesses of the given (src, trg) pairs. `closer`
  /// maps src to the event that closes its epochs.
  void commit(const std::vector<std::pair<ProcessId, ProcessId>>& pairs, const std::vector<std::uint64_t>& closer);
  void apply_put(ProcessId trg, const Payload& data);

  MachineConfig config_;
  MachineObserver* observer_ = nullptr;
  std::vector<std::vector<Word>> windows_;
  std::vector<Counter> epochs_;
  std::vector<Counter> gc_, sc_, gnc_, lc_;
  std::vector<Counter> sc_held_;
  std::vector<std::vector<std::uint64_t>> pending_;
  std::map<std::pair<std::uint32_t, StructureId>, ProcessId> locks_;
  std::map<std::pair<std::uint32_t, StructureId>, std::uint64_t> last_unlock_;
  std::vector<bool> gsync_arrived_;
  std::vector<std::uint64_t> gsync_enter_event_;
  std::vector<bool> barrier_arrived_;
  std::vector<std::uint64_t> barrier_enter_event_;
  std::vector<bool> crashed_;
  std::vector<std::uint64_t> last_event_;
  bool at_gsync_point_ = false;
  OrderGraph graph_;
};

}  // namespace rmaft
