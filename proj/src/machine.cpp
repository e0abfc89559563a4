#include "rmaft/machine.hpp"

#include <algorithm>
#include <string>

#include "rmaft/errors.hpp"

namespace rmaft {

namespace {

// Filled into a crashed process's window so that any cell recovery misses
// shows up in digests.
constexpr Word kPoison = static_cast<Word>(0x5EADBEEF5EADBEEFull);

std::string pid(ProcessId p) { return "p" + std::to_string(p.value()); }

}  // namespace

Machine::Machine(MachineConfig config)
    : config_(config),
      windows_(config.processes, std::vector<Word>(config.window_cells, 0)),
      epochs_(config.processes * config.processes, 0),
      gc_(config.processes, 0),
      sc_(config.processes, 0),
      gnc_(config.processes, 0),
      lc_(config.processes, 0),
      sc_held_(config.processes * config.processes, 0),
      pending_(config.processes * config.processes),
      gsync_arrived_(config.processes, false),
      gsync_enter_event_(config.processes, OrderGraph::kNone),
      barrier_arrived_(config.processes, false),
      barrier_enter_event_(config.processes, OrderGraph::kNone),
      crashed_(config.processes, false),
      last_event_(config.processes, OrderGraph::kNone),
      graph_(config.processes) {
  if (config.processes == 0) throw ArgumentError("machine needs at least one process");
  if (config.window_cells == 0) throw ArgumentError("window must have at least one cell");
}

void Machine::check_process(ProcessId p) const {
  if (p.index() >= config_.processes) throw LookupError("unknown process " + pid(p));
}

void Machine::check_live(ProcessId p) const {
  check_process(p);
  if (crashed_[p.index()]) throw CrashedProcessError(pid(p) + " has crashed");
}

void Machine::check_cell(std::size_t cell) const {
  if (cell >= config_.window_cells) {
    throw BoundsError("cell " + std::to_string(cell) + " outside window of " + std::to_string(config_.window_cells));
  }
}

void Machine::check_access(ProcessId src, ProcessId trg, std::size_t cell) const {
  check_live(src);
  check_live(trg);
  if (src == trg) throw ProtocolError("access source and target must differ (" + pid(src) + ")");
  check_cell(cell);
}

void Machine::touch(ProcessId p) {
  at_gsync_point_ = false;
  if (observer_ != nullptr) observer_->on_operation(p);
}

Action Machine::stamp(AccessType type, ProcessId src, ProcessId trg) const {
  Action a;
  a.type = type;
  a.src = src;
  a.trg = trg;
  a.ec = epochs_[pair(src, trg)];
  a.gc = gc_[src.index()];
  a.sc = sc_held_[pair(src, trg)];
  a.gnc = gnc_[src.index()];
  return a;
}

std::uint64_t Machine::append_access(Action a) {
  a.id = graph_.size();
  const auto src = a.src;
  const auto trg = a.trg;
  const auto idx = graph_.append(src, std::move(a));
  last_event_[src.index()] = idx;
  pending_[pair(src, trg)].push_back(idx);
  return idx;
}

std::uint64_t Machine::append_sync(SyncType type, ProcessId src, std::optional<ProcessId> trg,
                                   std::optional<StructureId> str) {
  SyncAction s;
  s.type = type;
  s.src = src;
  s.trg = trg;
  if (trg) {
    s.ec = epochs_[pair(src, *trg)];
    s.sc = sc_held_[pair(src, *trg)];
  }
  s.gc = gc_[src.index()];
  s.gnc = gnc_[src.index()];
  s.str = str;
  const auto idx = graph_.append(src, s);
  last_event_[src.index()] = idx;
  return idx;
}

std::uint64_t Machine::record_internal(ProcessId p, InternalEvent ev) {
  check_process(p);
  const auto idx = graph_.append(p, ev);
  last_event_[p.index()] = idx;
  return idx;
}

Action Machine::issue_put(ProcessId src, ProcessId trg, std::size_t cell, Word value, bool combine, bool blocking) {
  check_access(src, trg, cell);
  touch(src);
  Action a = stamp(AccessType::Put, src, trg);
  a.combine = combine;
  a.blocking = blocking;
  a.data.cell = cell;
  a.data.local_cell = cell;
  a.data.value = value;
  a.data.op = combine ? PutOp::Accumulate : PutOp::Replace;
  const auto idx = append_access(a);
  if (observer_ != nullptr) observer_->on_put_issued(graph_.action(idx), epochs_[pair(src, trg)]);
  if (blocking) flush(src, trg);
  return graph_.action(idx);
}

Action Machine::issue_get(ProcessId src, ProcessId trg, std::size_t cell, std::size_t local_cell, bool blocking) {
  check_access(src, trg, cell);
  check_cell(local_cell);
  touch(src);
  if (observer_ != nullptr) observer_->before_get_issue(src, trg);
  Action a = stamp(AccessType::Get, src, trg);
  a.blocking = blocking;
  a.data.cell = cell;
  a.data.local_cell = local_cell;
  const auto idx = append_access(a);
  if (observer_ != nullptr) observer_->on_get_issued(graph_.action(idx));
  if (blocking) flush(src, trg);
  return graph_.action(idx);
}

std::pair<Action, Action> Machine::issue_compare_swap(ProcessId src, ProcessId trg, std::size_t cell, Word compare,
                                                      Word swap, std::size_t local_cell) {
  check_access(src, trg, cell);
  check_cell(local_cell);
  touch(src);
  if (observer_ != nullptr) observer_->before_get_issue(src, trg);
  Action g = stamp(AccessType::Get, src, trg);
  g.data.cell = cell;
  g.data.local_cell = local_cell;
  const auto gi = append_access(g);
  if (observer_ != nullptr) observer_->on_get_issued(graph_.action(gi));

  Action p = stamp(AccessType::Put, src, trg);
  p.combine = true;
  p.data.cell = cell;
  p.data.local_cell = cell;
  p.data.value = swap;
  p.data.compare = compare;
  p.data.op = PutOp::CompareSwap;
  const auto pi = append_access(p);
  if (observer_ != nullptr) observer_->on_put_issued(graph_.action(pi), epochs_[pair(src, trg)]);
  return {graph_.action(gi), graph_.action(pi)};
}

std::pair<Action, Action> Machine::issue_fetch_add(ProcessId src, ProcessId trg, std::size_t cell, Word addend,
                                                   std::size_t local_cell) {
  check_access(src, trg, cell);
  check_cell(local_cell);
  touch(src);
  if (observer_ != nullptr) observer_->before_get_issue(src, trg);
  Action g = stamp(AccessType::Get, src, trg);
  g.data.cell = cell;
  g.data.local_cell = local_cell;
  const auto gi = append_access(g);
  if (observer_ != nullptr) observer_->on_get_issued(graph_.action(gi));

  Action p = stamp(AccessType::Put, src, trg);
  p.combine = true;
  p.data.cell = cell;
  p.data.local_cell = cell;
  p.data.value = addend;
  p.data.op = PutOp::Accumulate;
  const auto pi = append_access(p);
  if (observer_ != nullptr) observer_->on_put_issued(graph_.action(pi), epochs_[pair(src, trg)]);
  return {graph_.action(gi), graph_.action(pi)};
}

void Machine::apply_put(ProcessId trg, const Payload& data) {
  Word& target = windows_[trg.index()][data.cell];
  switch (data.op) {
    case PutOp::Replace:
      target = data.value;
      break;
    case PutOp::Accumulate:
      target += data.value;
      break;
    case PutOp::CompareSwap:
      if (target == data.compare) target = data.value;
      break;
  }
}

void Machine::commit(const std::vector<std::pair<ProcessId, ProcessId>>& pairs,
                     const std::vector<std::uint64_t>& closer) {
  std::vector<std::uint64_t> gets;
  std::vector<std::uint64_t> puts;
  for (const auto& [src, trg] : pairs) {
    for (auto idx : pending_[pair(src, trg)]) {
      (graph_.action(idx).type == AccessType::Get ? gets : puts).push_back(idx);
    }
  }
  // Gets observe the memory as it was before this commit.
  std::vector<Word> read(gets.size());
  for (std::size_t i = 0; i < gets.size(); ++i) {
    const Action& a = graph_.action(gets[i]);
    read[i] = windows_[a.trg.index()][a.data.cell];
  }
  for (std::size_t i = 0; i < gets.size(); ++i) {
    Action& a = graph_.action(gets[i]);
    a.data.value = read[i];
    a.data.defined = true;
    windows_[a.src.index()][a.data.local_cell] = read[i];
  }
  std::sort(puts.begin(), puts.end());
  for (auto idx : puts) {
    Action& a = graph_.action(idx);
    apply_put(a.trg, a.data);
    a.data.defined = true;
  }

  std::vector<Action> committed;
  for (const auto& [src, trg] : pairs) {
    auto& queue = pending_[pair(src, trg)];
    committed.clear();
    for (auto idx : queue) {
      graph_.add_closing_edge(idx, closer[src.index()]);
      committed.push_back(graph_.action(idx));
    }
    queue.clear();
    ++epochs_[pair(src, trg)];
    if (observer_ != nullptr && !committed.empty()) observer_->on_epoch_closed(src, trg, committed);
  }
}

SyncAction Machine::flush(ProcessId src, ProcessId trg) {
  check_live(src);
  check_live(trg);
  if (src == trg) throw ProtocolError("flush target must differ from source");
  touch(src);
  const auto ev = append_sync(SyncType::Flush, src, trg, std::nullopt);
  std::vector<std::uint64_t> closer(config_.processes, OrderGraph::kNone);
  closer[src.index()] = ev;
  commit({{src, trg}}, closer);
  ++gc_[src.index()];
  return std::get<SyncAction>(graph_.event(ev).body);
}

SyncAction Machine::flush_all(ProcessId src) {
  check_live(src);
  touch(src);
  const auto ev = append_sync(SyncType::Flush, src, std::nullopt, std::nullopt);
  std::vector<std::uint64_t> closer(config_.processes, OrderGraph::kNone);
  closer[src.index()] = ev;
  std::vector<std::pair<ProcessId, ProcessId>> pairs;
  for (std::uint32_t q = 0; q < config_.processes; ++q) {
    if (q != src.value() && !crashed_[q]) pairs.emplace_back(src, ProcessId{q});
  }
  commit(pairs, closer);
  ++gc_[src.index()];
  return std::get<SyncAction>(graph_.event(ev).body);
}

std::optional<SyncAction> Machine::try_lock(ProcessId src, ProcessId trg, StructureId str) {
  check_live(src);
  check_live(trg);
  if (src == trg) throw ProtocolError("application locks must target another process");
  const auto key = std::make_pair(trg.value(), str);
  if (auto it = locks_.find(key); it != locks_.end()) {
    if (it->second == src) throw ProtocolError(pid(src) + " already holds this lock");
    return std::nullopt;
  }
  touch(src);
  locks_.emplace(key, src);
  ++lc_[src.index()];
  // Fetch-and-increment of the target's synchronization counter.
  ++sc_[trg.index()];
  sc_held_[pair(src, trg)] = sc_[trg.index()];
  const auto ev = append_sync(SyncType::Lock, src, trg, str);
  if (auto it = last_unlock_.find(key); it != last_unlock_.end()) graph_.add_so_edge(it->second, ev);
  return std::get<SyncAction>(graph_.event(ev).body);
}

SyncAction Machine::unlock(ProcessId src, ProcessId trg, StructureId str) {
  check_live(src);
  check_live(trg);
  const auto key = std::make_pair(trg.value(), str);
  auto it = locks_.find(key);
  if (it == locks_.end() || it->second != src) {
    throw ProtocolError("unlock by " + pid(src) + " of a lock it does not hold at " + pid(trg));
  }
  touch(src);
  const auto ev = append_sync(SyncType::Unlock, src, trg, str);
  std::vector<std::uint64_t> closer(config_.processes, OrderGraph::kNone);
  closer[src.index()] = ev;
  commit({{src, trg}}, closer);
  ++gc_[src.index()];
  --lc_[src.index()];
  locks_.erase(it);
  last_unlock_[key] = ev;
  return std::get<SyncAction>(graph_.event(ev).body);
}

std::optional<ProcessId> Machine::lock_holder(ProcessId trg, StructureId str) const {
  auto it = locks_.find({trg.value(), str});
  if (it == locks_.end()) return std::nullopt;
  return it->second;
}

std::size_t Machine::locks_held_by(ProcessId p) const {
  std::size_t n = 0;
  for (const auto& [key, holder] : locks_) {
    const auto str = key.second;
    const bool internal = str == kPutLogStructure || str == kGetLogStructure || str == kCheckpointStructure;
    if (holder == p && !internal) ++n;
  }
  return n;
}

bool Machine::try_lock_structure(ProcessId owner, StructureId str, ProcessId by) {
  check_process(owner);
  const auto key = std::make_pair(owner.value(), str);
  if (locks_.contains(key)) return false;
  locks_.emplace(key, by);
  return true;
}

void Machine::unlock_structure(ProcessId owner, StructureId str, ProcessId by) {
  auto it = locks_.find({owner.value(), str});
  if (it == locks_.end() || it->second != by) throw ProtocolError("structure unlock without holding it");
  locks_.erase(it);
}

SyncAction Machine::gsync_enter(ProcessId p) {
  check_live(p);
  if (gsync_arrived_[p.index()]) throw ProtocolError(pid(p) + " entered a gsync twice");
  touch(p);
  const auto ev = append_sync(SyncType::Gsync, p, std::nullopt, std::nullopt);
  gsync_arrived_[p.index()] = true;
  gsync_enter_event_[p.index()] = ev;
  return std::get<SyncAction>(graph_.event(ev).body);
}

bool Machine::gsync_ready() const {
  bool any = false;
  for (std::size_t p = 0; p < config_.processes; ++p) {
    if (crashed_[p]) continue;
    if (!gsync_arrived_[p]) return false;
    any = true;
  }
  return any;
}

void Machine::gsync_complete() {
  if (!gsync_ready()) throw ProtocolError("gsync completed before every process arrived");
  std::vector<std::pair<ProcessId, ProcessId>> pairs;
  std::vector<ProcessId> live;
  for (std::uint32_t p = 0; p < config_.processes; ++p) {
    if (crashed_[p]) continue;
    live.emplace_back(p);
    for (std::uint32_t q = 0; q < config_.processes; ++q) {
      if (q != p && !crashed_[q]) pairs.emplace_back(ProcessId{p}, ProcessId{q});
    }
  }
  commit(pairs, gsync_enter_event_);
  std::vector<std::uint64_t> exits;
  for (auto p : live) {
    ++gnc_[p.index()];
    exits.push_back(record_internal(p, InternalEvent{InternalKind::GsyncExit, 0, 0, gnc_[p.index()]}));
  }
  // A gsync always orders visibility globally; whether it also orders
  // execution (hb) is configurable.
  for (auto p : live) {
    for (std::size_t i = 0; i < live.size(); ++i) {
      if (live[i] == p) continue;
      if (config_.gsync_adds_hb) {
        graph_.add_so_edge(gsync_enter_event_[p.index()], exits[i]);
      } else {
        graph_.add_closing_edge(gsync_enter_event_[p.index()], exits[i]);
      }
    }
  }
  std::fill(gsync_arrived_.begin(), gsync_arrived_.end(), false);
  std::fill(gsync_enter_event_.begin(), gsync_enter_event_.end(), OrderGraph::kNone);
  at_gsync_point_ = true;
}

void Machine::gsync() {
  for (std::uint32_t p = 0; p < config_.processes; ++p) {
    if (!crashed_[p] && !gsync_arrived_[p]) gsync_enter(ProcessId{p});
  }
  gsync_complete();
}

SyncAction Machine::sync(SyncType type, ProcessId src, std::optional<ProcessId> trg, StructureId str) {
  switch (type) {
    case SyncType::Lock: {
      if (!trg) throw ProtocolError("lock needs a target");
      auto s = try_lock(src, *trg, str);
      if (!s) throw ProtocolError("lock is held by another process; the caller would block");
      return *s;
    }
    case SyncType::Unlock:
      if (!trg) throw ProtocolError("unlock needs a target");
      return unlock(src, *trg, str);
    case SyncType::Flush:
      return trg ? flush(src, *trg) : flush_all(src);
    case SyncType::Gsync: {
      if (trg) throw ProtocolError("gsync targets every process");
      auto s = gsync_enter(src);
      if (gsync_ready()) gsync_complete();
      return s;
    }
  }
  throw ProtocolError("unknown sync type");
}

void Machine::barrier_enter(ProcessId p) {
  check_live(p);
  if (barrier_arrived_[p.index()]) throw ProtocolError(pid(p) + " entered a barrier twice");
  barrier_arrived_[p.index()] = true;
  barrier_enter_event_[p.index()] = record_internal(p, InternalEvent{InternalKind::BarrierEnter});
}

bool Machine::barrier_ready() const {
  for (std::size_t p = 0; p < config_.processes; ++p) {
    if (!crashed_[p] && !barrier_arrived_[p]) return false;
  }
  return true;
}

void Machine::barrier_complete() {
  if (!barrier_ready()) throw ProtocolError("barrier completed before every process arrived");
  std::vector<std::pair<ProcessId, std::uint64_t>> exits;
  for (std::uint32_t p = 0; p < config_.processes; ++p) {
    if (crashed_[p]) continue;
    exits.emplace_back(ProcessId{p}, record_internal(ProcessId{p}, InternalEvent{InternalKind::BarrierExit}));
  }
  for (std::uint32_t p = 0; p < config_.processes; ++p) {
    if (crashed_[p]) continue;
    for (const auto& [q, exit] : exits) {
      if (q.value() != p) graph_.add_so_edge(barrier_enter_event_[p], exit);
    }
  }
  std::fill(barrier_arrived_.begin(), barrier_arrived_.end(), false);
}

Word Machine::local_read(ProcessId p, std::size_t cell) {
  check_live(p);
  check_cell(cell);
  touch(p);
  const Word v = windows_[p.index()][cell];
  record_internal(p, InternalEvent{InternalKind::Read, cell, v});
  return v;
}

void Machine::local_write(ProcessId p, std::size_t cell, Word value) {
  check_live(p);
  check_cell(cell);
  touch(p);
  if (observer_ != nullptr) {
    std::vector<ProcessId> racing;
    for (std::uint32_t q = 0; q < config_.processes; ++q) {
      if (q == p.value()) continue;
      for (auto idx : pending_[pair(ProcessId{q}, p)]) {
        const Action& a = graph_.action(idx);
        if (a.type == AccessType::Put && a.data.cell == cell) {
          racing.emplace_back(q);
          break;
        }
      }
    }
    observer_->on_local_write(p, cell, racing);
  }
  windows_[p.index()][cell] = value;
  record_internal(p, InternalEvent{InternalKind::Write, cell, value});
}

std::span<const Word> Machine::window(ProcessId p) const {
  check_process(p);
  return windows_[p.index()];
}

Word Machine::cell(ProcessId p, std::size_t cell) const {
  check_process(p);
  check_cell(cell);
  return windows_[p.index()][cell];
}

bool Machine::has_pending(ProcessId src) const {
  for (std::size_t q = 0; q < config_.processes; ++q) {
    if (!pending_[src.index() * config_.processes + q].empty()) return true;
  }
  return false;
}

bool Machine::has_pending_puts(ProcessId src) const {
  for (std::size_t q = 0; q < config_.processes; ++q) {
    for (auto idx : pending_[src.index() * config_.processes + q]) {
      if (std::get<Action>(graph_.event(idx).body).type == AccessType::Put) return true;
    }
  }
  return false;
}

void Machine::crash(ProcessId p) {
  check_live(p);
  record_internal(p, InternalEvent{InternalKind::Crash});
  crashed_[p.index()] = true;
  std::fill(windows_[p.index()].begin(), windows_[p.index()].end(), kPoison);
}

void Machine::restore_window(ProcessId p, std::span<const Word> payload) {
  check_process(p);
  if (payload.size() != config_.window_cells) throw ArgumentError("payload size does not match the window");
  std::copy(payload.begin(), payload.end(), windows_[p.index()].begin());
}

void Machine::apply_replayed(ProcessId p, const Action& a) {
  check_process(p);
  if (a.type == AccessType::Put) {
    if (a.trg != p) throw ProtocolError("replayed put does not target the recovering process");
    check_cell(a.data.cell);
    apply_put(p, a.data);
  } else {
    if (a.src != p) throw ProtocolError("replayed get was not issued by the recovering process");
    if (!a.data.defined) throw ProtocolError("replayed get has no data");
    check_cell(a.data.local_cell);
    windows_[p.index()][a.data.local_cell] = a.data.value;
  }
  record_internal(p, InternalEvent{InternalKind::Replay, a.data.cell, a.data.value, a.id});
}

ControlState Machine::control() const { return ControlState{epochs_, gc_, sc_, gnc_, sc_held_}; }

void Machine::restore_control(const ControlState& state) {
  if (state.epochs.size() != epochs_.size() || state.gc.size() != gc_.size()) {
    throw ArgumentError("control state belongs to a different machine shape");
  }
  epochs_ = state.epochs;
  gc_ = state.gc;
  sc_ = state.sc;
  gnc_ = state.gnc;
  sc_held_ = state.sc_held;
}

void Machine::reset_in_flight() {
  for (auto& q : pending_) q.clear();
  locks_.clear();
  last_unlock_.clear();
  std::fill(lc_.begin(), lc_.end(), 0);
  std::fill(gsync_arrived_.begin(), gsync_arrived_.end(), false);
  std::fill(gsync_enter_event_.begin(), gsync_enter_event_.end(), OrderGraph::kNone);
  std::fill(barrier_arrived_.begin(), barrier_arrived_.end(), false);
  at_gsync_point_ = false;
}

}  // namespace rmaft
