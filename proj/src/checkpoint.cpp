#include "rmaft/checkpoint.hpp"

#include <algorithm>
#include <string>

#include "rmaft/errors.hpp"
#include "rmaft/xor_kernels.hpp"

namespace rmaft {

XorGroup::XorGroup(std::vector<ProcessId> members, std::size_t cells)
    : members_(std::move(members)), parity_(cells, 0) {
  if (members_.empty()) throw ArgumentError("a checksum group needs at least one member");
}

bool XorGroup::contains(ProcessId p) const {
  return std::find(members_.begin(), members_.end(), p) != members_.end();
}

void XorGroup::set_parity(std::vector<Word> parity) {
  if (parity.size() != parity_.size()) throw ArgumentError("parity size does not match the group");
  parity_ = std::move(parity);
}

void XorGroup::xor_update(ProcessId member, std::span<const Word> old_payload, std::span<const Word> new_payload) {
  if (!contains(member)) throw LookupError("p" + std::to_string(member.value()) + " is not in this group");
  xor_into(parity_, old_payload);
  xor_into(parity_, new_payload);
}

std::vector<Word> XorGroup::xor_recover(ProcessId lost, std::span<const std::span<const Word>> survivors) const {
  if (!contains(lost)) throw LookupError("p" + std::to_string(lost.value()) + " is not in this group");
  if (survivors.size() + 1 < members_.size()) {
    throw CatastrophicFailure("more than one member of a checksum group is lost");
  }
  if (survivors.size() + 1 > members_.size()) throw ArgumentError("more survivor payloads than group members");
  std::vector<Word> out(parity_.begin(), parity_.end());
  for (const auto& s : survivors) xor_into(out, s);
  return out;
}

CheckpointStore::CheckpointStore(std::size_t processes, std::size_t cells, std::size_t groups) : cells_(cells) {
  if (processes == 0) throw ArgumentError("no processes");
  if (groups == 0 || groups > processes) throw ArgumentError("group count must lie in [1, processes]");
  const std::size_t size = (processes + groups - 1) / groups;
  group_of_.resize(processes);
  for (std::size_t start = 0; start < processes; start += size) {
    std::vector<ProcessId> members;
    for (std::size_t p = start; p < std::min(processes, start + size); ++p) {
      group_of_[p] = groups_.size();
      members.emplace_back(static_cast<std::uint32_t>(p));
    }
    groups_.emplace_back(std::move(members), cells);
  }
  latest_.resize(processes);
  for (std::size_t p = 0; p < processes; ++p) {
    latest_[p].owner = ProcessId{static_cast<std::uint32_t>(p)};
    latest_[p].payload.assign(cells, 0);
  }
  next_seq_.assign(processes, 1);
}

Checkpoint CheckpointStore::capture(Machine& machine, ProcessId p) {
  if (machine.crashed(p)) throw CrashedProcessError("cannot checkpoint crashed p" + std::to_string(p.value()));
  if (machine.has_pending(p)) {
    throw ProtocolError("p" + std::to_string(p.value()) + " has an open epoch; checkpoint rejected");
  }
  Checkpoint c;
  c.owner = p;
  c.seq = next_seq_.at(p.index())++;
  auto w = machine.window(p);
  c.payload.assign(w.begin(), w.end());
  const auto n = machine.processes();
  c.meta.epoch_out.resize(n);
  c.meta.epoch_in.resize(n);
  for (std::uint32_t q = 0; q < n; ++q) {
    c.meta.epoch_out[q] = machine.epoch(p, ProcessId{q});
    c.meta.epoch_in[q] = machine.epoch(ProcessId{q}, p);
  }
  c.meta.gnc = machine.gsync_counter(p);
  c.meta.gc = machine.get_counter(p);
  c.meta.sc = machine.sync_counter(p);
  c.event = machine.record_internal(p, InternalEvent{InternalKind::Checkpoint, 0, 0, c.seq});
  ++captures_;
  return c;
}

void CheckpointStore::commit(Checkpoint c) {
  if (c.payload.size() != cells_) throw ArgumentError("checkpoint payload has the wrong size");
  auto& slot = latest_.at(c.owner.index());
  groups_[group_of(c.owner)].xor_update(c.owner, slot.payload, c.payload);
  slot = std::move(c);
}

void CheckpointStore::commit_coordinated(CheckpointSet set) {
  for (const auto& c : set.members) commit(c);
  coordinated_parity_.clear();
  for (const auto& g : groups_) coordinated_parity_.emplace_back(g.parity().begin(), g.parity().end());
  coordinated_ = std::move(set);
}

std::vector<Word> CheckpointStore::rebuild(const Machine& machine, ProcessId lost,
                                           const std::vector<Checkpoint>& copies,
                                           const std::vector<Word>& parity) const {
  const auto& g = groups_[group_of(lost)];
  std::vector<std::span<const Word>> survivors;
  for (auto m : g.members()) {
    if (m == lost) continue;
    if (machine.crashed(m)) continue;  // its local copy is gone
    auto it = std::find_if(copies.begin(), copies.end(), [&](const Checkpoint& c) { return c.owner == m; });
    if (it == copies.end()) throw LookupError("no checkpoint copy for p" + std::to_string(m.value()));
    survivors.emplace_back(it->payload);
  }
  XorGroup scratch(g.members(), cells_);
  scratch.set_parity(parity);
  return scratch.xor_recover(lost, survivors);
}

std::vector<Word> CheckpointStore::recover_payload(const Machine& machine, ProcessId lost) const {
  const auto& g = groups_[group_of(lost)];
  return rebuild(machine, lost, latest_, std::vector<Word>(g.parity().begin(), g.parity().end()));
}

std::vector<Word> CheckpointStore::recover_coordinated_payload(const Machine& machine, ProcessId lost) const {
  if (!coordinated_) throw CatastrophicFailure("no coordinated checkpoint to fall back to");
  return rebuild(machine, lost, coordinated_->members, coordinated_parity_[group_of(lost)]);
}

void CheckpointStore::rollback_to_coordinated() {
  if (!coordinated_) throw CatastrophicFailure("no coordinated checkpoint to fall back to");
  for (const auto& c : coordinated_->members) latest_.at(c.owner.index()) = c;
  for (std::size_t i = 0; i < groups_.size(); ++i) groups_[i].set_parity(coordinated_parity_[i]);
}

namespace {

std::vector<ProcessId> live_processes(const Machine& machine) {
  std::vector<ProcessId> out;
  for (std::uint32_t p = 0; p < machine.processes(); ++p) {
    if (!machine.crashed(ProcessId{p})) out.emplace_back(p);
  }
  return out;
}

CheckpointSet capture_all(Machine& machine, CheckpointStore& store, std::vector<std::uint64_t> resume) {
  CheckpointSet set;
  for (auto p : live_processes(machine)) set.members.push_back(store.capture(machine, p));
  set.control = machine.control();
  set.resume = std::move(resume);
  store.commit_coordinated(set);
  return set;
}

}  // namespace

CheckpointSet coordinated_checkpoint_gsync(Machine& machine, CheckpointStore& store, bool barrier,
                                           std::vector<std::uint64_t> resume) {
  if (!machine.at_gsync_point()) throw ProtocolError("gsync-scheme checkpoint requested away from a gsync point");
  if (barrier) {
    for (auto p : live_processes(machine)) machine.barrier_enter(p);
    machine.barrier_complete();
  }
  return capture_all(machine, store, std::move(resume));
}

void locks_checkpoint_join(Machine& machine, ProcessId p) {
  if (machine.lock_count(p) > 0) {
    throw ProtocolError("p" + std::to_string(p.value()) + " would enter the checkpoint barrier holding a lock");
  }
  machine.flush_all(p);
  machine.barrier_enter(p);
}

CheckpointSet locks_checkpoint_capture(Machine& machine, CheckpointStore& store, std::vector<std::uint64_t> resume) {
  machine.barrier_complete();
  return capture_all(machine, store, std::move(resume));
}

CheckpointSet coordinated_checkpoint_locks(Machine& machine, CheckpointStore& store,
                                           std::vector<std::uint64_t> resume) {
  for (auto p : live_processes(machine)) {
    if (!machine.barrier_waiting(p)) locks_checkpoint_join(machine, p);
  }
  return locks_checkpoint_capture(machine, store, std::move(resume));
}

ConsistencyResult rma_consistency_check(std::span<const Checkpoint> set, const OrderGraph& graph) {
  ConsistencyResult result;
  std::vector<std::vector<bool>> hb;
  std::vector<std::vector<bool>> co;
  for (const auto& c : set) {
    hb.push_back(graph.reachable(c.event, Relation::hb));
    co.push_back(graph.reachable(c.event, Relation::co));
  }
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (std::size_t j = 0; j < set.size(); ++j) {
      if (i == j) continue;
      const auto target = set[j].event;
      if (hb[i][target] && co[i][target]) {
        result.consistent = false;
        result.violation = std::make_pair(set[i].owner, set[j].owner);
        return result;
      }
    }
  }
  return result;
}

std::size_t trim_after_checkpoint(FtLog& log, const Checkpoint& c) {
  std::size_t removed = 0;
  for (std::uint32_t r = 0; r < c.meta.epoch_in.size(); ++r) {
    const ProcessId peer{r};
    if (peer == c.owner) continue;
    // Only the epoch decides: the other counters of the owner and of the
    // peer count different things and cannot be compared.
    TrimBounds b;
    b.put_epoch = c.meta.epoch_in[r];
    b.get_epoch = c.meta.epoch_out[r];
    removed += log.trim_logs(peer, c.owner, b);
  }
  log.clear_lost(c.owner);
  return removed;
}

std::optional<ProcessId> choose_victim(const FtLog& log, ProcessId requester) {
  std::optional<ProcessId> best;
  std::size_t best_size = 0;
  for (std::uint32_t q = 0; q < log.processes(); ++q) {
    const ProcessId peer{q};
    if (peer == requester) continue;
    const auto size = std::max(log.put_log(requester, peer).size(), log.get_log(requester, peer).size());
    if (size > best_size) {
      best_size = size;
      best = peer;
    }
  }
  return best;
}

CheckpointConfirmation demand_checkpoint(Machine& machine, CheckpointStore& store, FtLog& log, ProcessId requester,
                                         ProcessId victim) {
  if (machine.crashed(victim)) {
    throw CrashedProcessError("demand checkpoint of crashed p" + std::to_string(victim.value()));
  }
  machine.flush_all(victim);
  if (!machine.try_lock_structure(victim, kCheckpointStructure, requester)) {
    throw ProtocolError("checkpoint buffer of p" + std::to_string(victim.value()) + " is busy");
  }
  Checkpoint c = store.capture(machine, victim);
  CheckpointConfirmation conf{victim, c.seq, c.meta, 0};
  store.commit(c);
  machine.unlock_structure(victim, kCheckpointStructure, requester);
  conf.trimmed = trim_after_checkpoint(log, store.latest(victim));
  return conf;
}

}  // namespace rmaft
