#include "rmaft/recovery.hpp"

#include <algorithm>
#include <set>

#include "rmaft/errors.hpp"

namespace rmaft {

namespace {

ProcessId peer_of(const Action& a) { return a.type == AccessType::Put ? a.src : a.trg; }

bool replay_before(const Action& a, const Action& b) {
  if (peer_of(a) != peer_of(b)) return peer_of(a) < peer_of(b);
  return a.id < b.id;
}

/// Moves the entries with the smallest `key` out of `pool`, in replay order.
template <typename Key>
std::vector<Action> take_min(std::vector<Action>& pool, Key key) {
  if (pool.empty()) return {};
  const auto lowest = key(*std::min_element(pool.begin(), pool.end(),
                                            [&](const Action& a, const Action& b) { return key(a) < key(b); }));
  std::vector<Action> out;
  std::vector<Action> rest;
  for (auto& a : pool) (key(a) == lowest ? out : rest).push_back(std::move(a));
  pool = std::move(rest);
  std::sort(out.begin(), out.end(), replay_before);
  return out;
}

struct Fetched {
  std::vector<Action> puts;
  std::vector<Action> gets;
  std::optional<std::string> fallback;
};

Fetched fetch_logs(Machine& machine, const FtLog& log, ProcessId failed, bool check_n, bool want_gets) {
  Fetched f;
  if (log.logs_lost(failed)) f.fallback = "logs about the failed process were lost with an earlier crash";
  for (std::uint32_t i = 0; i < machine.processes(); ++i) {
    const ProcessId q{i};
    if (q == failed || machine.crashed(q)) continue;
    if (!machine.try_lock_structure(q, kPutLogStructure, failed) ||
        !machine.try_lock_structure(q, kGetLogStructure, failed)) {
      throw ProtocolError("log structures of p" + std::to_string(i) + " are busy during recovery");
    }
    if (!f.fallback) {
      if (check_n && log.n_flag(q, failed)) {
        f.fallback = "N flag at p" + std::to_string(i) + ": a get of the failed process was never logged";
      } else if (log.m_flag(q, failed)) {
        f.fallback = "M flag at p" + std::to_string(i) + ": replaying its puts could apply one twice";
      } else if (log.unlogged_flag(q, failed)) {
        f.fallback = "p" + std::to_string(i) + " has a committed put that is not logged yet";
      }
    }
    if (!f.fallback) {
      // Puts still buffered at q commit on their own later.
      const auto committed_below = machine.epoch(q, failed);
      for (const auto& a : log.put_log(q, failed)) {
        if (a.ec < committed_below) f.puts.push_back(a);
      }
      if (want_gets) {
        for (const auto& a : log.get_log(q, failed)) f.gets.push_back(a);
      }
    }
    machine.unlock_structure(q, kGetLogStructure, failed);
    machine.unlock_structure(q, kPutLogStructure, failed);
  }
  if (f.fallback) {
    f.puts.clear();
    f.gets.clear();
  }
  return f;
}

RecoveryPlan run_recovery(RecoveryScheme scheme, Machine& machine, FtLog& log, const CheckpointStore& store,
                          ProcessId failed) {
  if (!machine.crashed(failed)) throw ProtocolError("p" + std::to_string(failed.value()) + " has not crashed");
  RecoveryPlan plan;
  plan.failed = failed;
  plan.replacement = failed;

  auto payload = store.recover_payload(machine, failed);
  const bool gsync = scheme == RecoveryScheme::Gsync;
  auto fetched = fetch_logs(machine, log, failed, gsync, gsync);
  if (fetched.fallback) {
    // p_f stays down; the rollback rebuilds it from the coordinated parity.
    plan.fallback = true;
    plan.fallback_reason = *fetched.fallback;
    return plan;
  }
  machine.revive(failed);
  machine.restore_window(failed, payload);
  plan.put_logs = std::move(fetched.puts);
  plan.get_logs = std::move(fetched.gets);
  const auto order = gsync ? order_gsync_replay(plan.put_logs, plan.get_logs) : order_locks_replay(plan.put_logs);
  for (const auto& a : order) {
    machine.apply_replayed(failed, a);
    plan.replay_trace.push_back(determinant_of(a));
  }
  return plan;
}

}  // namespace

std::vector<Action> order_gsync_replay(std::span<const Action> puts, std::span<const Action> gets) {
  std::vector<Action> put_pool(puts.begin(), puts.end());
  std::vector<Action> get_pool(gets.begin(), gets.end());
  std::vector<Action> order;
  while (!put_pool.empty() || !get_pool.empty()) {
    Counter gnc = kUnbounded;
    for (const auto& a : put_pool) gnc = std::min(gnc, a.gnc);
    for (const auto& a : get_pool) gnc = std::min(gnc, a.gnc);
    std::vector<Action> stratum_puts;
    std::vector<Action> stratum_gets;
    std::erase_if(put_pool, [&](const Action& a) {
      if (a.gnc != gnc) return false;
      stratum_puts.push_back(a);
      return true;
    });
    std::erase_if(get_pool, [&](const Action& a) {
      if (a.gnc != gnc) return false;
      stratum_gets.push_back(a);
      return true;
    });
    while (!stratum_puts.empty() || !stratum_gets.empty()) {
      auto ec_logs = take_min(stratum_puts, [](const Action& a) { return a.ec; });
      auto gc_logs = take_min(stratum_gets, [](const Action& a) { return a.gc; });
      order.insert(order.end(), ec_logs.begin(), ec_logs.end());
      order.insert(order.end(), gc_logs.begin(), gc_logs.end());
    }
  }
  return order;
}

std::vector<Action> order_locks_replay(std::span<const Action> puts) {
  std::vector<Action> pool(puts.begin(), puts.end());
  std::vector<Action> order;
  while (!pool.empty()) {
    auto stratum = take_min(pool, [](const Action& a) { return a.sc; });
    while (!stratum.empty()) {
      auto ec_logs = take_min(stratum, [](const Action& a) { return a.ec; });
      order.insert(order.end(), ec_logs.begin(), ec_logs.end());
    }
  }
  return order;
}

RecoveryPlan recover_gsync(Machine& machine, FtLog& log, const CheckpointStore& store, ProcessId failed) {
  return run_recovery(RecoveryScheme::Gsync, machine, log, store, failed);
}

RecoveryPlan recover_locks(Machine& machine, FtLog& log, const CheckpointStore& store, ProcessId failed) {
  return run_recovery(RecoveryScheme::Locks, machine, log, store, failed);
}

RecoveryPlan recover(RecoveryScheme scheme, Machine& machine, FtLog& log, const CheckpointStore& store,
                     ProcessId failed) {
  return run_recovery(scheme, machine, log, store, failed);
}

std::vector<std::uint64_t> fallback_rollback(Machine& machine, FtLog& log, CheckpointStore& store) {
  const auto& set = store.coordinated();
  if (!set) throw CatastrophicFailure("no coordinated checkpoint was ever taken");
  std::vector<std::vector<Word>> payloads(machine.processes());
  for (const auto& c : set->members) {
    payloads[c.owner.index()] =
        machine.crashed(c.owner) ? store.recover_coordinated_payload(machine, c.owner) : c.payload;
  }
  for (std::uint32_t i = 0; i < machine.processes(); ++i) {
    const ProcessId p{i};
    if (payloads[i].empty()) throw CatastrophicFailure("p" + std::to_string(i) + " has no coordinated checkpoint");
    machine.revive(p);
    machine.restore_window(p, payloads[i]);
  }
  machine.reset_in_flight();
  machine.restore_control(set->control);
  for (std::uint32_t i = 0; i < machine.processes(); ++i) {
    machine.record_internal(ProcessId{i}, InternalEvent{InternalKind::Rollback});
  }
  log.clear();
  store.rollback_to_coordinated();
  return set->resume;
}

std::optional<std::string> check_exactly_once(const RecoveryPlan& plan) {
  if (plan.fallback) {
    if (!plan.replay_trace.empty()) return "fallback after replaying " + std::to_string(plan.replay_trace.size());
    return std::nullopt;
  }
  const auto fetched = plan.put_logs.size() + plan.get_logs.size();
  if (plan.replay_trace.size() != fetched) {
    return "replayed " + std::to_string(plan.replay_trace.size()) + " of " + std::to_string(fetched) + " actions";
  }
  std::set<std::pair<std::uint64_t, AccessType>> seen;
  for (const auto& d : plan.replay_trace) {
    if (!seen.emplace(d.id, d.type).second) return "action " + std::to_string(d.id) + " replayed twice";
  }
  std::multiset<std::pair<std::uint64_t, AccessType>> wanted;
  for (const auto& a : plan.put_logs) wanted.emplace(a.id, a.type);
  for (const auto& a : plan.get_logs) wanted.emplace(a.id, a.type);
  for (const auto& key : wanted) {
    if (wanted.count(key) > 1) return "action " + std::to_string(key.first) + " fetched twice";
    if (!seen.contains(key)) return "action " + std::to_string(key.first) + " never replayed";
  }
  return std::nullopt;
}

std::optional<std::string> check_replay_order(const RecoveryPlan& plan, RecoveryScheme scheme) {
  const auto& trace = plan.replay_trace;
  if (scheme == RecoveryScheme::Gsync) {
    for (std::size_t i = 0; i < trace.size(); ++i) {
      if (i > 0 && trace[i].gnc < trace[i - 1].gnc) return "GNC decreases at replay " + std::to_string(i);
    }
    // Inside a stratum, puts by EC and gets by GC.
    for (std::size_t i = 0; i < trace.size();) {
      std::size_t j = i;
      Counter last_ec = 0;
      Counter last_gc = 0;
      while (j < trace.size() && trace[j].gnc == trace[i].gnc) {
        const auto& d = trace[j];
        if (d.type == AccessType::Put) {
          if (d.ec < last_ec) return "EC decreases inside GNC stratum at replay " + std::to_string(j);
          last_ec = d.ec;
        } else {
          if (d.gc < last_gc) return "GC decreases inside GNC stratum at replay " + std::to_string(j);
          last_gc = d.gc;
        }
        ++j;
      }
      i = j;
    }
    return std::nullopt;
  }
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (i > 0 && trace[i].sc < trace[i - 1].sc) return "SC decreases at replay " + std::to_string(i);
    if (i > 0 && trace[i].sc == trace[i - 1].sc && trace[i].ec < trace[i - 1].ec) {
      return "EC decreases inside SC stratum at replay " + std::to_string(i);
    }
  }
  return std::nullopt;
}

}  // namespace rmaft
