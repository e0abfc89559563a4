#include "rmaft/logging.hpp"

#include <algorithm>
#include <string>

#include "rmaft/errors.hpp"

namespace rmaft {

FtLog::FtLog(Machine& machine, LoggingConfig config)
    : machine_(machine),
      config_(config),
      n_procs_(machine.processes()),
      lp_(n_procs_ * n_procs_),
      lg_(n_procs_ * n_procs_),
      q_(n_procs_),
      n_(n_procs_ * n_procs_, false),
      m_(n_procs_ * n_procs_, false),
      m_race_(n_procs_ * n_procs_, false),
      u_(n_procs_ * n_procs_, false),
      lost_(n_procs_, false),
      deferred_(n_procs_),
      late_(n_procs_) {}

void FtLog::append_put(const Action& a) {
  if (!machine_.try_lock_structure(a.src, kPutLogStructure, a.src)) {
    throw ProtocolError("put log of p" + std::to_string(a.src.value()) + " is locked by someone else");
  }
  lp_[at(a.src, a.trg)].push_back(a);
  if (a.combine || !config_.access_deterministic) m_[at(a.src, a.trg)] = true;
  ++stats_.logged_puts;
  machine_.unlock_structure(a.src, kPutLogStructure, a.src);
}

void FtLog::log_put(const Action& a, Counter current_epoch) {
  if (a.type != AccessType::Put) throw ProtocolError("log_put given a get");
  if (a.ec != current_epoch) {
    throw ProtocolError("put " + std::to_string(a.id) + " logged after its epoch closed");
  }
  append_put(a);
}

void FtLog::get_phase1(ProcessId src, ProcessId trg) { n_[at(trg, src)] = true; }

void FtLog::get_phase1_issued(const Action& a) {
  if (a.type != AccessType::Get) throw ProtocolError("get logging given a put");
  q_[a.src.index()].push_back(determinant_of(a));
}

void FtLog::get_phase2(const Action& a) {
  auto& queue = q_[a.src.index()];
  const auto det = determinant_of(a);
  auto it = std::find(queue.begin(), queue.end(), det);
  if (it == queue.end()) {
    throw ProtocolError("second logging phase for get " + std::to_string(a.id) + " without the first");
  }
  if (!a.data.defined) throw ProtocolError("get " + std::to_string(a.id) + " logged before its data arrived");
  if (!machine_.try_lock_structure(a.trg, kGetLogStructure, a.src)) {
    throw ProtocolError("get log of p" + std::to_string(a.trg.value()) + " is locked by someone else");
  }
  lg_[at(a.trg, a.src)].push_back(a);
  queue.erase(it);
  ++stats_.logged_gets;
  machine_.unlock_structure(a.trg, kGetLogStructure, a.src);
}

void FtLog::refresh_m(ProcessId owner, ProcessId target) {
  const auto& log = lp_[at(owner, target)];
  m_[at(owner, target)] =
      std::any_of(log.begin(), log.end(), [&](const Action& e) { return e.combine || !config_.access_deterministic; });
  if (log.empty()) m_race_[at(owner, target)] = false;
}

std::size_t FtLog::trim_logs(ProcessId owner, ProcessId peer, const TrimBounds& b) {
  auto below = [&](const Action& e, Counter epoch) {
    return e.ec < epoch && e.gnc < b.gnc && e.gc < b.gc && e.sc < b.sc;
  };
  auto& puts = lp_[at(owner, peer)];
  auto& gets = lg_[at(owner, peer)];
  const auto before = puts.size() + gets.size();
  std::erase_if(puts, [&](const Action& e) { return below(e, b.put_epoch); });
  std::erase_if(gets, [&](const Action& e) { return below(e, b.get_epoch); });
  refresh_m(owner, peer);
  return before - puts.size() - gets.size();
}

std::size_t FtLog::entries_held(ProcessId owner) const {
  std::size_t total = 0;
  for (std::size_t q = 0; q < n_procs_; ++q) {
    total += lp_[owner.index() * n_procs_ + q].size() + lg_[owner.index() * n_procs_ + q].size();
  }
  return total;
}

void FtLog::on_crash(ProcessId p) {
  for (std::size_t r = 0; r < n_procs_; ++r) {
    const auto i = p.index() * n_procs_ + r;
    // Logs about r that only p held are gone; r can no longer be replayed
    // from logs until it takes a fresh checkpoint.
    if (!lp_[i].empty() || !lg_[i].empty() || u_[i]) lost_[r] = true;
    lp_[i].clear();
    lg_[i].clear();
    m_[i] = m_race_[i] = u_[i] = false;
  }
  for (const auto& a : deferred_[p.index()]) lost_[a.trg.index()] = true;
  for (const auto& a : late_[p.index()]) lost_[a.trg.index()] = true;
  deferred_[p.index()].clear();
  late_[p.index()].clear();
  q_[p.index()].clear();
}

void FtLog::clear() {
  for (auto& l : lp_) l.clear();
  for (auto& l : lg_) l.clear();
  for (auto& l : q_) l.clear();
  for (auto& l : deferred_) l.clear();
  for (auto& l : late_) l.clear();
  std::fill(n_.begin(), n_.end(), false);
  std::fill(m_.begin(), m_.end(), false);
  std::fill(m_race_.begin(), m_race_.end(), false);
  std::fill(u_.begin(), u_.end(), false);
  std::fill(lost_.begin(), lost_.end(), false);
}

void FtLog::duplicate_put_entry(ProcessId owner, ProcessId target, std::size_t index) {
  auto& log = lp_[at(owner, target)];
  if (index >= log.size()) throw LookupError("no put log entry " + std::to_string(index));
  log.push_back(log[index]);
}

void FtLog::before_get_issue(ProcessId src, ProcessId trg) { get_phase1(src, trg); }

void FtLog::on_put_issued(const Action& a, Counter open_epoch) {
  if (config_.optimistic_puts) {
    deferred_[a.src.index()].push_back(a);
    return;
  }
  log_put(a, open_epoch);
}

void FtLog::on_get_issued(const Action& a) { get_phase1_issued(a); }

void FtLog::on_epoch_closed(ProcessId src, ProcessId trg, std::span<const Action> committed) {
  bool had_get = false;
  for (const auto& a : committed) {
    if (a.type == AccessType::Get) {
      get_phase2(a);
      had_get = true;
    }
  }
  if (had_get) n_[at(trg, src)] = false;

  if (!config_.optimistic_puts) return;
  auto& pending = deferred_[src.index()];
  for (const auto& a : committed) {
    if (a.type != AccessType::Put) continue;
    auto it = std::find_if(pending.begin(), pending.end(), [&](const Action& d) { return d.id == a.id; });
    if (it == pending.end()) continue;
    late_[src.index()].push_back(a);
    pending.erase(it);
    u_[at(src, trg)] = true;
  }
}

void FtLog::on_local_write(ProcessId p, std::size_t, std::span<const ProcessId> racing_sources) {
  for (auto q : racing_sources) m_race_[at(q, p)] = true;
}

void FtLog::flush_late(ProcessId p) {
  auto& late = late_[p.index()];
  for (const auto& a : late) {
    append_put(a);
    u_[at(a.src, a.trg)] = false;
  }
  late.clear();
}

void FtLog::on_operation(ProcessId p) {
  if (config_.optimistic_puts) flush_late(p);
}

}  // namespace rmaft
