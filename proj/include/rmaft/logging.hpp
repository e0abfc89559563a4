#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rmaft/machine.hpp"
#include "rmaft/types.hpp"

namespace rmaft {

struct LoggingConfig {
  /// When false every logged put raises M, not only combining ones.
  bool access_deterministic = true;
  /// Puts are logged lazily at the issuer's next operation instead of before
  /// their epoch closes. Only useful to reproduce the orphan problem.
  bool optimistic_puts = false;
};

/// Counter bounds a log entry must lie strictly below to be trimmed. Put logs
/// LP_owner[peer] compare EC against E(owner -> peer); get logs
/// LG_owner[peer] compare against E(peer -> owner).
struct TrimBounds {
  Counter put_epoch = kUnbounded;
  Counter get_epoch = kUnbounded;
  Counter gnc = kUnbounded;
  Counter gc = kUnbounded;
  Counter sc = kUnbounded;

  /// One epoch bound for both log families.
  static TrimBounds uniform(Counter epoch, Counter gnc, Counter gc, Counter sc) {
    return TrimBounds{epoch, epoch, gnc, gc, sc};
  }
};

struct LogStats {
  std::size_t logged_puts = 0;
  std::size_t logged_gets = 0;
};

/// All logging structures of all processes:
///   LP_p[q]  puts p issued at q, stored at p
///   LG_q[p]  gets p issued at q (with data), stored at q
///   Q_p      determinants of p's gets whose epoch is still open
///   N_q[p]   p has a get at q whose second logging phase has not run
///   M_p[q]   replaying LP_p[q] could apply a put twice
/// plus two flags that make recovery refuse incomplete logs: U_p[q] (a put
/// committed before it was logged) and a per-process lost-log marker set
/// when a peer holding logs about it crashed.
class FtLog : public MachineObserver {
 public:
  FtLog(Machine& machine, LoggingConfig config = {});

  const LoggingConfig& config() const { return config_; }
  std::size_t processes() const { return n_procs_; }

  /// Put logging under the self-lock on LP_p. `current_epoch` is the live
  /// E(src -> trg); the put must still belong to it.
  void log_put(const Action& a, Counter current_epoch);
  void get_phase1(ProcessId src, ProcessId trg);
  void get_phase1_issued(const Action& a);
  void get_phase2(const Action& a);

  /// Removes entries strictly below every bound; returns how many.
  std::size_t trim_logs(ProcessId owner, ProcessId peer, const TrimBounds& bounds);

  std::span<const Action> put_log(ProcessId owner, ProcessId target) const { return lp_[at(owner, target)]; }
  std::span<const Action> get_log(ProcessId owner, ProcessId issuer) const { return lg_[at(owner, issuer)]; }
  std::span<const Determinant> pending_gets(ProcessId p) const { return q_[p.index()]; }
  bool n_flag(ProcessId owner, ProcessId issuer) const { return n_[at(owner, issuer)]; }
  bool m_flag(ProcessId owner, ProcessId target) const { return m_[at(owner, target)] || m_race_[at(owner, target)]; }
  bool unlogged_flag(ProcessId owner, ProcessId target) const { return u_[at(owner, target)]; }
  bool logs_lost(ProcessId p) const { return lost_[p.index()]; }
  void clear_lost(ProcessId p) { lost_[p.index()] = false; }

  /// Entries held by `owner` across all its put and get logs.
  std::size_t entries_held(ProcessId owner) const;
  const LogStats& stats() const { return stats_; }

  /// Everything stored at p disappears with it.
  void on_crash(ProcessId p);
  void clear();

  /// Test hook: appends a second copy of an existing put log entry.
  void duplicate_put_entry(ProcessId owner, ProcessId target, std::size_t index);

  // MachineObserver
  void before_get_issue(ProcessId src, ProcessId trg) override;
  void on_put_issued(const Action& a, Counter open_epoch) override;
  void on_get_issued(const Action& a) override;
  void on_epoch_closed(ProcessId src, ProcessId trg, std::span<const Action> committed) override;
  void on_local_write(ProcessId p, std::size_t cell, std::span<const ProcessId> racing_sources) override;
  void on_operation(ProcessId p) override;

 private:
  std::size_t at(ProcessId a, ProcessId b) const { return a.index() * n_procs_ + b.index(); }
  void append_put(const Action& a);
  void refresh_m(ProcessId owner, ProcessId target);
  void flush_late(ProcessId p);

  Machine& machine_;
  LoggingConfig config_;
  std::size_t n_procs_;
  std::vector<std::vector<Action>> lp_;
  std::vector<std::vector<Action>> lg_;
  std::vector<std::vector<Determinant>> q_;
  std::vector<bool> n_, m_, m_race_, u_, lost_;
  std::vector<std::vector<Action>> deferred_;  // optimistic: issued, not logged
  std::vector<std::vector<Action>> late_;      // optimistic: committed, not logged
  LogStats stats_;
};

}  // namespace rmaft
