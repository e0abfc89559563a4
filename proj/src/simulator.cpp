#include "rmaft/simulator.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include "rmaft/daly.hpp"
#include "rmaft/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rmaft {

std::string_view to_string(WorkloadKind k) {
  switch (k) {
    case WorkloadKind::RandomGsync: return "random_gsync";
    case WorkloadKind::LockPut: return "lock_put";
    case WorkloadKind::KvStore: return "kvstore";
    case WorkloadKind::Custom: return "custom";
  }
  return "?";
}

std::string_view to_string(CheckpointScheme s) {
  switch (s) {
    case CheckpointScheme::None: return "none";
    case CheckpointScheme::Gsync: return "gsync";
    case CheckpointScheme::Locks: return "locks";
  }
  return "?";
}

std::vector<std::string> Report::failures() const {
  std::vector<std::string> out;
  if (deadlock) out.push_back("deadlock");
  if (!error.empty()) out.push_back(error);
  for (const auto& r : recoveries_log) {
    const auto who = "recovery of p" + std::to_string(r.failed.value()) + " at step " + std::to_string(r.step);
    if (r.exactly_once_error) out.push_back(who + ": " + *r.exactly_once_error);
    if (r.order_error) out.push_back(who + ": " + *r.order_error);
    if (!r.fallback && !r.window_restored) out.push_back(who + ": window differs from the pre-crash state");
  }
  if (consistency_violations > 0) {
    out.push_back(std::to_string(consistency_violations) + " inconsistent coordinated checkpoint(s)");
  }
  if (lock_safety_violations > 0) out.push_back(std::to_string(lock_safety_violations) + " lock counter mismatch(es)");
  return out;
}

Workload build_workload(const Scenario& s) {
  switch (s.workload) {
    case WorkloadKind::RandomGsync: return random_gsync_workload(s.processes, s.window_cells, s.gsync, s.seed);
    case WorkloadKind::LockPut: return lock_put_workload(s.processes, s.window_cells, s.lock_put, s.seed);
    case WorkloadKind::KvStore: return kvstore_workload(s.processes, s.window_cells, s.kvstore, s.seed);
    case WorkloadKind::Custom: {
      if (s.programs.size() != s.processes) {
        throw ScenarioError("custom workload has " + std::to_string(s.programs.size()) + " programs for " +
                            std::to_string(s.processes) + " processes");
      }
      Workload w;
      w.programs = s.programs;
      for (const auto& prog : w.programs) {
        for (const auto& op : prog) {
          w.uses_gsync = w.uses_gsync || op.kind == OpKind::Gsync;
          w.uses_locks = w.uses_locks || op.kind == OpKind::Lock;
          const bool atomic = op.kind == OpKind::CompareSwap || op.kind == OpKind::FetchAdd;
          w.has_combining = w.has_combining || atomic || (op.kind == OpKind::Put && op.combine);
        }
      }
      w.access_deterministic = s.protocol.access_deterministic;
      return w;
    }
  }
  throw ScenarioError("unknown workload");
}

std::vector<FaultSpec> effective_faults(const Scenario& s) {
  auto faults = s.faults;
  for (const auto& f : faults) {
    if (f.victim >= s.processes) throw ScenarioError("fault names process " + std::to_string(f.victim));
  }
  if (s.random_faults > 0) {
    if (s.random_fault_horizon == 0) throw ScenarioError("random faults need a positive horizon");
    std::mt19937_64 rng(s.seed * 0x2545F4914F6CDD1DULL + 7);
    std::uniform_int_distribution<std::uint32_t> victim(0, static_cast<std::uint32_t>(s.processes - 1));
    std::uniform_int_distribution<std::uint64_t> step(0, s.random_fault_horizon - 1);
    for (std::size_t i = 0; i < s.random_faults; ++i) {
      const auto v = victim(rng);
      faults.push_back({v, step(rng)});
    }
  }
  std::stable_sort(faults.begin(), faults.end(), [](const FaultSpec& a, const FaultSpec& b) { return a.step < b.step; });
  return faults;
}

std::uint64_t memory_digest(const Machine& machine) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint32_t p = 0; p < machine.processes(); ++p) {
    for (Word w : machine.window(ProcessId{p})) {
      for (int b = 0; b < 8; ++b) {
        h ^= (w >> (8 * b)) & 0xFF;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

namespace {

Scenario checked(Scenario s) {
  if (s.processes == 0) throw ScenarioError("a scenario needs at least one process");
  if (s.window_cells == 0) throw ScenarioError("windows need at least one cell");
  if (s.protocol.groups == 0 || s.protocol.groups > s.processes) {
    throw ScenarioError("group count must lie in [1, processes]");
  }
  if (s.protocol.mtbf < 0.0) throw ScenarioError("mtbf must not be negative");
  if (s.protocol.mtbf > 0.0 && !(s.protocol.seconds_per_event > 0.0)) {
    throw ScenarioError("seconds_per_event must be positive");
  }
  return s;
}

}  // namespace

Simulation::Simulation(Scenario scenario, bool inject_faults)
    : scenario_(checked(std::move(scenario))),
      workload_(build_workload(scenario_)),
      machine_(MachineConfig{scenario_.processes, scenario_.window_cells, scenario_.protocol.gsync_adds_hb}),
      log_(machine_, LoggingConfig{scenario_.protocol.access_deterministic && workload_.access_deterministic,
                                   scenario_.protocol.optimistic_puts}),
      store_(scenario_.processes, scenario_.window_cells, scenario_.protocol.groups),
      recovery_(scenario_.protocol.recovery.value_or(scenario_.workload == WorkloadKind::LockPut ? RecoveryScheme::Locks
                                                                                              : RecoveryScheme::Gsync)),
      rng_(scenario_.seed ^ 0x9E3779B97F4A7C15ULL),
      procs_(scenario_.processes) {
  machine_.set_observer(&log_);
  if (inject_faults) pending_faults_ = effective_faults(scenario_);
  const auto before = machine_.graph().size();
  record_coordinated(coordinated_checkpoint_locks(machine_, store_, resume_data()));
  checkpoint_cost_ = static_cast<double>(machine_.graph().size() - before) * scenario_.protocol.seconds_per_event;
}

std::vector<std::uint64_t> Simulation::resume_data() const {
  std::vector<std::uint64_t> out;
  for (const auto& pr : procs_) {
    // A process parked in a gsync has already stepped past it; it must
    // arrive again after a rollback.
    out.push_back(pr.wait == Wait::Gsync ? pr.pc - 1 : pr.pc);
  }
  return out;
}

bool Simulation::checkpoint_due() const {
  const auto& pc = scenario_.protocol;
  const auto since = step_ - last_checkpoint_step_;
  if (pc.mtbf > 0.0) {
    const double delta = std::max(checkpoint_cost_, pc.seconds_per_event);
    return static_cast<double>(since) * pc.seconds_per_event >= daly_interval({delta, pc.mtbf});
  }
  if (pc.scheme == CheckpointScheme::Locks) return since >= pc.locks_interval;
  return true;
}

void Simulation::record_coordinated(const CheckpointSet& set) {
  for (const auto& c : set.members) trim_after_checkpoint(log_, c);
  const auto result = rma_consistency_check(set.members, machine_.graph());
  ++report_.consistency_checks;
  if (!result.consistent) ++report_.consistency_violations;
  ++report_.coordinated_checkpoints;
  last_checkpoint_step_ = step_;
}

void Simulation::after_gsync() {
  if (scenario_.protocol.scheme != CheckpointScheme::Gsync || !checkpoint_due()) return;
  const auto before = machine_.graph().size();
  record_coordinated(
      coordinated_checkpoint_gsync(machine_, store_, scenario_.protocol.gsync_ckpt_barrier, resume_data()));
  checkpoint_cost_ = static_cast<double>(machine_.graph().size() - before) * scenario_.protocol.seconds_per_event;
}

void Simulation::maybe_request_locks_checkpoint() {
  if (scenario_.protocol.scheme != CheckpointScheme::Locks || locks_requested_) return;
  if (checkpoint_due()) locks_requested_ = true;
}

void Simulation::join_idle_processes() {
  for (std::uint32_t p = 0; p < procs_.size(); ++p) {
    auto& pr = procs_[p];
    const ProcessId id{p};
    if (pr.joined || machine_.crashed(id) || machine_.lock_count(id) > 0) continue;
    if (finished(p) || pr.wait != Wait::None) {
      locks_checkpoint_join(machine_, id);
      pr.joined = true;
    }
  }
  if (machine_.barrier_ready()) capture_locks_checkpoint();
}

void Simulation::capture_locks_checkpoint() {
  const auto before = machine_.graph().size();
  record_coordinated(locks_checkpoint_capture(machine_, store_, resume_data()));
  checkpoint_cost_ = static_cast<double>(machine_.graph().size() - before) * scenario_.protocol.seconds_per_event;
  for (auto& pr : procs_) pr.joined = false;
  locks_requested_ = false;
}

void Simulation::demand_checkpoints() {
  const auto budget = scenario_.protocol.log_budget;
  if (budget == 0) return;
  for (std::uint32_t p = 0; p < procs_.size(); ++p) {
    const ProcessId requester{p};
    if (machine_.crashed(requester)) continue;
    while (log_.entries_held(requester) > budget) {
      const auto victim = choose_victim(log_, requester);
      if (!victim) break;
      CheckpointConfirmation conf;
      try {
        conf = demand_checkpoint(machine_, store_, log_, requester, *victim);
      } catch (const CrashedProcessError&) {
        break;
      }
      ++report_.demand_checkpoints;
      if (conf.trimmed == 0) break;
    }
  }
}

void Simulation::check_lock_safety() {
  for (std::uint32_t p = 0; p < procs_.size(); ++p) {
    const ProcessId id{p};
    if (machine_.lock_count(id) != machine_.locks_held_by(id)) ++report_.lock_safety_violations;
  }
}

void Simulation::apply_faults(bool at_end) {
  std::vector<ProcessId> victims;
  std::vector<FaultSpec> keep;
  bool busy = false;
  for (const auto& f : pending_faults_) {
    if (!at_end && f.step > step_) {
      keep.push_back(f);
      continue;
    }
    const ProcessId v{f.victim};
    // A crash waits until the victim's puts have been flushed and its locks
    // released, so every issued put is either logged or never happened.
    busy = busy || machine_.has_pending_puts(v) || machine_.lock_count(v) > 0;
    if (std::find(victims.begin(), victims.end(), v) == victims.end()) victims.push_back(v);
  }
  // Faults that are due together strike together.
  if (victims.empty() || (busy && !at_end)) return;
  pending_faults_ = std::move(keep);
  crash_and_recover(victims);
}

void Simulation::crash_and_recover(const std::vector<ProcessId>& victims) {
  for (std::size_t i = 0; i < victims.size(); ++i) {
    for (std::size_t j = i + 1; j < victims.size(); ++j) {
      if (store_.group_of(victims[i]) == store_.group_of(victims[j])) {
        for (auto v : victims) {
          log_.on_crash(v);
          machine_.crash(v);
        }
        report_.cf = true;
        done_ = true;
        return;
      }
    }
  }

  for (auto v : victims) {
    RecoveryRecord rec;
    rec.failed = v;
    rec.step = step_;
    rec.scheme = recovery_;
    const std::vector<Word> before(machine_.window(v).begin(), machine_.window(v).end());
    for (std::uint32_t q = 0; q < procs_.size(); ++q) {
      if (q == v.value()) continue;
      for (const auto& a : log_.put_log(ProcessId{q}, v)) rec.combining_at_crash = rec.combining_at_crash || a.combine;
    }
    if (scenario_.debug_duplicate_log_entry && !corrupted_) {
      for (std::uint32_t q = 0; q < procs_.size(); ++q) {
        if (q != v.value() && !log_.put_log(ProcessId{q}, v).empty()) {
          log_.duplicate_put_entry(ProcessId{q}, v, 0);
          corrupted_ = true;
          break;
        }
      }
    }

    log_.on_crash(v);
    machine_.crash(v);
    RecoveryPlan plan;
    try {
      plan = recover(recovery_, machine_, log_, store_, v);
    } catch (const CatastrophicFailure&) {
      report_.cf = true;
      done_ = true;
      return;
    }
    ++report_.recoveries;
    rec.fallback = plan.fallback;
    rec.fallback_reason = plan.fallback_reason;
    rec.fetched = plan.put_logs.size() + plan.get_logs.size();
    rec.replay_trace = plan.replay_trace;

    if (!plan.fallback) {
      report_.replayed += plan.replay_trace.size();
      rec.exactly_once_error = check_exactly_once(plan);
      rec.order_error = check_replay_order(plan, recovery_);
      const auto after = machine_.window(v);
      rec.window_restored = std::equal(before.begin(), before.end(), after.begin(), after.end());
    } else {
      const auto resume = fallback_rollback(machine_, log_, store_);
      for (std::size_t p = 0; p < procs_.size(); ++p) {
        procs_[p] = Proc{p < resume.size() ? static_cast<std::size_t>(resume[p]) : 0, Wait::None, false};
      }
      locks_requested_ = false;
      last_checkpoint_step_ = step_;
      ++report_.fallbacks;
    }
    report_.recoveries_log.push_back(std::move(rec));
  }
}

bool Simulation::step_once() {
  apply_faults(false);
  if (done_) return false;

  if (locks_requested_) join_idle_processes();
  if (locks_requested_ && machine_.barrier_ready()) capture_locks_checkpoint();

  std::vector<std::uint32_t> runnable;
  for (std::uint32_t p = 0; p < procs_.size(); ++p) {
    const auto& pr = procs_[p];
    if (finished(p) || pr.joined || pr.wait == Wait::Gsync || machine_.crashed(ProcessId{p})) continue;
    if (pr.wait == Wait::Lock) {
      const auto& op = workload_.programs[p][pr.pc];
      if (machine_.lock_holder(ProcessId{op.target}, op.str)) continue;
    }
    runnable.push_back(p);
  }
  if (runnable.empty()) {
    bool all_done = true;
    for (std::size_t p = 0; p < procs_.size(); ++p) all_done = all_done && finished(p);
    if (!all_done) {
      report_.deadlock = true;
      report_.error = "no process can make progress at step " + std::to_string(step_);
    }
    return false;
  }

  const auto p = runnable[std::uniform_int_distribution<std::size_t>(0, runnable.size() - 1)(rng_)];
  const ProcessId id{p};
  auto& pr = procs_[p];

  if (locks_requested_ && machine_.lock_count(id) == 0) {
    locks_checkpoint_join(machine_, id);
    pr.joined = true;
    if (machine_.barrier_ready()) capture_locks_checkpoint();
  } else {
    switch (execute_op(machine_, id, workload_.programs[p][pr.pc])) {
      case OpResult::Blocked:
        pr.wait = Wait::Lock;
        break;
      case OpResult::Done:
        pr.wait = Wait::None;
        ++pr.pc;
        break;
      case OpResult::InGsync:
        pr.wait = Wait::Gsync;
        ++pr.pc;
        if (machine_.gsync_ready()) {
          machine_.gsync_complete();
          for (auto& other : procs_) {
            if (other.wait == Wait::Gsync) other.wait = Wait::None;
          }
          after_gsync();
        }
        break;
    }
  }

  ++step_;
  demand_checkpoints();
  maybe_request_locks_checkpoint();
  check_lock_safety();
  return true;
}

void Simulation::finish() {
  apply_faults(true);
  report_.digest = memory_digest(machine_);
  report_.event_count = machine_.graph().size();
  report_.steps = step_;
}

bool Simulation::advance(std::uint64_t steps) {
  for (std::uint64_t i = 0; i < steps; ++i) {
    if (done_ || step_ >= scenario_.max_steps) return false;
    try {
      if (!step_once()) {
        done_ = true;
        return false;
      }
    } catch (const Error& e) {
      report_.error = e.what();
      done_ = true;
      return false;
    }
  }
  return !done_;
}

Report Simulation::run() {
  while (advance(1024)) {
  }
  if (!report_.cf && step_ >= scenario_.max_steps && report_.error.empty()) {
    report_.error = "step limit of " + std::to_string(scenario_.max_steps) + " reached";
  }
  try {
    if (!report_.cf) finish();
    else {
      report_.digest = memory_digest(machine_);
      report_.event_count = machine_.graph().size();
      report_.steps = step_;
    }
  } catch (const Error& e) {
    report_.error = e.what();
  }
  return report_;
}

Report run_scenario(const Scenario& s) { return Simulation(s).run(); }

std::uint64_t reference_run(const Scenario& s) { return Simulation(s, false).run().digest; }

std::optional<std::string> check_against_reference(const Scenario& s, const Report& r) {
  if (r.cf) return std::nullopt;
  const auto w = build_workload(s);
  const bool oblivious = w.access_deterministic && !w.has_combining && s.protocol.access_deterministic;
  if (!oblivious && r.fallbacks > 0) return std::nullopt;
  const auto ref = reference_run(s);
  if (ref == r.digest) return std::nullopt;
  return "final memory differs from the fault-free run";
}

std::vector<Report> run_batch_serial(const std::vector<Scenario>& batch) {
  std::vector<Report> out;
  out.reserve(batch.size());
  for (const auto& s : batch) out.push_back(run_scenario(s));
  return out;
}

std::vector<Report> run_batch(const std::vector<Scenario>& batch, int threads) {
  std::vector<Report> out(batch.size());
  const long n = static_cast<long>(batch.size());
#ifdef _OPENMP
  if (threads <= 0) {
    if (const char* env = std::getenv("RMAFT_THREADS")) threads = std::atoi(env);
  }
  if (threads <= 0) threads = omp_get_max_threads();
#else
  (void)threads;
#endif
  std::vector<std::string> errors(batch.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (long i = 0; i < n; ++i) {
    try {
      out[i] = run_scenario(batch[i]);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) throw ScenarioError("scenario " + std::to_string(i) + ": " + errors[i]);
  }
  return out;
}

}  // namespace rmaft
