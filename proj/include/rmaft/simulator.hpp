#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rmaft/checkpoint.hpp"
#include "rmaft/logging.hpp"
#include "rmaft/machine.hpp"
#include "rmaft/program.hpp"
#include "rmaft/recovery.hpp"
#include "rmaft/workloads.hpp"

namespace rmaft {

enum class WorkloadKind { RandomGsync, LockPut, KvStore, Custom };
enum class CheckpointScheme { None, Gsync, Locks };

std::string_view to_string(WorkloadKind k);
std::string_view to_string(CheckpointScheme s);

struct FaultSpec {
  std::uint32_t victim = 0;
  std::uint64_t step = 0;  // scheduler step at which the crash is due
};

struct ProtocolConfig {
  std::size_t groups = 1;
  std::size_t taware_level = 0;
  /// Log entries a process may hold before it demands a checkpoint; 0 = no
  /// limit.
  std::size_t log_budget = 0;
  CheckpointScheme scheme = CheckpointScheme::Gsync;
  /// Empty: chosen from the workload (locks for lock-put, gsync otherwise).
  std::optional<RecoveryScheme> recovery;
  /// Daly gating. mtbf = 0 checkpoints at every opportunity.
  double mtbf = 0.0;
  double seconds_per_event = 1e-3;
  /// Locks scheme without an MTBF: steps between checkpoint requests.
  std::size_t locks_interval = 50;
  bool gsync_adds_hb = true;
  bool access_deterministic = true;
  bool gsync_ckpt_barrier = true;
  bool optimistic_puts = false;
};

struct Scenario {
  std::string name = "scenario";
  std::size_t processes = 4;
  std::size_t window_cells = 32;
  WorkloadKind workload = WorkloadKind::RandomGsync;
  RandomGsyncParams gsync;
  LockPutParams lock_put;
  KvStoreParams kvstore;
  std::vector<Program> programs;  // Custom only
  ProtocolConfig protocol;
  std::vector<FaultSpec> faults;
  /// Extra faults drawn from the seed: victim uniform, step uniform in
  /// [0, random_fault_horizon).
  std::size_t random_faults = 0;
  std::uint64_t random_fault_horizon = 200;
  std::uint64_t seed = 1;
  std::uint64_t max_steps = 1'000'000;
  /// Test fixture: corrupt a put log by duplicating an entry before the
  /// first recovery.
  bool debug_duplicate_log_entry = false;
};

struct RecoveryRecord {
  ProcessId failed;
  std::uint64_t step = 0;
  RecoveryScheme scheme = RecoveryScheme::Gsync;
  bool fallback = false;
  std::string fallback_reason;
  std::size_t fetched = 0;
  /// Some peer held an untrimmed combining put for the victim.
  bool combining_at_crash = false;
  std::optional<std::string> exactly_once_error;
  std::optional<std::string> order_error;
  /// Recovered window equals the committed window just before the crash.
  bool window_restored = true;
  std::vector<Determinant> replay_trace;
};

struct Report {
  std::uint64_t digest = 0;
  std::size_t fallbacks = 0;
  bool cf = false;
  std::size_t event_count = 0;
  std::uint64_t steps = 0;
  std::size_t recoveries = 0;
  std::size_t replayed = 0;
  std::size_t demand_checkpoints = 0;
  std::size_t coordinated_checkpoints = 0;
  std::size_t consistency_checks = 0;
  std::size_t consistency_violations = 0;
  std::size_t lock_safety_violations = 0;
  bool deadlock = false;
  std::string error;
  std::vector<RecoveryRecord> recoveries_log;

  /// Descriptions of every broken invariant; empty when the run is sound.
  std::vector<std::string> failures() const;
  bool ok() const { return failures().empty(); }
};

Workload build_workload(const Scenario& s);
std::vector<FaultSpec> effective_faults(const Scenario& s);

/// FNV-1a over every window, little-endian words, process order.
std::uint64_t memory_digest(const Machine& machine);

/// One seeded execution. Owns the machine, logs and checkpoint store so
/// callers can inspect them after run().
class Simulation {
 public:
  explicit Simulation(Scenario scenario, bool inject_faults = true);
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  Report run();
  /// Runs at most `steps` scheduler steps; the run can be resumed.
  bool advance(std::uint64_t steps);

  const Machine& machine() const { return machine_; }
  const FtLog& log() const { return log_; }
  const CheckpointStore& store() const { return store_; }
  const Workload& workload() const { return workload_; }
  const Report& report() const { return report_; }
  RecoveryScheme recovery_scheme() const { return recovery_; }

 private:
  enum class Wait { None, Gsync, Lock };
  struct Proc {
    std::size_t pc = 0;
    Wait wait = Wait::None;
    bool joined = false;  // Locks-scheme checkpoint barrier
  };

  bool finished(std::size_t p) const { return procs_[p].pc >= workload_.programs[p].size(); }
  bool step_once();
  void apply_faults(bool at_end);
  void crash_and_recover(const std::vector<ProcessId>& victims);
  void after_gsync();
  void maybe_request_locks_checkpoint();
  void join_idle_processes();
  void capture_locks_checkpoint();
  void record_coordinated(const CheckpointSet& set);
  void demand_checkpoints();
  bool checkpoint_due() const;
  std::vector<std::uint64_t> resume_data() const;
  void check_lock_safety();
  void finish();

  Scenario scenario_;
  Workload workload_;
  Machine machine_;
  FtLog log_;
  CheckpointStore store_;
  RecoveryScheme recovery_;
  std::mt19937_64 rng_;
  std::vector<Proc> procs_;
  std::vector<FaultSpec> pending_faults_;
  std::uint64_t step_ = 0;
  std::uint64_t last_checkpoint_step_ = 0;
  double checkpoint_cost_ = 0.0;  // seconds, for Daly gating
  bool locks_requested_ = false;
  bool corrupted_ = false;
  bool done_ = false;
  Report report_;
};

Report run_scenario(const Scenario& s);
/// Digest of the same scenario with every fault removed.
std::uint64_t reference_run(const Scenario& s);

/// Compares a finished run with the fault-free reference where the outcome
/// must not depend on the faults: always for access-deterministic workloads
/// without combining puts, otherwise only when no fallback changed the
/// schedule. Catastrophic runs are not compared.
std::optional<std::string> check_against_reference(const Scenario& s, const Report& r);

/// Runs every scenario; the plain loop is the reference for the OpenMP one.
std::vector<Report> run_batch_serial(const std::vector<Scenario>& batch);
std::vector<Report> run_batch(const std::vector<Scenario>& batch, int threads = 0);

}  // namespace rmaft
