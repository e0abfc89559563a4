#include "doctest.h"
#include "rmaft/errors.hpp"
#include "rmaft/recovery.hpp"

using namespace rmaft;

namespace {

const ProcessId p0{0}, p1{1}, p2{2};

Action put(std::uint64_t id, ProcessId src, Counter gnc, Counter ec, Counter sc = 0) {
  Action a;
  a.id = id;
  a.type = AccessType::Put;
  a.src = src;
  a.trg = p2;
  a.gnc = gnc;
  a.ec = ec;
  a.sc = sc;
  return a;
}

Action get(std::uint64_t id, Counter gnc, Counter gc) {
  Action a;
  a.id = id;
  a.type = AccessType::Get;
  a.src = p2;
  a.trg = p0;
  a.gnc = gnc;
  a.gc = gc;
  return a;
}

std::vector<std::uint64_t> ids(const std::vector<Action>& v) {
  std::vector<std::uint64_t> out;
  for (const auto& a : v) out.push_back(a.id);
  return out;
}

struct Rig {
  Machine m;
  FtLog log;
  CheckpointStore store;

  explicit Rig(std::size_t n, LoggingConfig cfg = {}, std::size_t groups = 1)
      : m(MachineConfig{n, 8, true}), log(m, cfg), store(n, 8, groups) {
    m.set_observer(&log);
    for (const auto& c : coordinated_checkpoint_locks(m, store).members) trim_after_checkpoint(log, c);
  }

  void crash(ProcessId p) {
    log.on_crash(p);
    m.crash(p);
  }
};

}  // namespace

TEST_CASE("gsync replay order by hand") {
  const std::vector<Action> puts{put(3, p0, 2, 1), put(2, p0, 1, 2), put(1, p0, 1, 1)};
  CHECK(ids(order_gsync_replay(puts, {})) == std::vector<std::uint64_t>{1, 2, 3});
}

TEST_CASE("gsync replay puts before gets of a stratum, gets by get counter") {
  const std::vector<Action> puts{put(10, p1, 0, 0), put(11, p0, 1, 0)};
  const std::vector<Action> gets{get(20, 0, 5), get(21, 0, 4), get(22, 1, 0)};
  CHECK(ids(order_gsync_replay(puts, gets)) == std::vector<std::uint64_t>{10, 21, 20, 11, 22});
}

TEST_CASE("equal counters go to the lower peer, then issue order") {
  const std::vector<Action> puts{put(7, p1, 0, 0), put(9, p0, 0, 0), put(8, p0, 0, 0)};
  CHECK(ids(order_gsync_replay(puts, {})) == std::vector<std::uint64_t>{8, 9, 7});
}

TEST_CASE("locks replay order by hand") {
  const std::vector<Action> puts{put(3, p1, 0, 1, 2), put(2, p0, 0, 2, 1), put(1, p0, 0, 1, 1)};
  CHECK(ids(order_locks_replay(puts)) == std::vector<std::uint64_t>{1, 2, 3});
}

TEST_CASE("recovery from empty logs restores the checkpoint only") {
  Rig r(3);
  r.m.local_write(p1, 0, 12);
  r.store.commit(r.store.capture(r.m, p1));
  r.crash(p1);
  const auto plan = recover_gsync(r.m, r.log, r.store, p1);
  CHECK_FALSE(plan.fallback);
  CHECK(plan.replay_trace.empty());
  CHECK_FALSE(r.m.crashed(p1));
  CHECK(r.m.cell(p1, 0) == 12);
}

TEST_CASE("gsync recovery replays puts and gets exactly once") {
  Rig r(3);
  r.m.issue_put(p0, p1, 0, 4, false);
  r.m.issue_put(p2, p1, 1, 5, false);
  r.m.flush(p0, p1);
  r.m.gsync();
  r.m.issue_put(p0, p1, 0, 6, false);
  r.m.issue_get(p1, p2, 1, 3);
  r.m.flush_all(p0);
  r.m.flush_all(p1);
  const std::vector<Word> before(r.m.window(p1).begin(), r.m.window(p1).end());

  r.crash(p1);
  const auto plan = recover_gsync(r.m, r.log, r.store, p1);
  REQUIRE_FALSE(plan.fallback);
  CHECK(plan.put_logs.size() == 3);
  CHECK(plan.get_logs.size() == 1);
  CHECK(plan.replay_trace.size() == 4);
  CHECK_FALSE(check_exactly_once(plan));
  CHECK_FALSE(check_replay_order(plan, RecoveryScheme::Gsync));
  CHECK(std::equal(before.begin(), before.end(), r.m.window(p1).begin()));
}

TEST_CASE("lock-ordered puts from two peers replay in sync counter order") {
  Rig r(3);
  r.m.try_lock(p2, p1);
  r.m.issue_put(p2, p1, 0, 1, false);
  r.m.unlock(p2, p1);
  r.m.try_lock(p0, p1);
  r.m.issue_put(p0, p1, 0, 2, false);
  r.m.unlock(p0, p1);
  r.m.try_lock(p2, p1);
  r.m.issue_put(p2, p1, 0, 3, false);
  r.m.unlock(p2, p1);
  REQUIRE(r.m.cell(p1, 0) == 3);
  r.crash(p1);
  const auto plan = recover_locks(r.m, r.log, r.store, p1);
  REQUIRE_FALSE(plan.fallback);
  REQUIRE(plan.replay_trace.size() == 3);
  CHECK(plan.replay_trace[0].src == p2);
  CHECK(plan.replay_trace[1].src == p0);
  CHECK(plan.replay_trace[2].src == p2);
  CHECK_FALSE(check_replay_order(plan, RecoveryScheme::Locks));
  CHECK(r.m.cell(p1, 0) == 3);
}

TEST_CASE("M flag falls back without replaying anything") {
  Rig r(3);
  r.m.issue_put(p0, p1, 0, 4, true);
  r.m.flush(p0, p1);
  r.crash(p1);
  const auto plan = recover_gsync(r.m, r.log, r.store, p1);
  CHECK(plan.fallback);
  CHECK(plan.replay_trace.empty());
  CHECK(r.m.crashed(p1));
}

TEST_CASE("N flag falls back") {
  Rig r(3);
  r.m.issue_get(p1, p0, 0, 0);
  r.crash(p1);
  const auto plan = recover_gsync(r.m, r.log, r.store, p1);
  CHECK(plan.fallback);
}

TEST_CASE("unlogged committed put (orphan) falls back instead of losing the put") {
  // The put is issued and committed, but with optimistic logging the issuer
  // has not recorded it yet when the target fails.
  Rig r(3, LoggingConfig{true, true});
  r.m.issue_put(p0, p1, 2, 77, false);
  r.m.flush(p0, p1);
  REQUIRE(r.m.cell(p1, 2) == 77);
  REQUIRE(r.log.put_log(p0, p1).empty());
  r.crash(p1);
  const auto plan = recover_gsync(r.m, r.log, r.store, p1);
  CHECK(plan.fallback);
}

TEST_CASE("the same put logged before its epoch closes is replayed") {
  Rig r(3);
  r.m.issue_put(p0, p1, 2, 77, false);
  r.m.flush(p0, p1);
  r.crash(p1);
  const auto plan = recover_gsync(r.m, r.log, r.store, p1);
  REQUIRE_FALSE(plan.fallback);
  CHECK(r.m.cell(p1, 2) == 77);
}

TEST_CASE("logs lost with a crashed peer force a fallback") {
  Rig r(3);
  r.m.issue_put(p0, p1, 0, 1, false);
  r.m.flush(p0, p1);
  r.crash(p0);
  recover_gsync(r.m, r.log, r.store, p0);
  r.crash(p1);
  CHECK(recover_gsync(r.m, r.log, r.store, p1).fallback);
}

TEST_CASE("fallback rolls every process back") {
  Rig r(3);
  r.m.issue_put(p0, p1, 0, 5, false);
  r.m.gsync();
  r.m.gsync();
  auto set = coordinated_checkpoint_gsync(r.m, r.store, false, {7, 8, 9});
  const auto gnc = r.m.gsync_counter(p0);
  r.m.gsync();
  r.m.issue_put(p2, p1, 0, 9, true);
  r.m.flush(p2, p1);
  REQUIRE_FALSE(r.log.put_log(p2, p1).empty());
  r.crash(p1);
  REQUIRE(recover_gsync(r.m, r.log, r.store, p1).fallback);
  const auto resume = fallback_rollback(r.m, r.log, r.store);
  CHECK(resume == std::vector<std::uint64_t>{7, 8, 9});
  for (std::uint32_t p = 0; p < 3; ++p) {
    CHECK(r.m.gsync_counter(ProcessId{p}) == gnc);
    CHECK(r.log.entries_held(ProcessId{p}) == 0);
    CHECK_FALSE(r.m.crashed(ProcessId{p}));
  }
  CHECK(r.m.cell(p1, 0) == 5);
  const auto digest_once = std::vector<Word>(r.m.window(p1).begin(), r.m.window(p1).end());
  fallback_rollback(r.m, r.log, r.store);
  CHECK(std::equal(digest_once.begin(), digest_once.end(), r.m.window(p1).begin()));
  CHECK(r.m.gsync_counter(p2) == gnc);
}

TEST_CASE("exactly-once checker catches a duplicated determinant") {
  RecoveryPlan plan;
  plan.put_logs = {put(1, p0, 0, 0)};
  plan.replay_trace = {determinant_of(plan.put_logs[0]), determinant_of(plan.put_logs[0])};
  CHECK(check_exactly_once(plan));
  plan.replay_trace.pop_back();
  CHECK_FALSE(check_exactly_once(plan));
}

TEST_CASE("order checker catches a decreasing epoch") {
  RecoveryPlan plan;
  plan.replay_trace = {determinant_of(put(1, p0, 0, 2)), determinant_of(put(2, p0, 0, 1))};
  CHECK(check_replay_order(plan, RecoveryScheme::Gsync));
  CHECK(check_replay_order(plan, RecoveryScheme::Locks));
  // A later sync counter may carry a smaller epoch.
  plan.replay_trace = {determinant_of(put(1, p0, 0, 2, 1)), determinant_of(put(2, p0, 0, 1, 2))};
  CHECK_FALSE(check_replay_order(plan, RecoveryScheme::Locks));
}
