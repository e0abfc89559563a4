#include "doctest.h"
#include "rmaft/errors.hpp"
#include "rmaft/logging.hpp"
#include "rmaft/machine.hpp"

using namespace rmaft;

namespace {

const ProcessId p0{0}, p1{1}, p2{2};

struct Rig {
  Machine m{MachineConfig{3, 8, true}};
  FtLog log;

  explicit Rig(LoggingConfig cfg = {}) : log(m, cfg) { m.set_observer(&log); }
};

}  // namespace

TEST_CASE("replacing put is logged without raising M") {
  Rig r;
  r.m.issue_put(p0, p1, 0, 5, false);
  REQUIRE(r.log.put_log(p0, p1).size() == 1);
  CHECK(r.log.put_log(p0, p1)[0].data.value == 5);
  CHECK_FALSE(r.log.m_flag(p0, p1));
}

TEST_CASE("combining put raises M") {
  Rig r;
  r.m.issue_put(p0, p1, 0, 5, true);
  CHECK(r.log.m_flag(p0, p1));
}

TEST_CASE("without access determinism every put raises M") {
  Rig r(LoggingConfig{false, false});
  r.m.issue_put(p0, p1, 0, 5, false);
  CHECK(r.log.m_flag(p0, p1));
}

TEST_CASE("two puts in one epoch share the epoch counter") {
  Rig r;
  r.m.issue_put(p0, p1, 0, 1, false);
  r.m.issue_put(p0, p1, 1, 2, false);
  const auto lp = r.log.put_log(p0, p1);
  REQUIRE(lp.size() == 2);
  CHECK(lp[0].ec == lp[1].ec);
  CHECK(lp[0].id < lp[1].id);
}

TEST_CASE("a put cannot be logged after its epoch closed") {
  Rig r;
  const auto a = r.m.issue_put(p0, p1, 0, 1, false);
  r.m.flush(p0, p1);
  CHECK_THROWS_AS(r.log.log_put(a, r.m.epoch(p0, p1)), ProtocolError);
}

TEST_CASE("two-phase get logging") {
  Rig r;
  r.m.issue_put(p2, p1, 3, 17, false);
  r.m.flush(p2, p1);
  r.m.issue_get(p0, p1, 3, 4);
  CHECK(r.log.n_flag(p1, p0));
  CHECK(r.log.pending_gets(p0).size() == 1);
  CHECK(r.log.get_log(p1, p0).empty());
  r.m.flush(p0, p1);
  CHECK(r.log.pending_gets(p0).empty());
  REQUIRE(r.log.get_log(p1, p0).size() == 1);
  CHECK(r.log.get_log(p1, p0)[0].data.value == 17);
  CHECK_FALSE(r.log.n_flag(p1, p0));
}

TEST_CASE("blocking get clears N before it returns") {
  Rig r;
  r.m.issue_get(p0, p1, 0, 0, true);
  CHECK_FALSE(r.log.n_flag(p1, p0));
  CHECK(r.log.get_log(p1, p0).size() == 1);
}

TEST_CASE("crash between the two phases leaves N raised at the target") {
  Rig r;
  r.m.issue_get(p0, p1, 0, 0);
  r.log.on_crash(p0);
  r.m.crash(p0);
  CHECK(r.log.n_flag(p1, p0));
  CHECK(r.log.pending_gets(p0).empty());
}

TEST_CASE("crash drops everything stored at the victim and marks the peers") {
  Rig r;
  r.m.issue_put(p0, p1, 0, 1, false);
  r.m.issue_get(p2, p0, 0, 0, true);
  r.m.flush(p0, p1);
  CHECK(r.log.entries_held(p0) == 2);
  r.log.on_crash(p0);
  CHECK(r.log.put_log(p0, p1).empty());
  CHECK(r.log.get_log(p0, p2).empty());
  CHECK(r.log.logs_lost(p1));
  CHECK(r.log.logs_lost(p2));
  CHECK_FALSE(r.log.logs_lost(p0));
}

TEST_CASE("trimming uses a strict bound") {
  Rig r;
  r.m.issue_put(p0, p1, 0, 1, false);
  r.m.flush(p0, p1);
  r.m.issue_put(p0, p1, 0, 2, false);
  r.m.flush(p0, p1);
  REQUIRE(r.log.put_log(p0, p1).size() == 2);
  CHECK(r.log.put_log(p0, p1)[0].ec == 0);
  CHECK(r.log.put_log(p0, p1)[1].ec == 1);

  TrimBounds b;
  b.put_epoch = 1;
  CHECK(r.log.trim_logs(p0, p1, b) == 1);
  CHECK(r.log.put_log(p0, p1).size() == 1);
  CHECK(r.log.put_log(p0, p1)[0].ec == 1);
  CHECK(r.log.trim_logs(p0, p2, b) == 0);
}

TEST_CASE("entries at the checkpoint's gsync count are retained") {
  Rig r;
  r.m.issue_put(p0, p1, 0, 1, false);
  r.m.flush(p0, p1);
  const auto gnc = r.log.put_log(p0, p1)[0].gnc;
  CHECK(r.log.trim_logs(p0, p1, TrimBounds::uniform(kUnbounded, gnc, kUnbounded, kUnbounded)) == 0);
  CHECK(r.log.trim_logs(p0, p1, TrimBounds::uniform(kUnbounded, gnc + 1, kUnbounded, kUnbounded)) == 1);
}

TEST_CASE("trimming the last combining put clears M") {
  Rig r;
  r.m.issue_put(p0, p1, 0, 1, true);
  r.m.flush(p0, p1);
  CHECK(r.log.m_flag(p0, p1));
  r.log.trim_logs(p0, p1, TrimBounds::uniform(kUnbounded, kUnbounded, kUnbounded, kUnbounded));
  CHECK(r.log.put_log(p0, p1).empty());
  CHECK_FALSE(r.log.m_flag(p0, p1));
}

TEST_CASE("local write racing a remote put raises M for that source") {
  Rig r;
  r.m.issue_put(p0, p1, 2, 4, false);
  r.m.local_write(p1, 2, 9);
  CHECK(r.log.m_flag(p0, p1));
  CHECK_FALSE(r.log.m_flag(p2, p1));
}

TEST_CASE("optimistic put logging leaves a committed put unlogged until the next operation") {
  Rig r(LoggingConfig{true, true});
  r.m.issue_put(p0, p1, 0, 3, false);
  CHECK(r.log.put_log(p0, p1).empty());
  r.m.flush(p0, p1);
  CHECK(r.log.unlogged_flag(p0, p1));
  CHECK(r.log.put_log(p0, p1).empty());
  r.m.local_read(p0, 0);
  CHECK_FALSE(r.log.unlogged_flag(p0, p1));
  CHECK(r.log.put_log(p0, p1).size() == 1);
}

TEST_CASE("log statistics count every logged access") {
  Rig r;
  r.m.issue_compare_swap(p0, p1, 0, 0, 1, 0);
  r.m.flush(p0, p1);
  CHECK(r.log.stats().logged_puts == 1);
  CHECK(r.log.stats().logged_gets == 1);
}
