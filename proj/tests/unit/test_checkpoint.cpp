#include <random>

#include "doctest.h"
#include "rmaft/checkpoint.hpp"
#include "rmaft/errors.hpp"
#include "rmaft/xor_kernels.hpp"

using namespace rmaft;

namespace {

const ProcessId p0{0}, p1{1}, p2{2}, p3{3};

struct Rig {
  Machine m;
  FtLog log;
  CheckpointStore store;

  Rig(std::size_t n, std::size_t groups, std::size_t cells = 8)
      : m(MachineConfig{n, cells, true}), log(m), store(n, cells, groups) {
    m.set_observer(&log);
  }
};

// Shadow parity: XOR of every member payload, one word at a time.
std::vector<Word> shadow_parity(const std::vector<std::vector<Word>>& payloads, std::size_t cells) {
  std::vector<Word> out(cells, 0);
  for (const auto& p : payloads) {
    for (std::size_t i = 0; i < cells; ++i) out[i] = out[i] ^ p[i];
  }
  return out;
}

}  // namespace

TEST_CASE("xor parity of two bytes") {
  XorGroup g({p0, p1}, 1);
  g.xor_update(p0, std::vector<Word>{0}, std::vector<Word>{0x0F});
  g.xor_update(p1, std::vector<Word>{0}, std::vector<Word>{0xF0});
  CHECK(g.parity()[0] == 0xFF);
  const std::vector<Word> second{0xF0};
  const std::vector<std::span<const Word>> survivors{second};
  CHECK(g.xor_recover(p0, survivors)[0] == 0x0F);
}

TEST_CASE("single-member group parity is the payload") {
  XorGroup g({p2}, 3);
  const std::vector<Word> payload{1, 2, 3};
  g.xor_update(p2, std::vector<Word>(3, 0), payload);
  CHECK(std::vector<Word>(g.parity().begin(), g.parity().end()) == payload);
  CHECK(g.xor_recover(p2, {}) == payload);
}

TEST_CASE("xor recovery of every member against a shadow parity") {
  std::mt19937_64 rng(7);
  for (std::size_t size = 1; size <= 6; ++size) {
    std::vector<ProcessId> members;
    for (std::uint32_t i = 0; i < size; ++i) members.emplace_back(i);
    XorGroup g(members, 64);
    std::vector<std::vector<Word>> payloads(size, std::vector<Word>(64));
    for (std::size_t i = 0; i < size; ++i) {
      for (auto& w : payloads[i]) w = static_cast<Word>(rng());
      g.xor_update(members[i], std::vector<Word>(64, 0), payloads[i]);
    }
    const auto parity = shadow_parity(payloads, 64);
    CHECK(std::equal(parity.begin(), parity.end(), g.parity().begin()));
    for (std::size_t lost = 0; lost < size; ++lost) {
      std::vector<std::span<const Word>> survivors;
      for (std::size_t i = 0; i < size; ++i) {
        if (i != lost) survivors.emplace_back(payloads[i]);
      }
      CHECK(g.xor_recover(members[lost], survivors) == payloads[lost]);
    }
  }
}

TEST_CASE("xor recovery needs every other member") {
  XorGroup g({p0, p1, p2}, 2);
  const std::vector<Word> one{1, 1};
  const std::vector<std::span<const Word>> survivors{one};
  CHECK_THROWS_AS(g.xor_recover(p0, survivors), CatastrophicFailure);
}

TEST_CASE("checkpoint with an open epoch is rejected") {
  Rig r(2, 1);
  r.m.issue_put(p0, p1, 0, 5, false);
  CHECK_THROWS_AS(r.store.capture(r.m, p0), ProtocolError);
  r.m.flush(p0, p1);
  CHECK_NOTHROW(r.store.capture(r.m, p0));
}

TEST_CASE("store recovers a crashed member's latest checkpoint") {
  Rig r(4, 2);
  CHECK(r.store.group_count() == 2);
  CHECK(r.store.group_of(p1) == 0);
  CHECK(r.store.group_of(p2) == 1);
  r.m.local_write(p1, 3, 44);
  r.store.commit(r.store.capture(r.m, p1));
  r.m.local_write(p0, 2, 9);
  r.store.commit(r.store.capture(r.m, p0));
  r.m.crash(p1);
  const auto payload = r.store.recover_payload(r.m, p1);
  CHECK(payload[3] == 44);
  r.m.crash(p0);
  CHECK_THROWS_AS(r.store.recover_payload(r.m, p1), CatastrophicFailure);
}

TEST_CASE("gsync checkpoint is consistent") {
  Rig r(4, 2);
  r.m.issue_put(p0, p1, 0, 1, false);
  r.m.issue_put(p2, p3, 1, 2, false);
  r.m.issue_get(p3, p0, 0, 2);
  r.m.gsync();
  const auto set = coordinated_checkpoint_gsync(r.m, r.store, false);
  CHECK(set.members.size() == 4);
  CHECK(rma_consistency_check(set.members, r.m.graph()).consistent);
}

TEST_CASE("gsync checkpoint away from a gsync point is rejected") {
  Rig r(2, 1);
  r.m.gsync();
  r.m.issue_put(p0, p1, 0, 1, false);
  CHECK_THROWS_AS(coordinated_checkpoint_gsync(r.m, r.store, false), ProtocolError);
}

TEST_CASE("locks checkpoint waits for the lock counter") {
  Rig r(3, 1);
  r.m.try_lock(p0, p1);
  r.m.issue_put(p0, p1, 0, 3, false);
  CHECK_THROWS_AS(locks_checkpoint_join(r.m, p0), ProtocolError);
  locks_checkpoint_join(r.m, p2);
  r.m.unlock(p0, p1);
  locks_checkpoint_join(r.m, p0);
  locks_checkpoint_join(r.m, p1);
  const auto set = locks_checkpoint_capture(r.m, r.store);
  CHECK(set.members[1].payload[0] == 3);
  CHECK(rma_consistency_check(set.members, r.m.graph()).consistent);
}

TEST_CASE("checker flags a capture ordered before another through a put") {
  // p0 captures, puts to p1 and closes the epoch; a gsync then carries both
  // orders to p1, which captures afterwards.
  Rig r(2, 1);
  const auto c0 = r.store.capture(r.m, p0);
  r.m.issue_put(p0, p1, 0, 5, false);
  r.m.flush(p0, p1);
  r.m.gsync();
  const auto c1 = r.store.capture(r.m, p1);
  const std::vector<Checkpoint> set{c0, c1};
  const auto result = rma_consistency_check(set, r.m.graph());
  CHECK_FALSE(result.consistent);
  REQUIRE(result.violation);
  CHECK(result.violation->first == p0);
  CHECK(result.violation->second == p1);
}

TEST_CASE("a single checkpoint is always consistent") {
  Rig r(1, 1);
  const std::vector<Checkpoint> set{r.store.capture(r.m, p0)};
  CHECK(rma_consistency_check(set, r.m.graph()).consistent);
}

TEST_CASE("demand checkpoint trims the requester's logs") {
  Rig r(2, 1);
  const std::size_t budget = 10;
  for (int i = 0; i < 11; ++i) {
    r.m.issue_put(p0, p1, static_cast<std::size_t>(i % 8), i, false);
    r.m.flush(p0, p1);
  }
  REQUIRE(r.log.entries_held(p0) > budget);
  const auto victim = choose_victim(r.log, p0);
  REQUIRE(victim);
  CHECK(*victim == p1);
  const auto conf = demand_checkpoint(r.m, r.store, r.log, p0, *victim);
  CHECK(conf.trimmed == 11);
  CHECK(r.log.entries_held(p0) <= budget);
  CHECK(conf.meta.epoch_in[0] == r.m.epoch(p0, p1));
  CHECK(conf.meta.gnc == r.m.gsync_counter(p1));
  CHECK(conf.meta.gc == r.m.get_counter(p1));
  CHECK(conf.meta.sc == r.m.sync_counter(p1));
  CHECK(r.store.latest(p1).seq == conf.seq);
}

TEST_CASE("demand checkpoints on one victim are serialized by its buffer lock") {
  Rig r(3, 1);
  r.m.issue_put(p0, p2, 0, 1, false);
  r.m.flush(p0, p2);
  REQUIRE(r.m.try_lock_structure(p2, kCheckpointStructure, p1));
  CHECK_THROWS_AS(demand_checkpoint(r.m, r.store, r.log, p0, p2), ProtocolError);
  r.m.unlock_structure(p2, kCheckpointStructure, p1);
  const auto a = demand_checkpoint(r.m, r.store, r.log, p0, p2);
  const auto b = demand_checkpoint(r.m, r.store, r.log, p1, p2);
  CHECK(b.seq == a.seq + 1);
}

TEST_CASE("no victim without logs") {
  Rig r(2, 1);
  CHECK_FALSE(choose_victim(r.log, p0));
}
