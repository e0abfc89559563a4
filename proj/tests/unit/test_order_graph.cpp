#include "doctest.h"
#include "rmaft/errors.hpp"
#include "rmaft/order_graph.hpp"

using namespace rmaft;

namespace {

Action access(ProcessId src, ProcessId trg) {
  Action a;
  a.src = src;
  a.trg = trg;
  return a;
}

}  // namespace

TEST_CASE("program order follows issue order") {
  OrderGraph g(2);
  const auto a = g.append(ProcessId{0}, access(ProcessId{0}, ProcessId{1}));
  const auto b = g.append(ProcessId{0}, access(ProcessId{0}, ProcessId{1}));
  const auto c = g.append(ProcessId{1}, access(ProcessId{1}, ProcessId{0}));
  CHECK(g.ordered(a, b, Relation::po));
  CHECK_FALSE(g.ordered(b, a, Relation::po));
  CHECK(g.query(a, c, Relation::hb) == Ordering::Parallel);
  CHECK(g.query(b, a, Relation::po) == Ordering::After);
}

TEST_CASE("so edges create hb across processes and edges must point forward") {
  OrderGraph g(2);
  const auto a = g.append(ProcessId{0}, InternalEvent{InternalKind::Write});
  const auto s = g.append(ProcessId{0}, SyncAction{SyncType::Unlock, ProcessId{0}, ProcessId{1}});
  const auto t = g.append(ProcessId{1}, SyncAction{SyncType::Lock, ProcessId{1}, ProcessId{1}});
  const auto b = g.append(ProcessId{1}, InternalEvent{InternalKind::Read});
  g.add_so_edge(s, t);
  CHECK(g.ordered(a, b, Relation::hb));
  CHECK(g.ordered(a, b, Relation::co));
  CHECK(g.ordered(a, b, Relation::cohb));
  CHECK_THROWS(g.add_so_edge(b, a));
  CHECK(g.hb_acyclic());
}

TEST_CASE("accesses are co-ordered only through their closing sync") {
  OrderGraph g(2);
  const auto a = g.append(ProcessId{0}, access(ProcessId{0}, ProcessId{1}));
  const auto b = g.append(ProcessId{0}, access(ProcessId{0}, ProcessId{1}));
  CHECK(g.query(a, b, Relation::co) == Ordering::Parallel);
  const auto f = g.append(ProcessId{0}, SyncAction{SyncType::Flush, ProcessId{0}, ProcessId{1}});
  g.add_closing_edge(a, f);
  g.add_closing_edge(b, f);
  const auto c = g.append(ProcessId{0}, access(ProcessId{0}, ProcessId{1}));
  CHECK(g.ordered(a, c, Relation::co));
  CHECK(g.ordered(b, c, Relation::co));
}
