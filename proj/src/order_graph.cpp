#include "rmaft/order_graph.hpp"

#include <string>

#include "rmaft/errors.hpp"

namespace rmaft {

std::string_view to_string(InternalKind k) {
  switch (k) {
    case InternalKind::Read:
      return "READ";
    case InternalKind::Write:
      return "WRITE";
    case InternalKind::Checkpoint:
      return "CHECKPOINT";
    case InternalKind::Replay:
      return "REPLAY";
    case InternalKind::Rollback:
      return "ROLLBACK";
    case InternalKind::BarrierEnter:
      return "BAR_ENTER";
    case InternalKind::BarrierExit:
      return "BAR_EXIT";
    case InternalKind::GsyncExit:
      return "GSYNC_EXIT";
    case InternalKind::Crash:
      return "CRASH";
  }
  return "?";
}

std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::po:
      return "po";
    case Relation::so:
      return "so";
    case Relation::hb:
      return "hb";
    case Relation::co:
      return "co";
    case Relation::cohb:
      return "cohb";
  }
  return "?";
}

bool Event::synchronizing() const {
  if (kind() == EventKind::Sync) return true;
  if (kind() != EventKind::Internal) return false;
  switch (std::get<InternalEvent>(body).kind) {
    case InternalKind::BarrierEnter:
    case InternalKind::BarrierExit:
    case InternalKind::GsyncExit:
      return true;
    default:
      return false;
  }
}

OrderGraph::OrderGraph(std::size_t processes) : last_(processes, kNone) {}

std::uint64_t OrderGraph::append(ProcessId p, EventBody body) {
  if (p.index() >= last_.size()) throw LookupError("event for unknown process " + std::to_string(p.value()));
  const std::uint64_t index = events_.size();
  events_.push_back(Event{index, p, std::move(body)});
  po_next_.push_back(kNone);
  so_out_.emplace_back();
  close_out_.emplace_back();
  if (last_[p.index()] != kNone) po_next_[last_[p.index()]] = index;
  last_[p.index()] = index;
  return index;
}

void OrderGraph::add_so_edge(std::uint64_t from, std::uint64_t to) {
  check(from);
  check(to);
  if (from >= to) throw ProtocolError("so edge must point forward in the trace");
  so_out_[from].push_back(to);
}

void OrderGraph::add_closing_edge(std::uint64_t access, std::uint64_t closer) {
  check(access);
  check(closer);
  if (access >= closer) throw ProtocolError("closing edge must point forward in the trace");
  close_out_[access].push_back(closer);
}

const Event& OrderGraph::event(std::uint64_t index) const {
  check(index);
  return events_[index];
}

Action& OrderGraph::action(std::uint64_t index) {
  check(index);
  auto* a = std::get_if<Action>(&events_[index].body);
  if (a == nullptr) throw LookupError("event " + std::to_string(index) + " is not an access");
  return *a;
}

void OrderGraph::check(std::uint64_t index) const {
  if (index >= events_.size()) throw LookupError("unknown event " + std::to_string(index));
}

template <typename Visit>
void OrderGraph::for_each_successor(std::uint64_t e, Relation rel, Visit&& visit) const {
  if (rel == Relation::co) {
    for (auto t : close_out_[e]) visit(t);
    for (auto t : so_out_[e]) visit(t);
    if (po_next_[e] != kNone && events_[e].kind() != EventKind::Access) visit(po_next_[e]);
    return;
  }
  // hb and so share the po + so edge set.
  if (po_next_[e] != kNone) visit(po_next_[e]);
  for (auto t : so_out_[e]) visit(t);
}

std::vector<bool> OrderGraph::reachable(std::uint64_t from, Relation rel) const {
  check(from);
  if (rel != Relation::hb && rel != Relation::co) throw ArgumentError("reachable() supports hb and co only");
  std::vector<bool> seen(events_.size(), false);
  std::vector<std::uint64_t> stack{from};
  while (!stack.empty()) {
    const auto e = stack.back();
    stack.pop_back();
    for_each_successor(e, rel, [&](std::uint64_t t) {
      if (!seen[t]) {
        seen[t] = true;
        stack.push_back(t);
      }
    });
  }
  return seen;
}

bool OrderGraph::reaches(std::uint64_t a, std::uint64_t b, Relation rel) const {
  if (a >= b) return false;
  std::vector<bool> seen(b - a + 1, false);
  std::vector<std::uint64_t> stack{a};
  while (!stack.empty()) {
    const auto e = stack.back();
    stack.pop_back();
    bool found = false;
    for_each_successor(e, rel, [&](std::uint64_t t) {
      if (t == b) found = true;
      if (t < b && !seen[t - a]) {
        seen[t - a] = true;
        stack.push_back(t);
      }
    });
    if (found) return true;
  }
  return false;
}

bool OrderGraph::ordered(std::uint64_t a, std::uint64_t b, Relation rel) const {
  check(a);
  check(b);
  if (a == b) return false;
  switch (rel) {
    case Relation::po:
      return events_[a].process == events_[b].process && a < b;
    case Relation::hb:
      return reaches(a, b, Relation::hb);
    case Relation::so:
      return events_[a].synchronizing() && events_[b].synchronizing() && reaches(a, b, Relation::hb);
    case Relation::co:
      return reaches(a, b, Relation::co);
    case Relation::cohb:
      return reaches(a, b, Relation::co) && reaches(a, b, Relation::hb);
  }
  return false;
}

Ordering OrderGraph::query(std::uint64_t a, std::uint64_t b, Relation rel) const {
  if (ordered(a, b, rel)) return Ordering::Before;
  if (ordered(b, a, rel)) return Ordering::After;
  return Ordering::Parallel;
}

bool OrderGraph::hb_acyclic() const {
  // Iterative three-colour DFS; does not rely on edges pointing forward.
  enum : std::uint8_t { White, Grey, Black };
  std::vector<std::uint8_t> colour(events_.size(), White);
  std::vector<std::pair<std::uint64_t, std::size_t>> stack;
  auto successors = [&](std::uint64_t e) {
    std::vector<std::uint64_t> out = so_out_[e];
    if (po_next_[e] != kNone) out.push_back(po_next_[e]);
    return out;
  };
  for (std::uint64_t root = 0; root < events_.size(); ++root) {
    if (colour[root] != White) continue;
    stack.emplace_back(root, 0);
    colour[root] = Grey;
    while (!stack.empty()) {
      auto& [e, next] = stack.back();
      const auto succ = successors(e);
      if (next < succ.size()) {
        const auto t = succ[next++];
        if (colour[t] == Grey) return false;
        if (colour[t] == White) {
          colour[t] = Grey;
          stack.emplace_back(t, 0);
        }
      } else {
        colour[e] = Black;
        stack.pop_back();
      }
    }
  }
  return true;
}

void OrderGraph::clear() {
  events_.clear();
  po_next_.clear();
  so_out_.clear();
  close_out_.clear();
  std::fill(last_.begin(), last_.end(), kNone);
}

}  // namespace rmaft
