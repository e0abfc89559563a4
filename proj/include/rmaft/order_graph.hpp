#pragma once

#include <cstdint>
#include <limits>
#include <variant>
#include <vector>

#include "rmaft/types.hpp"

namespace rmaft {

enum class InternalKind : std::uint8_t {
  Read,
  Write,
  Checkpoint,
  Replay,
  Rollback,
  BarrierEnter,
  BarrierExit,
  GsyncExit,
  Crash,
};

std::string_view to_string(InternalKind k);

/// Local events: reads, writes, checkpoint captures, replays of logged
/// accesses during recovery, and the collective bookkeeping events.
struct InternalEvent {
  InternalKind kind = InternalKind::Read;
  std::size_t cell = 0;
  Word value = 0;
  std::uint64_t ref = 0;  // checkpoint seq, or the replayed action id
};

enum class EventKind : std::uint8_t { Access, Sync, Internal };

using EventBody = std::variant<Action, SyncAction, InternalEvent>;

struct Event {
  std::uint64_t index = 0;
  ProcessId process;
  EventBody body;

  EventKind kind() const { return static_cast<EventKind>(body.index()); }
  /// Sync actions plus barrier and gsync bookkeeping.
  bool synchronizing() const;
};

enum class Relation : std::uint8_t { po, so, hb, co, cohb };
enum class Ordering : std::uint8_t { Before, After, Parallel };

std::string_view to_string(Relation r);

/// Append-only trace with the po, so and co base edges. hb is the
/// transitive closure of po and so; co is the closure of
///   access -> the sync that closes its epoch,
///   sync or internal event -> its po successor,
///   every so edge;
/// cohb is the intersection of the two closures. Every edge points forward
/// in the trace, so closures are computed by forward search on demand.
class OrderGraph {
 public:
  static constexpr std::uint64_t kNone = std::numeric_limits<std::uint64_t>::max();

  explicit OrderGraph(std::size_t processes = 0);

  std::uint64_t append(ProcessId p, EventBody body);
  void add_so_edge(std::uint64_t from, std::uint64_t to);
  void add_closing_edge(std::uint64_t access, std::uint64_t closer);

  std::size_t size() const { return events_.size(); }
  std::size_t processes() const { return last_.size(); }
  const Event& event(std::uint64_t index) const;
  Action& action(std::uint64_t index);
  const std::vector<Event>& events() const { return events_; }

  /// True iff `a` precedes `b` in `rel`.
  bool ordered(std::uint64_t a, std::uint64_t b, Relation rel) const;
  Ordering query(std::uint64_t a, std::uint64_t b, Relation rel) const;

  /// All events reachable from `from` (exclusive) in hb or co.
  std::vector<bool> reachable(std::uint64_t from, Relation rel) const;

  /// Independent cycle check over po and so edges.
  bool hb_acyclic() const;

  void clear();

 private:
  void check(std::uint64_t index) const;
  template <typename Visit>
  void for_each_successor(std::uint64_t e, Relation rel, Visit&& visit) const;
  bool reaches(std::uint64_t a, std::uint64_t b, Relation rel) const;

  std::vector<Event> events_;
  std::vector<std::uint64_t> po_next_;
  std::vector<std::vector<std::uint64_t>> so_out_;
  std::vector<std::vector<std::uint64_t>> close_out_;
  std::vector<std::uint64_t> last_;
};

}  // namespace rmaft
