#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

namespace rmaft {

/// One window cell. Windows are arrays of 8-byte integers.
using Word = std::int64_t;
using Counter = std::uint64_t;

inline constexpr Counter kUnbounded = std::numeric_limits<Counter>::max();

class ProcessId {
 public:
  constexpr ProcessId() = default;
  constexpr explicit ProcessId(std::uint32_t id) : id_(id) {}

  constexpr std::uint32_t value() const { return id_; }
  constexpr std::size_t index() const { return id_; }

  friend constexpr auto operator<=>(ProcessId, ProcessId) = default;

 private:
  std::uint32_t id_ = 0;
};

/// Identifies a lockable structure inside a window. Application locks use
/// kWholeWindow unless a workload asks otherwise; the log structures use the
/// reserved ids below.
using StructureId = std::uint32_t;
inline constexpr StructureId kWholeWindow = 0xFFFF'FFFFu;
inline constexpr StructureId kPutLogStructure = 0xFFFF'FFFEu;
inline constexpr StructureId kGetLogStructure = 0xFFFF'FFFDu;
inline constexpr StructureId kCheckpointStructure = 0xFFFF'FFFCu;

enum class AccessType : std::uint8_t { Put, Get };
enum class SyncType : std::uint8_t { Lock, Unlock, Flush, Gsync };

/// How a put changes its target cell when it commits.
enum class PutOp : std::uint8_t { Replace, Accumulate, CompareSwap };

std::string_view to_string(AccessType t);
std::string_view to_string(SyncType t);
std::string_view to_string(PutOp op);

/// Single-cell payload of an access. For a get, `value` is only meaningful
/// once `defined` is set (the epoch has closed).
struct Payload {
  std::size_t cell = 0;
  Word value = 0;
  std::size_t local_cell = 0;
  Word compare = 0;
  PutOp op = PutOp::Replace;
  bool defined = false;

  friend bool operator==(const Payload&, const Payload&) = default;
};

/// A communication action <type, src, trg, combine, EC, GC, SC, GNC, data>.
/// `id` is the trace event that issued it; it keeps two accesses with equal
/// counters in one epoch distinguishable.
struct Action {
  std::uint64_t id = 0;
  AccessType type = AccessType::Put;
  ProcessId src;
  ProcessId trg;
  bool combine = false;
  Counter ec = 0;
  Counter gc = 0;
  Counter sc = 0;
  Counter gnc = 0;
  Payload data;
  bool blocking = false;

  friend bool operator==(const Action&, const Action&) = default;
};

/// An action without its data.
struct Determinant {
  std::uint64_t id = 0;
  AccessType type = AccessType::Put;
  ProcessId src;
  ProcessId trg;
  bool combine = false;
  Counter ec = 0;
  Counter gc = 0;
  Counter sc = 0;
  Counter gnc = 0;

  friend auto operator<=>(const Determinant&, const Determinant&) = default;
};

Determinant determinant_of(const Action& a);

/// <type, src, trg, EC, GC, SC, GNC, str>. An empty `trg` targets every
/// process (gsync, flush-all).
struct SyncAction {
  SyncType type = SyncType::Flush;
  ProcessId src;
  std::optional<ProcessId> trg;
  Counter ec = 0;
  Counter gc = 0;
  Counter sc = 0;
  Counter gnc = 0;
  std::optional<StructureId> str;

  friend bool operator==(const SyncAction&, const SyncAction&) = default;
};

}  // namespace rmaft

template <>
struct std::hash<rmaft::ProcessId> {
  std::size_t operator()(rmaft::ProcessId p) const noexcept { return std::hash<std::uint32_t>{}(p.value()); }
};
