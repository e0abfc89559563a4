#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "rmaft/machine.hpp"
#include "rmaft/types.hpp"

namespace rmaft {

enum class OpKind : std::uint8_t {
  Put,
  Get,
  CompareSwap,
  FetchAdd,
  Flush,
  FlushAll,
  Lock,
  Unlock,
  Gsync,
  Write,
  Read,
  Wait,
  /// Local read of `local_cell`; puts `value` to target.cell when it equals
  /// `compare`.
  CondPut,
};

std::string_view to_string(OpKind k);
OpKind op_kind_from_string(std::string_view s);

/// One step of a per-process program. Fields a kind does not use are ignored.
struct Op {
  OpKind kind = OpKind::Wait;
  std::uint32_t target = 0;
  std::size_t cell = 0;
  std::size_t local_cell = 0;
  Word value = 0;
  Word compare = 0;
  bool combine = false;
  bool blocking = false;
  StructureId str = kWholeWindow;

  friend bool operator==(const Op&, const Op&) = default;
};

using Program = std::vector<Op>;

enum class OpResult {
  Done,
  /// Lock held by someone else; retry the same op later.
  Blocked,
  /// Arrived at a gsync; the caller completes the round once all arrived.
  InGsync,
};

OpResult execute_op(Machine& machine, ProcessId p, const Op& op);

}  // namespace rmaft
