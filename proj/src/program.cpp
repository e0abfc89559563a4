#include "rmaft/program.hpp"

#include <array>
#include <string>
#include <utility>

#include "rmaft/errors.hpp"

namespace rmaft {

namespace {

constexpr std::array<std::pair<OpKind, std::string_view>, 13> kNames{{
    {OpKind::Put, "put"},
    {OpKind::Get, "get"},
    {OpKind::CompareSwap, "cas"},
    {OpKind::FetchAdd, "fetch_add"},
    {OpKind::Flush, "flush"},
    {OpKind::FlushAll, "flush_all"},
    {OpKind::Lock, "lock"},
    {OpKind::Unlock, "unlock"},
    {OpKind::Gsync, "gsync"},
    {OpKind::Write, "write"},
    {OpKind::Read, "read"},
    {OpKind::Wait, "wait"},
    {OpKind::CondPut, "cond_put"},
}};

}  // namespace

std::string_view to_string(OpKind k) {
  for (const auto& [kind, name] : kNames) {
    if (kind == k) return name;
  }
  return "?";
}

OpKind op_kind_from_string(std::string_view s) {
  for (const auto& [kind, name] : kNames) {
    if (name == s) return kind;
  }
  throw ScenarioError("unknown op '" + std::string(s) + "'");
}

OpResult execute_op(Machine& machine, ProcessId p, const Op& op) {
  const ProcessId trg{op.target};
  switch (op.kind) {
    case OpKind::Put:
      machine.issue_put(p, trg, op.cell, op.value, op.combine, op.blocking);
      break;
    case OpKind::Get:
      machine.issue_get(p, trg, op.cell, op.local_cell, op.blocking);
      break;
    case OpKind::CompareSwap:
      machine.issue_compare_swap(p, trg, op.cell, op.compare, op.value, op.local_cell);
      break;
    case OpKind::FetchAdd:
      machine.issue_fetch_add(p, trg, op.cell, op.value, op.local_cell);
      break;
    case OpKind::Flush:
      machine.flush(p, trg);
      break;
    case OpKind::FlushAll:
      machine.flush_all(p);
      break;
    case OpKind::Lock:
      if (!machine.try_lock(p, trg, op.str)) return OpResult::Blocked;
      break;
    case OpKind::Unlock:
      machine.unlock(p, trg, op.str);
      break;
    case OpKind::Gsync:
      machine.gsync_enter(p);
      return OpResult::InGsync;
    case OpKind::Write:
      machine.local_write(p, op.local_cell, op.value);
      break;
    case OpKind::Read:
      machine.local_read(p, op.local_cell);
      break;
    case OpKind::Wait:
      break;
    case OpKind::CondPut:
      if (machine.local_read(p, op.local_cell) == op.compare) {
        machine.issue_put(p, trg, op.cell, op.value, op.combine, op.blocking);
      }
      break;
  }
  return OpResult::Done;
}

}  // namespace rmaft
