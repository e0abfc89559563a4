#include "rmaft/types.hpp"

namespace rmaft {

std::string_view to_string(AccessType t) {
  return t == AccessType::Put ? "PUT" : "GET";
}

std::string_view to_string(SyncType t) {
  switch (t) {
    case SyncType::Lock:
      return "LOCK";
    case SyncType::Unlock:
      return "UNLOCK";
    case SyncType::Flush:
      return "FLUSH";
    case SyncType::Gsync:
      return "GSYNC";
  }
  return "?";
}

std::string_view to_string(PutOp op) {
  switch (op) {
    case PutOp::Replace:
      return "replace";
    case PutOp::Accumulate:
      return "accumulate";
    case PutOp::CompareSwap:
      return "cas";
  }
  return "?";
}

Determinant determinant_of(const Action& a) {
  return Determinant{a.id, a.type, a.src, a.trg, a.combine, a.ec, a.gc, a.sc, a.gnc};
}

}  // namespace rmaft
