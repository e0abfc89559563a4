#include "rmaft/daly.hpp"

#include <cmath>

#include "rmaft/errors.hpp"

namespace rmaft {

double daly_interval(const DalyParams& p) {
  if (!(p.delta > 0.0) || !(p.mtbf > 0.0) || !std::isfinite(p.delta) || !std::isfinite(p.mtbf)) {
    throw ArgumentError("checkpoint cost and MTBF must be positive and finite");
  }
  if (p.delta >= 2.0 * p.mtbf) return p.mtbf;
  const double r = p.delta / (2.0 * p.mtbf);
  return std::sqrt(2.0 * p.delta * p.mtbf) * (1.0 + std::sqrt(r) / 3.0 + r / 9.0) - p.delta;
}

}  // namespace rmaft
