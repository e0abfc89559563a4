#pragma once

namespace rmaft {

struct DalyParams {
  double delta = 0.0;  // seconds to take one checkpoint
  double mtbf = 0.0;   // mean time between failures, seconds
};

/// Near-optimal spacing between coordinated checkpoints, in seconds.
///   sqrt(2 d M) * (1 + sqrt(d / 2M) / 3 + (d / 2M) / 9) - d   if d < 2M
///   M                                                         otherwise
double daly_interval(const DalyParams& p);

}  // namespace rmaft
