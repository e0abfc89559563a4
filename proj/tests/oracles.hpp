#pragma once

// Independent reference computations shared by the unit and acceptance
// tests. They deliberately avoid the library's own code paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace oracle {

/// Checkpoint interval rewritten around s = sqrt(d / 2M):
///   2M s (1 + s/3 + s^2/9) - d, in long double.
inline double daly(double delta, double mtbf) {
  const long double d = delta;
  const long double m = mtbf;
  if (d >= 2.0L * m) return mtbf;
  const long double s = std::sqrt(d / (2.0L * m));
  return static_cast<double>(2.0L * m * s * (1.0L + s / 3.0L + s * s / 9.0L) - d);
}

/// Worst-case placement: D = ceil(H / G) groups, group k occupying the G
/// consecutive elements k*G, k*G + 1, ... (mod H). Averages, over every
/// x-subset of failed elements, the number of same-group pairs among them,
/// then clamps to 1. Needs G <= H <= 20.
inline double p_conditional_enumerated(unsigned h, unsigned g, unsigned x) {
  if (g > h || h > 20) throw std::invalid_argument("enumeration needs G <= H <= 20");
  const unsigned d = (h + g - 1) / g;
  std::vector<std::uint32_t> blocks;
  for (unsigned k = 0; k < d; ++k) {
    std::uint32_t mask = 0;
    for (unsigned i = 0; i < g; ++i) mask |= 1u << ((k * g + i) % h);
    blocks.push_back(mask);
  }
  std::uint64_t subsets = 0;
  std::uint64_t pairs = 0;
  for (std::uint32_t s = 0; s < (1u << h); ++s) {
    if (static_cast<unsigned>(__builtin_popcount(s)) != x) continue;
    ++subsets;
    for (auto b : blocks) {
      const std::uint64_t hit = static_cast<unsigned>(__builtin_popcount(s & b));
      pairs += hit * (hit - 1) / 2;  // 0 when hit is 0, even with wraparound
    }
  }
  const double mean = static_cast<double>(pairs) / static_cast<double>(subsets);
  return std::min(1.0, mean);
}

/// Bitwise parity of equally sized payloads, one byte at a time.
inline std::vector<std::int64_t> parity_bytes(const std::vector<std::vector<std::int64_t>>& payloads,
                                              std::size_t cells) {
  std::vector<unsigned char> acc(cells * 8, 0);
  for (const auto& p : payloads) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p.data());
    for (std::size_t i = 0; i < cells * 8; ++i) acc[i] = static_cast<unsigned char>(acc[i] ^ bytes[i]);
  }
  std::vector<std::int64_t> out(cells);
  std::copy(acc.begin(), acc.end(), reinterpret_cast<unsigned char*>(out.data()));
  return out;
}

}  // namespace oracle
