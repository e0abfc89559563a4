#include "rmaft/xor_kernels.hpp"

#include <cstddef>

#include "rmaft/errors.hpp"

namespace rmaft {

namespace {

// Below this many cells the thread start-up costs more than the loop.
constexpr std::ptrdiff_t kParallelCells = 1 << 14;

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw ArgumentError("payload sizes differ");
}

}  // namespace

void xor_into_serial(std::span<Word> dst, std::span<const Word> src) {
  check_sizes(dst.size(), src.size());
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] ^= src[i];
}

void xor_into(std::span<Word> dst, std::span<const Word> src) {
  check_sizes(dst.size(), src.size());
  const auto n = static_cast<std::ptrdiff_t>(dst.size());
  Word* d = dst.data();
  const Word* s = src.data();
#pragma omp parallel for simd schedule(static) if (n >= kParallelCells)
  for (std::ptrdiff_t i = 0; i < n; ++i) d[i] ^= s[i];
}

std::vector<Word> xor_reduce_serial(std::span<const std::span<const Word>> payloads) {
  if (payloads.empty()) return {};
  std::vector<Word> out(payloads.front().begin(), payloads.front().end());
  for (std::size_t k = 1; k < payloads.size(); ++k) xor_into_serial(out, payloads[k]);
  return out;
}

std::vector<Word> xor_reduce(std::span<const std::span<const Word>> payloads) {
  if (payloads.empty()) return {};
  const std::size_t cells = payloads.front().size();
  for (const auto& p : payloads) check_sizes(p.size(), cells);
  std::vector<Word> out(cells, 0);
  const auto n = static_cast<std::ptrdiff_t>(cells);
  Word* o = out.data();
  // Parallel over cells, each thread folding every payload into its chunk.
#pragma omp parallel for schedule(static) if (n >= kParallelCells)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    Word acc = 0;
    for (const auto& p : payloads) acc ^= p[static_cast<std::size_t>(i)];
    o[i] = acc;
  }
  return out;
}

}  // namespace rmaft
