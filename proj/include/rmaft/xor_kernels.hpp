#pragma once

#include <span>
#include <vector>

#include "rmaft/types.hpp"

namespace rmaft {

/// dst ^= src, cell by cell. The plain version is the reference the
/// OpenMP version is tested and benchmarked against.
void xor_into_serial(std::span<Word> dst, std::span<const Word> src);
void xor_into(std::span<Word> dst, std::span<const Word> src);

/// XOR of all payloads (all must have the same length; empty input gives an
/// empty result).
std::vector<Word> xor_reduce_serial(std::span<const std::span<const Word>> payloads);
std::vector<Word> xor_reduce(std::span<const std::span<const Word>> payloads);

}  // namespace rmaft
