#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pot/types.hpp"

namespace pot {

/// 64-bit FNV-1a over the cells (8 bytes each, little-endian) followed by each
/// label and a '\n'.
std::uint64_t run_digest(const std::vector<Word>& cells, const std::vector<std::string>& labels);

/// 16 lowercase hex digits.
std::string hex_digest(std::uint64_t d);

}  // namespace pot
