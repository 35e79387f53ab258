#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "lpsim/formats.hpp"

namespace lpsim {

inline constexpr std::size_t kDefaultEnumerationCap = std::size_t{1} << 20;

// Size of the representable set, computed arithmetically (no enumeration).
// For block formats this is the per-block set size at one shared exponent.
std::size_t representable_count(const NumberFormat& fmt);

// Every exactly representable value of the format, sorted ascending, no
// duplicates, including zero and the saturation bounds. Block formats need
// the shared exponent fixed via block_exponent. Throws too_large_error when
// the set exceeds cap.
std::vector<float> enumerate_representable(
    const NumberFormat& fmt, std::optional<int> block_exponent = {},
    std::size_t cap = kDefaultEnumerationCap);

} // namespace lpsim
