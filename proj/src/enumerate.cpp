#include "lpsim/enumerate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "lpsim/errors.hpp"

namespace lpsim {

std::size_t representable_count(const NumberFormat& fmt) {
  validate(fmt);
  if (const auto* f = std::get_if<FixedFormat>(&fmt)) {
    return static_cast<std::size_t>(f->k_max() - f->k_min() + 1);
  }
  if (const auto* f = std::get_if<FloatFormat>(&fmt)) {
    const std::size_t binades =
        static_cast<std::size_t>(f->max_exp() - f->min_exp() + 1);
    return 2 * (std::size_t{1} << f->man_bits) * binades + 1;
  }
  const auto& b = std::get<BlockFloatFormat>(fmt);
  return std::size_t{1} << b.wl;
}

std::vector<float> enumerate_representable(const NumberFormat& fmt,
                                           std::optional<int> block_exponent,
                                           std::size_t cap) {
  validate(fmt);
  const std::size_t n = representable_count(fmt);
  if (n > cap)
    throw too_large_error("representable set has " + std::to_string(n) +
                          " values, cap is " + std::to_string(cap));

  std::vector<float> out;
  out.reserve(n);
  if (const auto* f = std::get_if<FixedFormat>(&fmt)) {
    for (std::int64_t k = f->k_min(); k <= f->k_max(); ++k)
      out.push_back(static_cast<float>(std::ldexp(static_cast<double>(k), -f->fl)));
    return out; // already ascending
  }
  if (const auto* f = std::get_if<FloatFormat>(&fmt)) {
    out.push_back(0.0f);
    const std::int64_t man_lo = std::int64_t{1} << f->man_bits;
    const std::int64_t man_hi = (std::int64_t{1} << (f->man_bits + 1)) - 1;
    for (int E = f->min_exp(); E <= f->max_exp(); ++E) {
      for (std::int64_t k = man_lo; k <= man_hi; ++k) {
        const float v = static_cast<float>(
            std::ldexp(static_cast<double>(k), E - f->man_bits));
        out.push_back(v);
        out.push_back(-v);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }
  const auto& b = std::get<BlockFloatFormat>(fmt);
  if (!block_exponent)
    throw format_error("block format enumeration needs a shared exponent");
  const int E = *block_exponent;
  if (E < -126 || E > 126)
    throw format_error("block shared exponent must be in [-126, 126], got " +
                       std::to_string(E));
  const int shift = E - (b.wl - 2);
  const std::int64_t k_min = -(std::int64_t{1} << (b.wl - 1));
  const std::int64_t k_max = (std::int64_t{1} << (b.wl - 1)) - 1;
  for (std::int64_t k = k_min; k <= k_max; ++k)
    out.push_back(static_cast<float>(std::ldexp(static_cast<double>(k), shift)));
  return out;
}

} // namespace lpsim
