#pragma once

#include <cmath>
#include <cstdint>
#include <type_traits>

#include "lpsim/errors.hpp"
#include "lpsim/formats.hpp"

namespace lpsim {

namespace detail {

// Exact floor without a libm call. Doubles at or beyond 2^52 are already
// integers; below that the int64 conversion truncates exactly.
inline double exact_floor(double r) {
  if (!(r < 0x1p52 && r > -0x1p52)) return r;
  const double t = static_cast<double>(static_cast<std::int64_t>(r));
  return t > r ? t - 1.0 : t;
}

// Round-half-even via one add/sub pair against 1.5 * 2^52: the addition
// lands in [2^52, 2^53) where the unit in the last place is exactly one, so
// the hardware's default rounding resolves ties to even; the subtraction is
// exact. Valid for |r| < 2^51. In [2^51, 2^52) doubles can still be
// half-integers, resolved by parity; beyond 2^52 they are integers already.
inline double round_half_even(double r) {
  if (r < 0x1p51 && r > -0x1p51) {
    const double shifter = 0x1.8p52;
    return (r + shifter) - shifter;
  }
  if (!(r < 0x1p52 && r > -0x1p52)) return r;
  const double f = exact_floor(r);
  if (r == f) return r;
  // the only representable fraction at this magnitude is one half
  return (static_cast<std::int64_t>(f) & 1) == 0 ? f : f + 1.0;
}

// Nearest with ties away from zero: floor(|r| + 0.5) is exact because the
// 0.5 addition cannot round below 2^52.
inline double round_half_away(double r) {
  const double a = r < 0.0 ? -r : r;
  if (a >= 0x1p52) return r;
  const double k = exact_floor(a + 0.5);
  return r < 0.0 ? -k : k;
}

// Nearest with ties toward zero: ceil(|r| - 0.5), mirrored.
inline double round_half_toward_zero(double r) {
  const double a = r < 0.0 ? -r : r;
  if (a >= 0x1p52) return r;
  const double k = -exact_floor(0.5 - a);
  return r < 0.0 ? -k : k;
}

inline double round_stochastic(double r, double u) {
  const double f = exact_floor(r);
  return f + (u < r - f ? 1.0 : 0.0);
}

// Mode dispatch for kernel loops: resolves the rounding mode once, outside
// the per-element loop. fn receives an integral_constant of the mode.
template <typename F>
decltype(auto) with_mode(RoundingMode mode, F&& fn) {
  switch (mode) {
  case RoundingMode::Stochastic:
    return fn(std::integral_constant<RoundingMode, RoundingMode::Stochastic>{});
  case RoundingMode::NearestAway:
    return fn(std::integral_constant<RoundingMode, RoundingMode::NearestAway>{});
  case RoundingMode::NearestTowardZero:
    return fn(std::integral_constant<RoundingMode,
                                     RoundingMode::NearestTowardZero>{});
  case RoundingMode::NearestEven:
  default:
    return fn(std::integral_constant<RoundingMode, RoundingMode::NearestEven>{});
  }
}

template <RoundingMode M>
inline double round_integer_m(double r, double u) {
  if constexpr (M == RoundingMode::Stochastic) return round_stochastic(r, u);
  if constexpr (M == RoundingMode::NearestEven) return round_half_even(r);
  if constexpr (M == RoundingMode::NearestAway) return round_half_away(r);
  return round_half_toward_zero(r);
}

} // namespace detail

// Rounds r to an integer under the given mode. The result is returned as an
// integer-valued double because scaled inputs can exceed the 64-bit integer
// range. For Stochastic, u must be a uniform variate in [0, 1):
// result = floor(r) + (u < r - floor(r)).
//
// All paths are exact: floor, the tie constructions, and the fractional part
// introduce no rounding error, so midpoint handling needs no tolerance.
inline double round_integer(double r, RoundingMode mode, double u = 0.0) {
  if (!std::isfinite(r))
    throw invalid_input_error("round_integer: non-finite input");
  switch (mode) {
  case RoundingMode::Stochastic:
    return detail::round_stochastic(r, u);
  case RoundingMode::NearestEven:
    return detail::round_half_even(r);
  case RoundingMode::NearestAway:
    return detail::round_half_away(r);
  case RoundingMode::NearestTowardZero:
    return detail::round_half_toward_zero(r);
  }
  return detail::round_half_even(r);
}

} // namespace lpsim
