#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "lpsim/errors.hpp"
#include "lpsim/formats.hpp"
#include "lpsim/rounding.hpp"

namespace lpsim {

namespace detail {

// Exact 2^e built from the exponent field; e must stay in the double normal
// range, which every caller here guarantees.
inline double pow2i(int e) {
  return std::bit_cast<double>(static_cast<std::uint64_t>(1023 + e) << 52);
}

// floor(log2 |x|) for finite nonzero x, read from the IEEE-754 exponent
// field (never via a transcendental log, which can misclassify exact powers
// of two).
inline int float_exponent(float x) {
  const std::uint32_t bits = std::bit_cast<std::uint32_t>(x) & 0x7FFFFFFFu;
  const int field = static_cast<int>(bits >> 23);
  if (field != 0) return field - 127;
  // denormal input: value is mantissa * 2^-149, so the exponent comes from
  // the leading mantissa bit: (31 - clz) - 149
  return -118 - std::countl_zero(bits);
}

// Two's-complement fold of an integer-valued double into the fixed-point code
// range, with constants hoisted out of the per-element loops. fmod is exact,
// so the wrap is the true modular reduction of k.
struct FixedFolder {
  double k_min;
  double k_max;
  double span;
  double half;
  bool saturate;

  explicit FixedFolder(const FixedFormat& f)
      : k_min(static_cast<double>(f.k_min())),
        k_max(static_cast<double>(f.k_max())), span(pow2i(f.wl)),
        half(pow2i(f.wl - 1)), saturate(f.saturate) {}

  double fold(double k) const {
    if (saturate) {
      if (k > k_max) return k_max;
      if (k < k_min) return k_min;
      return k;
    }
    double m = std::fmod(k, span);
    if (m < 0.0) m += span;
    if (m >= half) m -= span;
    // symmetric formats have no code for -2^(wl-1); pin it to k_min
    if (m < k_min) m = k_min;
    return m;
  }
};

inline double fixed_fold(double k, const FixedFormat& f) {
  return FixedFolder(f).fold(k);
}

// Shared exponent of a block, from the block maximum's exponent field.
inline int block_exponent(float max_abs) { return float_exponent(max_abs); }

inline void check_block_range(float max_abs) {
  // E = 127 would put -2^(wl-1) * 2^(E-(wl-2)) = -2^128 outside single range.
  if (block_exponent(max_abs) > 126)
    throw invalid_input_error(
        "block quantization: block maximum too large to represent");
}

// One element of a block with precomputed step delta = 2^(E-(wl-2)).
template <RoundingMode M>
inline float block_quant_one_m(float x, double inv_delta, double delta,
                               double k_min, double k_max, double u) {
  double k = round_integer_m<M>(static_cast<double>(x) * inv_delta, u);
  if (k > k_max) k = k_max;
  if (k < k_min) k = k_min;
  return static_cast<float>(k * delta);
}

inline float block_quant_one(float x, double inv_delta, double delta,
                             double k_min, double k_max, RoundingMode mode,
                             double u) {
  return with_mode(mode, [&](auto m) {
    return block_quant_one_m<decltype(m)::value>(x, inv_delta, delta, k_min,
                                                 k_max, u);
  });
}

} // namespace detail

namespace detail {

// Format constants of a float quantizer, hoisted for the kernel loops.
struct FloatQuantizer {
  int man_bits;
  int min_exp;
  int max_exp;
  double max_value;
  double under_up;   // 2^-min_exp
  double under_down; // 2^min_exp

  explicit FloatQuantizer(const FloatFormat& f)
      : man_bits(f.man_bits), min_exp(f.min_exp()), max_exp(f.max_exp()),
        max_value(f.max_value()), under_up(pow2i(-f.min_exp())),
        under_down(pow2i(f.min_exp())) {}

  // x finite and nonzero
  template <RoundingMode M>
  float apply_m(float x, double u) const {
    const int e = float_exponent(x);
    if (e < min_exp) {
      // round over the two-point grid {0, sign(x) * 2^min_exp}
      const double k = round_integer_m<M>(static_cast<double>(x) * under_up, u);
      return static_cast<float>(k * under_down);
    }
    const int E = e > max_exp ? max_exp : e;
    const double r = static_cast<double>(x) * pow2i(man_bits - E);
    const double k = round_integer_m<M>(r, u);
    // |k| = 2^(man+1) carries into the next binade; the value is still exact
    // as k * 2^(E-man), so only the saturation check is needed.
    const double q = k * pow2i(E - man_bits);
    if (q > max_value) return static_cast<float>(max_value);
    if (q < -max_value) return static_cast<float>(-max_value);
    return static_cast<float>(q);
  }

  float apply(float x, RoundingMode mode, double u) const {
    return with_mode(mode, [&](auto m) {
      return apply_m<decltype(m)::value>(x, u);
    });
  }
};

} // namespace detail

inline float quantize_scalar_fixed(float x, const FixedFormat& fmt,
                                   RoundingMode mode, float u = 0.0f) {
  if (!std::isfinite(x))
    throw invalid_input_error("quantize_scalar_fixed: non-finite input");
  // x * 2^fl is exact in double: power-of-two scaling of a single
  const double r = static_cast<double>(x) * detail::pow2i(fmt.fl);
  const double k = detail::fixed_fold(round_integer(r, mode, u), fmt);
  return static_cast<float>(k * detail::pow2i(-fmt.fl));
}

// Quantize to a low-width float format. Zero is returned as-is (preserving
// the sign bit). Magnitudes below the smallest normal 2^min_exp round over
// the two-point grid {0, sign(x) * 2^min_exp}; magnitudes above the format
// maximum saturate to sign(x) * max_value.
inline float quantize_scalar_float(float x, const FloatFormat& fmt,
                                   RoundingMode mode, float u = 0.0f) {
  if (!std::isfinite(x))
    throw invalid_input_error("quantize_scalar_float: non-finite input");
  if (x == 0.0f) return x;
  return detail::FloatQuantizer(fmt).apply(x, mode, u);
}

// Quantize the values of one block (any block layout reduces to this).
// us, when provided, holds one variate per element.
inline std::vector<float> quantize_scalar_block(std::span<const float> xs,
                                                const BlockFloatFormat& fmt,
                                                RoundingMode mode,
                                                std::span<const float> us = {}) {
  if (xs.empty())
    throw invalid_input_error("quantize_scalar_block: empty block");
  float max_abs = 0.0f;
  for (float x : xs) {
    if (!std::isfinite(x))
      throw invalid_input_error("quantize_scalar_block: non-finite input");
    const float a = std::fabs(x);
    if (a > max_abs) max_abs = a;
  }
  std::vector<float> out(xs.size(), 0.0f);
  if (max_abs == 0.0f) return out;
  detail::check_block_range(max_abs);
  const int shift = detail::block_exponent(max_abs) - (fmt.wl - 2);
  const double delta = detail::pow2i(shift);
  const double inv_delta = detail::pow2i(-shift);
  const double k_max = static_cast<double>((std::int64_t{1} << (fmt.wl - 1)) - 1);
  const double k_min = -std::ldexp(1.0, fmt.wl - 1);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double u = us.empty() ? 0.0 : static_cast<double>(us[i]);
    out[i] = detail::block_quant_one(xs[i], inv_delta, delta, k_min, k_max,
                                     mode, u);
  }
  return out;
}

} // namespace lpsim
