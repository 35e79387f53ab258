#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "lpsim/errors.hpp"

namespace lpsim {

enum class RoundingMode {
  Stochastic,
  NearestEven,
  NearestAway,
  NearestTowardZero,
};

inline const char* to_string(RoundingMode m) {
  switch (m) {
  case RoundingMode::Stochastic: return "stochastic";
  case RoundingMode::NearestEven: return "nearest_even";
  case RoundingMode::NearestAway: return "nearest_away";
  case RoundingMode::NearestTowardZero: return "nearest_zero";
  }
  return "?";
}

// Low-width float: exp_bits exponent bits, man_bits stored mantissa bits.
// No denormals, NaN or Inf: exponent code 0 encodes only zero, and the
// all-ones exponent code holds ordinary normals. The exponent range is
// additionally capped so that every representable value fits in a finite
// single-precision number (only relevant for exp_bits = 8).
struct FloatFormat {
  int exp_bits = 8;
  int man_bits = 23;

  int bias() const { return (1 << (exp_bits - 1)) - 1; }
  int min_exp() const { return 1 - bias(); }
  int max_exp() const { return std::min((1 << exp_bits) - 1 - bias(), 127); }
  // Largest representable magnitude: (2 - 2^-man) * 2^max_exp.
  double max_value() const {
    return std::ldexp(2.0 - std::ldexp(1.0, -man_bits), max_exp());
  }

  bool operator==(const FloatFormat&) const = default;
};

// Fixed point: values k * 2^-fl with k a wl-bit two's-complement integer.
// symmetric drops the most negative code; saturate=false wraps instead of
// clamping.
struct FixedFormat {
  int wl = 8;
  int fl = 4;
  bool symmetric = false;
  bool saturate = true;

  double step() const { return std::ldexp(1.0, -fl); }
  std::int64_t k_max() const { return (std::int64_t{1} << (wl - 1)) - 1; }
  std::int64_t k_min() const {
    return symmetric ? -k_max() : -(std::int64_t{1} << (wl - 1));
  }

  bool operator==(const FixedFormat&) const = default;
};

// Block floating point: a block shares one exponent E = floor(log2 max|x|);
// each element is a wl-bit signed integer scaled by 2^(E - (wl - 2)).
// block_dim empty means the whole tensor is one block; block_dim = d means
// blocks are the slices at a fixed index along dimension d.
struct BlockFloatFormat {
  int wl = 8;
  std::optional<int> block_dim{};

  bool operator==(const BlockFloatFormat&) const = default;
};

using NumberFormat = std::variant<FloatFormat, FixedFormat, BlockFloatFormat>;

inline void validate(const FloatFormat& f) {
  if (f.exp_bits < 1 || f.exp_bits > 8)
    throw format_error("float exp bits must be in [1, 8], got " +
                       std::to_string(f.exp_bits));
  if (f.man_bits < 0 || f.man_bits > 23)
    throw format_error("float man bits must be in [0, 23], got " +
                       std::to_string(f.man_bits));
}

inline void validate(const FixedFormat& f) {
  if (f.wl < 2 || f.wl > 24)
    throw format_error("fixed wl must be in [2, 24], got " +
                       std::to_string(f.wl));
  // Keep every grid value a normal single-precision number.
  if (f.fl < f.wl - 128 || f.fl > 126)
    throw format_error("fixed fl must be in [wl-128, 126], got " +
                       std::to_string(f.fl));
}

inline void validate(const BlockFloatFormat& f) {
  if (f.wl < 2 || f.wl > 24)
    throw format_error("block wl must be in [2, 24], got " +
                       std::to_string(f.wl));
  if (f.block_dim && *f.block_dim < 0)
    throw format_error("block dim must be non-negative, got " +
                       std::to_string(*f.block_dim));
}

inline void validate(const NumberFormat& f) {
  std::visit([](const auto& fmt) { validate(fmt); }, f);
}

} // namespace lpsim
