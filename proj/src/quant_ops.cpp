#include "lpsim/quant_ops.hpp"

#include <atomic>
#include <cmath>

#include "lpsim/rounding.hpp"
#include "lpsim/scalar_quant.hpp"

namespace lpsim {

namespace {

template <typename PerElement>
Tensor quant_pass(const Tensor& t, PerElement&& f) {
  Tensor out(t.shape());
  detail::bump_pass();
  std::atomic<bool> non_finite{false};
  const float* p = t.data();
  float* o = out.data();
  detail::parallel_for_each(t.numel(), [&](std::int64_t i) {
    if (!std::isfinite(p[i])) {
      non_finite.store(true, std::memory_order_relaxed);
      o[i] = 0.0f;
      return;
    }
    o[i] = f(p[i], static_cast<std::uint64_t>(i));
  });
  if (non_finite.load())
    throw invalid_input_error("quantize: non-finite input");
  return out;
}

Tensor fused_fixed(const Tensor& t, const FixedFormat& fmt, RoundingMode mode,
                   RngStream stream, std::uint64_t call) {
  const double up = detail::pow2i(fmt.fl);
  const double down = detail::pow2i(-fmt.fl);
  const detail::FixedFolder folder(fmt);
  const std::uint64_t key = detail::stream_key(stream.seed, call);
  return detail::with_mode(mode, [&](auto m) {
    constexpr RoundingMode kMode = decltype(m)::value;
    return quant_pass(t, [&](float x, std::uint64_t i) {
      const double u = kMode == RoundingMode::Stochastic
                           ? detail::variate_from_key(key, i)
                           : 0.0;
      const double k =
          detail::round_integer_m<kMode>(static_cast<double>(x) * up, u);
      return static_cast<float>(folder.fold(k) * down);
    });
  });
}

Tensor fused_float(const Tensor& t, const FloatFormat& fmt, RoundingMode mode,
                   RngStream stream, std::uint64_t call) {
  const detail::FloatQuantizer quantizer(fmt);
  const std::uint64_t key = detail::stream_key(stream.seed, call);
  return detail::with_mode(mode, [&](auto m) {
    constexpr RoundingMode kMode = decltype(m)::value;
    return quant_pass(t, [&](float x, std::uint64_t i) {
      if (x == 0.0f) return x;
      const double u = kMode == RoundingMode::Stochastic
                           ? detail::variate_from_key(key, i)
                           : 0.0;
      return quantizer.template apply_m<kMode>(x, u);
    });
  });
}

Tensor fused_block(const Tensor& t, const BlockFloatFormat& fmt,
                   RoundingMode mode, RngStream stream, std::uint64_t call) {
  if (fmt.block_dim && *fmt.block_dim >= t.rank())
    throw shape_error("block quantization: dimension out of range");
  // pass 1: per-block maxima; pass 2: quantize
  const Tensor maxima = reduce_max_abs(t, fmt.block_dim);
  const std::int64_t blocks = maxima.numel();
  std::vector<double> delta(static_cast<std::size_t>(blocks));
  std::vector<double> inv_delta(static_cast<std::size_t>(blocks));
  for (std::int64_t b = 0; b < blocks; ++b) {
    const float m = maxima[b];
    if (m == 0.0f) {
      delta[static_cast<std::size_t>(b)] = 0.0;
      inv_delta[static_cast<std::size_t>(b)] = 0.0;
      continue;
    }
    detail::check_block_range(m);
    const int shift = detail::block_exponent(m) - (fmt.wl - 2);
    delta[static_cast<std::size_t>(b)] = detail::pow2i(shift);
    inv_delta[static_cast<std::size_t>(b)] = detail::pow2i(-shift);
  }
  std::int64_t stride = 1;
  std::int64_t extent = 1;
  if (fmt.block_dim) {
    const int d = *fmt.block_dim;
    extent = t.extent(d);
    for (int j = d + 1; j < t.rank(); ++j) stride *= t.extent(j);
  }
  const double k_max = static_cast<double>((std::int64_t{1} << (fmt.wl - 1)) - 1);
  const double k_min = -detail::pow2i(fmt.wl - 1);
  const bool whole = !fmt.block_dim;
  const std::uint64_t key = detail::stream_key(stream.seed, call);
  return detail::with_mode(mode, [&](auto m) {
    constexpr RoundingMode kMode = decltype(m)::value;
    return quant_pass(t, [&](float x, std::uint64_t i) {
      const std::size_t b =
          whole ? 0
                : static_cast<std::size_t>(
                      (static_cast<std::int64_t>(i) / stride) % extent);
      if (delta[b] == 0.0) return 0.0f;
      const double u = kMode == RoundingMode::Stochastic
                           ? detail::variate_from_key(key, i)
                           : 0.0;
      return detail::block_quant_one_m<kMode>(x, inv_delta[b], delta[b], k_min,
                                              k_max, u);
    });
  });
}

Tensor composed_fixed(const Tensor& t, const FixedFormat& fmt,
                      RoundingMode mode, RngStream stream, std::uint64_t call) {
  const float up = static_cast<float>(std::ldexp(1.0, fmt.fl));
  const float down = static_cast<float>(std::ldexp(1.0, -fmt.fl));
  Tensor scaled = scale(t, up);
  Tensor rounded = mode == RoundingMode::Stochastic
                       ? stochastic_round(scaled, variate_tensor(t.shape(),
                                                                 stream, call))
                       : round_nearest(scaled, mode);
  Tensor folded = fmt.saturate
                      ? clamp(rounded, static_cast<double>(fmt.k_min()),
                              static_cast<double>(fmt.k_max()))
                      : wrap_twos_complement(rounded, fmt.wl, fmt.symmetric);
  return scale(folded, down);
}

Tensor composed_block(const Tensor& t, const BlockFloatFormat& fmt,
                      RoundingMode mode, RngStream stream, std::uint64_t call) {
  if (fmt.block_dim && *fmt.block_dim >= t.rank())
    throw shape_error("block quantization: dimension out of range");
  Tensor magnitudes = abs(t);
  Tensor maxima = reduce_max_abs(magnitudes, fmt.block_dim);
  Tensor shifts = block_shift(maxima, fmt.wl);
  Tensor shift_full = broadcast_from_dim(shifts, t.shape(), fmt.block_dim);
  Tensor scaled = ldexp_by(t, shift_full, +1);
  Tensor rounded = mode == RoundingMode::Stochastic
                       ? stochastic_round(scaled, variate_tensor(t.shape(),
                                                                 stream, call))
                       : round_nearest(scaled, mode);
  const double k_max = static_cast<double>((std::int64_t{1} << (fmt.wl - 1)) - 1);
  const double k_min = -std::ldexp(1.0, fmt.wl - 1);
  Tensor clamped = clamp(rounded, k_min, k_max);
  return ldexp_by(clamped, shift_full, -1);
}

} // namespace

Tensor quantize_fused_at(const Tensor& t, const QuantSpec& spec,
                         std::uint64_t call) {
  validate(spec.format);
  const RngStream stream{spec.seed};
  if (const auto* f = std::get_if<FixedFormat>(&spec.format))
    return fused_fixed(t, *f, spec.mode, stream, call);
  if (const auto* f = std::get_if<FloatFormat>(&spec.format))
    return fused_float(t, *f, spec.mode, stream, call);
  return fused_block(t, std::get<BlockFloatFormat>(spec.format), spec.mode,
                     stream, call);
}

Tensor quantize_composed_at(const Tensor& t, const QuantSpec& spec,
                            std::uint64_t call) {
  validate(spec.format);
  if (std::holds_alternative<FloatFormat>(spec.format))
    throw unsupported_format_error(
        "composed quantization cannot express low-width float formats");
  const RngStream stream{spec.seed};
  if (const auto* f = std::get_if<FixedFormat>(&spec.format))
    return composed_fixed(t, *f, spec.mode, stream, call);
  return composed_block(t, std::get<BlockFloatFormat>(spec.format), spec.mode,
                        stream, call);
}

Tensor quantize_fused(const Tensor& t, QuantSpec& spec) {
  Tensor out = quantize_fused_at(t, spec, spec.call_counter);
  if (spec.mode == RoundingMode::Stochastic) ++spec.call_counter;
  return out;
}

Tensor quantize_composed(const Tensor& t, QuantSpec& spec) {
  Tensor out = quantize_composed_at(t, spec, spec.call_counter);
  if (spec.mode == RoundingMode::Stochastic) ++spec.call_counter;
  return out;
}

Tensor quantized_matmul(const Tensor& a, const Tensor& b, QuantSpec& spec) {
  return quantize_fused(matmul(a, b), spec);
}

} // namespace lpsim
