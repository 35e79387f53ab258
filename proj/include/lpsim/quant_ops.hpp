#pragma once

#include <cstdint>
#include <utility>

#include "lpsim/formats.hpp"
#include "lpsim/tensor.hpp"

namespace lpsim {

// A tensor quantizer: format + rounding + its own random stream. The call
// counter advances by exactly one per stochastic tensor quantization, so a
// sequence of quantizations is replayable from (seed, initial counter).
struct QuantSpec {
  NumberFormat format = FloatFormat{8, 23};
  RoundingMode mode = RoundingMode::NearestEven;
  std::uint64_t seed = 0;
  std::uint64_t call_counter = 0;
};

// Single-kernel quantization: one pass over the data (plus one reduction pass
// for block maxima), variates drawn inline from the counter-based stream.
Tensor quantize_fused(const Tensor& t, QuantSpec& spec);
// Pure form with an explicit call id (does not advance any counter).
Tensor quantize_fused_at(const Tensor& t, const QuantSpec& spec,
                         std::uint64_t call);

// Multi-kernel baseline: the same semantics expressed as a chain of generic
// tensor operations, each a full pass with its own temporary. Bit-identical
// to quantize_fused for fixed and block formats; float formats are not
// expressible this way and are rejected.
Tensor quantize_composed(const Tensor& t, QuantSpec& spec);
Tensor quantize_composed_at(const Tensor& t, const QuantSpec& spec,
                            std::uint64_t call);

// Quantization appended to a full-precision operation: op runs entirely in
// single precision (high-precision accumulation included), only its output is
// quantized.
template <typename Op>
auto quantized_op(Op op, QuantSpec& spec) {
  return [op = std::move(op), &spec](auto&&... args) {
    return quantize_fused(op(std::forward<decltype(args)>(args)...), spec);
  };
}

Tensor quantized_matmul(const Tensor& a, const Tensor& b, QuantSpec& spec);

} // namespace lpsim
