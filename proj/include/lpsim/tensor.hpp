#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lpsim/errors.hpp"
#include "lpsim/formats.hpp"
#include "lpsim/rng.hpp"

namespace lpsim {

using Shape = std::vector<std::int64_t>;

// Dense row-major tensor of single-precision values. Rank 0 is a scalar.
// Tensors are immutable from the caller's perspective once built; operations
// return new tensors.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(Shape shape);                    // zero-filled
  Tensor(Shape shape, std::vector<float> data);
  static Tensor scalar(float v) { return Tensor({}, {v}); }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
  std::int64_t extent(int d) const { return shape_[static_cast<std::size_t>(d)]; }

  const float* data() const { return data_.data(); }
  float* data() { return data_.data(); }
  std::span<const float> values() const { return data_; }

  float operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }
  float& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  // rank-2 access
  float at(std::int64_t i, std::int64_t j) const { return data_[static_cast<std::size_t>(i * shape_[1] + j)]; }
  float& at(std::int64_t i, std::int64_t j) { return data_[static_cast<std::size_t>(i * shape_[1] + j)]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

private:
  Shape shape_{};
  std::vector<float> data_{};
};

// --- module configuration -------------------------------------------------

// Number of threads tensor and quantization kernels may use internally.
// Results are bit-identical for any setting.
void set_num_threads(int n);
int num_threads();

// Validation mode: finiteness checks after each operation, zero-divisor
// checks. On by default; benchmarks may disable it.
void set_validation(bool on);
bool validation_enabled();

// Data-pass counter: every tensor kernel bumps it once per pass over the
// data. Used to audit fused vs. composed pass counts.
std::uint64_t pass_count();
void reset_pass_count();

namespace detail {
void bump_pass();
// Runs fn(begin, end) over [0, n) split across the configured threads.
void parallel_for(std::int64_t n, void (*fn)(std::int64_t, std::int64_t, void*),
                  void* ctx);
template <typename F>
void parallel_for_each(std::int64_t n, F&& f) {
  parallel_for(
      n,
      [](std::int64_t b, std::int64_t e, void* ctx) {
        auto& fn = *static_cast<F*>(ctx);
        for (std::int64_t i = b; i < e; ++i) fn(i);
      },
      &f);
}
} // namespace detail

// --- elementwise operations (one pass each) --------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& t, float s);
Tensor relu(const Tensor& t);
Tensor exp(const Tensor& t);
Tensor abs(const Tensor& t);
// clamp every element to [lo, hi]
Tensor clamp(const Tensor& t, double lo, double hi);
// elementwise round_integer with a nearest mode (mode must not be Stochastic)
Tensor round_nearest(const Tensor& t, RoundingMode mode);
// elementwise stochastic round: floor(t) + (u < frac(t))
Tensor stochastic_round(const Tensor& t, const Tensor& u);
// elementwise two's-complement fold of integer-valued elements into a wl-bit
// code range
Tensor wrap_twos_complement(const Tensor& t, int wl, bool symmetric);
// out_i = ldexp(t_i, direction * (int)e_i); exponents given per element
Tensor ldexp_by(const Tensor& t, const Tensor& e, int direction);
// per-block scaling exponent for block quantization: for each block maximum m,
// (wl - 2) - floor(log2 m), or 0 when m is 0
Tensor block_shift(const Tensor& max_abs, int wl);

// one uniform variate per element: uniform_variate(stream, call, flat_index)
Tensor variate_tensor(const Shape& shape, RngStream stream, std::uint64_t call);

// Expand a reduced tensor back to `shape`: with dim, values has one entry per
// index along dim; without, values is a scalar tensor.
Tensor broadcast_from_dim(const Tensor& values, const Shape& shape,
                          std::optional<int> dim);

// --- reductions and linear algebra -----------------------------------------

// Maximum |x| per block: whole tensor (dim empty, scalar result) or one value
// per index along dim (blocks are the slices at a fixed index along dim).
Tensor reduce_max_abs(const Tensor& t, std::optional<int> dim = {});

// Matrix product with a double accumulator and fixed sequential accumulation
// order over the inner dimension (bit-deterministic for any thread count).
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& t);
// column sums of a rank-2 tensor -> rank-1 [cols]
Tensor colsum(const Tensor& t);
// row-wise softmax of a rank-2 tensor, computed in full precision
Tensor softmax_rows(const Tensor& t);

// --- seeded generators (deterministic, counter-based) ----------------------

Tensor random_uniform(const Shape& shape, RngStream stream, std::uint64_t call,
                      float lo, float hi);
Tensor random_normal(const Shape& shape, RngStream stream, std::uint64_t call,
                     float mean = 0.0f, float stddev = 1.0f);

} // namespace lpsim
