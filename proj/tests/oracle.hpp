// Test-only reference implementations, kept independent of the library's
// quantization path: nearest rounding is realized as an argmin over the
// enumerated representable set, and matmul as a naive triple loop.
#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <vector>

#include "lpsim/formats.hpp"
#include "lpsim/tensor.hpp"

namespace oracle {

// Nearest representable value of x in a sorted set, ties resolved per mode.
// At a tie the two candidates are adjacent grid points lo = k*s and
// hi = (k+1)*s with s = hi - lo; "even" means k is even.
inline float nearest_in_set(float x, const std::vector<float>& reps,
                            lpsim::RoundingMode mode) {
  assert(!reps.empty());
  auto it = std::lower_bound(reps.begin(), reps.end(), x);
  if (it == reps.begin()) return reps.front();
  if (it == reps.end()) return reps.back();
  const float hi = *it;
  const float lo = *(it - 1);
  const double d_lo = static_cast<double>(x) - static_cast<double>(lo);
  const double d_hi = static_cast<double>(hi) - static_cast<double>(x);
  if (d_lo < d_hi) return lo;
  if (d_hi < d_lo) return hi;
  // exact midpoint
  const double step = static_cast<double>(hi) - static_cast<double>(lo);
  const double k_lo = static_cast<double>(lo) / step;
  assert(k_lo == std::floor(k_lo));
  switch (mode) {
  case lpsim::RoundingMode::NearestEven:
    return std::fmod(k_lo, 2.0) == 0.0 ? lo : hi;
  case lpsim::RoundingMode::NearestAway:
    return std::fabs(hi) > std::fabs(lo) ? hi : lo;
  case lpsim::RoundingMode::NearestTowardZero:
    return std::fabs(hi) < std::fabs(lo) ? hi : lo;
  default:
    assert(false && "oracle handles nearest modes only");
    return lo;
  }
}

inline bool in_set(float v, const std::vector<float>& reps) {
  return std::binary_search(reps.begin(), reps.end(), v);
}

// Naive matrix product with the same accumulation semantics as the library:
// double accumulator, ascending inner index.
inline lpsim::Tensor naive_matmul(const lpsim::Tensor& a,
                                  const lpsim::Tensor& b) {
  const std::int64_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
  lpsim::Tensor out({m, n});
  for (std::int64_t i = 0; i < m; ++i)
    for (std::int64_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::int64_t kk = 0; kk < k; ++kk)
        acc += static_cast<double>(a.at(i, kk)) *
               static_cast<double>(b.at(kk, j));
      out.at(i, j) = static_cast<float>(acc);
    }
  return out;
}

inline lpsim::Tensor naive_reduce_max_abs_dim(const lpsim::Tensor& t, int d) {
  const std::int64_t extent = t.extent(d);
  std::int64_t inner = 1;
  for (int j = d + 1; j < t.rank(); ++j) inner *= t.extent(j);
  lpsim::Tensor out({extent});
  for (std::int64_t i = 0; i < t.numel(); ++i) {
    const std::int64_t c = (i / inner) % extent;
    out[c] = std::max(out[c], std::fabs(t[i]));
  }
  return out;
}

} // namespace oracle
