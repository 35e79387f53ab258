#include "lpsim/tensor.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <string>
#include <thread>

#include "lpsim/rounding.hpp"
#include "lpsim/scalar_quant.hpp"

namespace lpsim {

namespace {

std::atomic<int> g_threads{1};
std::atomic<bool> g_validation{true};
std::atomic<std::uint64_t> g_passes{0};

enum ElemError : int {
  kNone = 0,
  kNonFiniteResult = 1,
  kNonFiniteInput = 2,
  kZeroDivisor = 3,
  kBlockTooLarge = 4,
};

[[noreturn]] void throw_elem_error(int code, const char* op) {
  const std::string where(op);
  switch (code) {
  case kNonFiniteInput:
    throw invalid_input_error(where + ": non-finite input");
  case kZeroDivisor:
    throw invalid_value_error(where + ": division by zero");
  case kBlockTooLarge:
    throw invalid_input_error(where + ": block maximum too large to represent");
  default:
    throw invalid_value_error(where + ": non-finite result");
  }
}

std::int64_t checked_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (std::int64_t e : shape) {
    if (e < 0) throw shape_error("negative tensor extent");
    n *= e;
  }
  return n;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw shape_error(std::string(op) + ": operand shapes differ");
}

// Applies f(i) -> float over all elements, one pass, with deferred error
// reporting so the loop body stays throw-free under worker threads.
template <typename F>
Tensor map_elements(const Shape& shape, const char* op, F&& f) {
  Tensor out(shape);
  detail::bump_pass();
  std::atomic<int> err{kNone};
  float* o = out.data();
  detail::parallel_for_each(out.numel(), [&](std::int64_t i) {
    int code = kNone;
    const float v = f(i, code);
    if (code != kNone) {
      err.store(code, std::memory_order_relaxed);
      o[i] = 0.0f;
      return;
    }
    if (g_validation.load(std::memory_order_relaxed) && !std::isfinite(v))
      err.store(kNonFiniteResult, std::memory_order_relaxed);
    o[i] = v;
  });
  if (int code = err.load(); code != kNone) throw_elem_error(code, op);
  return out;
}

template <typename F>
Tensor binary_op(const Tensor& a, const Tensor& b, const char* op, F&& f) {
  require_same_shape(a, b, op);
  const float* pa = a.data();
  const float* pb = b.data();
  return map_elements(a.shape(), op, [&](std::int64_t i, int& code) {
    return f(pa[i], pb[i], code);
  });
}

} // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  data_.assign(static_cast<std::size_t>(checked_numel(shape_)), 0.0f);
}

Tensor::Tensor(Shape shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (checked_numel(shape_) != static_cast<std::int64_t>(data_.size()))
    throw shape_error("tensor data length does not match shape");
  if (g_validation.load()) {
    for (float v : data_)
      if (!std::isfinite(v))
        throw invalid_input_error("tensor holds a non-finite value");
  }
}

void set_num_threads(int n) { g_threads.store(n < 1 ? 1 : n); }
int num_threads() { return g_threads.load(); }
void set_validation(bool on) { g_validation.store(on); }
bool validation_enabled() { return g_validation.load(); }
std::uint64_t pass_count() { return g_passes.load(); }
void reset_pass_count() { g_passes.store(0); }

namespace detail {

void bump_pass() { g_passes.fetch_add(1, std::memory_order_relaxed); }

void parallel_for(std::int64_t n, void (*fn)(std::int64_t, std::int64_t, void*),
                  void* ctx) {
  const int threads = g_threads.load();
  if (threads <= 1 || n < 4096) {
    fn(0, n, ctx);
    return;
  }
  const std::int64_t chunk = (n + threads - 1) / threads;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads - 1));
  for (int t = 1; t < threads; ++t) {
    const std::int64_t b = t * chunk;
    const std::int64_t e = std::min<std::int64_t>(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back(fn, b, e, ctx);
  }
  fn(0, std::min<std::int64_t>(n, chunk), ctx);
  for (auto& th : pool) th.join();
}

} // namespace detail

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, "add", [](float x, float y, int&) {
    return static_cast<float>(static_cast<double>(x) + static_cast<double>(y));
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, "sub", [](float x, float y, int&) {
    return static_cast<float>(static_cast<double>(x) - static_cast<double>(y));
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, "mul", [](float x, float y, int&) {
    return static_cast<float>(static_cast<double>(x) * static_cast<double>(y));
  });
}

Tensor div(const Tensor& a, const Tensor& b) {
  const bool check = validation_enabled();
  return binary_op(a, b, "div", [check](float x, float y, int& code) {
    if (check && y == 0.0f) {
      code = kZeroDivisor;
      return 0.0f;
    }
    return static_cast<float>(static_cast<double>(x) / static_cast<double>(y));
  });
}

Tensor scale(const Tensor& t, float s) {
  const float* p = t.data();
  const double sd = static_cast<double>(s);
  return map_elements(t.shape(), "scale", [&](std::int64_t i, int&) {
    return static_cast<float>(static_cast<double>(p[i]) * sd);
  });
}

Tensor relu(const Tensor& t) {
  const float* p = t.data();
  return map_elements(t.shape(), "relu", [&](std::int64_t i, int&) {
    return p[i] > 0.0f ? p[i] : 0.0f;
  });
}

Tensor exp(const Tensor& t) {
  const float* p = t.data();
  return map_elements(t.shape(), "exp", [&](std::int64_t i, int&) {
    return static_cast<float>(std::exp(static_cast<double>(p[i])));
  });
}

Tensor abs(const Tensor& t) {
  const float* p = t.data();
  return map_elements(t.shape(), "abs", [&](std::int64_t i, int&) {
    return std::fabs(p[i]);
  });
}

Tensor clamp(const Tensor& t, double lo, double hi) {
  const float* p = t.data();
  return map_elements(t.shape(), "clamp", [&](std::int64_t i, int&) {
    double v = static_cast<double>(p[i]);
    if (v > hi) v = hi;
    if (v < lo) v = lo;
    return static_cast<float>(v);
  });
}

Tensor round_nearest(const Tensor& t, RoundingMode mode) {
  if (mode == RoundingMode::Stochastic)
    throw format_error("round_nearest: mode must be a nearest mode");
  const float* p = t.data();
  return detail::with_mode(mode, [&](auto m) {
    constexpr RoundingMode kMode = decltype(m)::value;
    return map_elements(t.shape(), "round_nearest",
                        [&](std::int64_t i, int& code) {
      if (!std::isfinite(p[i])) {
        code = kNonFiniteInput;
        return 0.0f;
      }
      return static_cast<float>(
          detail::round_integer_m<kMode>(static_cast<double>(p[i]), 0.0));
    });
  });
}

Tensor stochastic_round(const Tensor& t, const Tensor& u) {
  require_same_shape(t, u, "stochastic_round");
  const float* p = t.data();
  const float* pu = u.data();
  return map_elements(t.shape(), "stochastic_round", [&](std::int64_t i, int& code) {
    if (!std::isfinite(p[i])) {
      code = kNonFiniteInput;
      return 0.0f;
    }
    const double r = static_cast<double>(p[i]);
    const double f = detail::exact_floor(r);
    return static_cast<float>(f + (static_cast<double>(pu[i]) < r - f ? 1.0 : 0.0));
  });
}

Tensor wrap_twos_complement(const Tensor& t, int wl, bool symmetric) {
  const FixedFormat folder{wl, 0, symmetric, false};
  const float* p = t.data();
  return map_elements(t.shape(), "wrap_twos_complement", [&](std::int64_t i, int& code) {
    if (!std::isfinite(p[i])) {
      code = kNonFiniteInput;
      return 0.0f;
    }
    return static_cast<float>(detail::fixed_fold(static_cast<double>(p[i]), folder));
  });
}

Tensor ldexp_by(const Tensor& t, const Tensor& e, int direction) {
  require_same_shape(t, e, "ldexp_by");
  const float* p = t.data();
  const float* pe = e.data();
  return map_elements(t.shape(), "ldexp_by", [&](std::int64_t i, int&) {
    return static_cast<float>(std::ldexp(static_cast<double>(p[i]),
                                         direction * static_cast<int>(pe[i])));
  });
}

Tensor block_shift(const Tensor& max_abs, int wl) {
  const float* p = max_abs.data();
  return map_elements(max_abs.shape(), "block_shift", [&](std::int64_t i, int& code) {
    const float m = p[i];
    if (!std::isfinite(m)) {
      code = kNonFiniteInput;
      return 0.0f;
    }
    if (m == 0.0f) return 0.0f;
    const int E = detail::block_exponent(m);
    if (E > 126) {
      code = kBlockTooLarge;
      return 0.0f;
    }
    return static_cast<float>((wl - 2) - E);
  });
}

Tensor variate_tensor(const Shape& shape, RngStream stream, std::uint64_t call) {
  Tensor out(shape);
  detail::bump_pass();
  float* o = out.data();
  const std::uint64_t key = detail::stream_key(stream.seed, call);
  detail::parallel_for_each(out.numel(), [&](std::int64_t i) {
    o[i] = detail::variate_from_key(key, static_cast<std::uint64_t>(i));
  });
  return out;
}

Tensor broadcast_from_dim(const Tensor& values, const Shape& shape,
                          std::optional<int> dim) {
  Tensor out(shape);
  detail::bump_pass();
  const float* v = values.data();
  float* o = out.data();
  if (!dim) {
    if (values.numel() != 1)
      throw shape_error("broadcast_from_dim: whole-tensor source must be scalar");
    const float s = v[0];
    detail::parallel_for_each(out.numel(), [&](std::int64_t i) { o[i] = s; });
    return out;
  }
  const int d = *dim;
  if (d < 0 || d >= static_cast<int>(shape.size()))
    throw shape_error("broadcast_from_dim: dimension out of range");
  if (values.numel() != shape[static_cast<std::size_t>(d)])
    throw shape_error("broadcast_from_dim: source length does not match extent");
  std::int64_t stride = 1;
  for (std::size_t j = static_cast<std::size_t>(d) + 1; j < shape.size(); ++j)
    stride *= shape[j];
  const std::int64_t extent = shape[static_cast<std::size_t>(d)];
  detail::parallel_for_each(out.numel(), [&](std::int64_t i) {
    o[i] = v[(i / stride) % extent];
  });
  return out;
}

Tensor reduce_max_abs(const Tensor& t, std::optional<int> dim) {
  detail::bump_pass();
  const float* p = t.data();
  if (!dim) {
    float m = 0.0f;
    for (std::int64_t i = 0; i < t.numel(); ++i) {
      const float a = std::fabs(p[i]);
      if (a > m) m = a;
    }
    return Tensor::scalar(m);
  }
  const int d = *dim;
  if (d < 0 || d >= t.rank())
    throw shape_error("reduce_max_abs: dimension out of range");
  const std::int64_t extent = t.extent(d);
  std::int64_t inner = 1;
  for (int j = d + 1; j < t.rank(); ++j) inner *= t.extent(j);
  std::int64_t outer = 1;
  for (int j = 0; j < d; ++j) outer *= t.extent(j);
  Tensor out(Shape{extent});
  float* o = out.data();
  detail::parallel_for_each(extent, [&](std::int64_t c) {
    float m = 0.0f;
    for (std::int64_t a = 0; a < outer; ++a) {
      const float* slice = p + (a * extent + c) * inner;
      for (std::int64_t b = 0; b < inner; ++b) {
        const float v = std::fabs(slice[b]);
        if (v > m) m = v;
      }
    }
    o[c] = m;
  });
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2)
    throw shape_error("matmul: operands must be rank-2");
  if (a.extent(1) != b.extent(0))
    throw shape_error("matmul: inner dimensions disagree");
  const std::int64_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
  Tensor out(Shape{m, n});
  detail::bump_pass();
  const float* pa = a.data();
  const float* pb = b.data();
  float* po = out.data();
  detail::parallel_for_each(m, [&](std::int64_t i) {
    for (std::int64_t j = 0; j < n; ++j) {
      double acc = 0.0; // accumulate in double, fixed order over k
      for (std::int64_t kk = 0; kk < k; ++kk)
        acc += static_cast<double>(pa[i * k + kk]) *
               static_cast<double>(pb[kk * n + j]);
      po[i * n + j] = static_cast<float>(acc);
    }
  });
  return out;
}

Tensor transpose(const Tensor& t) {
  if (t.rank() != 2) throw shape_error("transpose: tensor must be rank-2");
  const std::int64_t m = t.extent(0), n = t.extent(1);
  Tensor out(Shape{n, m});
  detail::bump_pass();
  const float* p = t.data();
  float* o = out.data();
  detail::parallel_for_each(m, [&](std::int64_t i) {
    for (std::int64_t j = 0; j < n; ++j) o[j * m + i] = p[i * n + j];
  });
  return out;
}

Tensor colsum(const Tensor& t) {
  if (t.rank() != 2) throw shape_error("colsum: tensor must be rank-2");
  const std::int64_t m = t.extent(0), n = t.extent(1);
  Tensor out(Shape{n});
  detail::bump_pass();
  const float* p = t.data();
  float* o = out.data();
  detail::parallel_for_each(n, [&](std::int64_t j) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < m; ++i) acc += static_cast<double>(p[i * n + j]);
    o[j] = static_cast<float>(acc);
  });
  return out;
}

Tensor softmax_rows(const Tensor& t) {
  if (t.rank() != 2) throw shape_error("softmax_rows: tensor must be rank-2");
  const std::int64_t m = t.extent(0), n = t.extent(1);
  Tensor out(t.shape());
  detail::bump_pass();
  const float* p = t.data();
  float* o = out.data();
  detail::parallel_for_each(m, [&](std::int64_t i) {
    const float* row = p + i * n;
    double mx = -1e300;
    for (std::int64_t j = 0; j < n; ++j)
      mx = std::max(mx, static_cast<double>(row[j]));
    double sum = 0.0;
    for (std::int64_t j = 0; j < n; ++j) {
      const double e = std::exp(static_cast<double>(row[j]) - mx);
      o[i * n + j] = static_cast<float>(e);
      sum += e;
    }
    for (std::int64_t j = 0; j < n; ++j)
      o[i * n + j] = static_cast<float>(static_cast<double>(o[i * n + j]) / sum);
  });
  return out;
}

Tensor random_uniform(const Shape& shape, RngStream stream, std::uint64_t call,
                      float lo, float hi) {
  Tensor out(shape);
  float* o = out.data();
  const double l = lo, h = hi;
  detail::parallel_for_each(out.numel(), [&](std::int64_t i) {
    const double u = uniform_variate(stream, call, static_cast<std::uint64_t>(i));
    o[i] = static_cast<float>(l + (h - l) * u);
  });
  return out;
}

Tensor random_normal(const Shape& shape, RngStream stream, std::uint64_t call,
                     float mean, float stddev) {
  Tensor out(shape);
  float* o = out.data();
  const double pi2 = 6.283185307179586476925;
  detail::parallel_for_each(out.numel(), [&](std::int64_t i) {
    const std::uint64_t idx = static_cast<std::uint64_t>(i);
    const double u1 = uniform_variate(stream, call, 2 * idx);
    const double u2 = uniform_variate(stream, call, 2 * idx + 1);
    const double z = std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(pi2 * u2);
    o[i] = static_cast<float>(mean + stddev * z);
  });
  return out;
}

} // namespace lpsim
