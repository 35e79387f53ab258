#include "lpsim/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "lpsim/errors.hpp"
#include "lpsim/io.hpp"

namespace lpsim {

namespace {

using Clock = std::chrono::steady_clock;

double percentile(std::vector<double> xs, double q) {
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] * (1.0 - frac) + xs[hi] * frac;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  return a.same_shape(b) &&
         std::memcmp(a.data(), b.data(),
                     static_cast<std::size_t>(a.numel()) * sizeof(float)) == 0;
}

} // namespace

std::vector<std::int64_t> default_bench_sizes() {
  std::vector<std::int64_t> out;
  for (int p = 10; p <= 24; ++p) out.push_back(std::int64_t{1} << p);
  return out;
}

std::vector<BenchResult> run_bench(const std::vector<BenchCase>& cases) {
  std::vector<BenchResult> results;
  results.reserve(cases.size());
  const int saved_threads = num_threads();
  for (const BenchCase& c : cases) {
    if (c.repeats < 5) throw format_error("bench: repeats must be at least 5");
    if (c.warmup < 1) throw format_error("bench: warmup must be at least 1");
    validate(c.format);
    if (c.implementation == Impl::Composed &&
        std::holds_alternative<FloatFormat>(c.format))
      throw unsupported_format_error(
          "composed quantization cannot express low-width float formats");

    const QuantSpec spec{c.format, c.mode, 0x15EEDULL, 0};
    // 2-D shape so AlongDim block formats are exercisable
    const std::int64_t rows = std::max<std::int64_t>(1, c.tensor_elements / 64);
    const std::int64_t cols = c.tensor_elements / rows;
    Tensor input = random_uniform({rows, cols}, RngStream{7}, 0, -4.0f, 4.0f);

    // fused and composed must agree before either is worth timing
    if (!std::holds_alternative<FloatFormat>(c.format)) {
      const Tensor f = quantize_fused_at(input, spec, 0);
      const Tensor m = quantize_composed_at(input, spec, 0);
      if (!bit_equal(f, m))
        throw invalid_value_error(
            "bench: fused and composed outputs differ for " +
            format_to_string(c.format) + " " + to_string(c.mode));
    }

    set_num_threads(c.threads);
    auto invoke = [&]() {
      return c.implementation == Impl::Fused
                 ? quantize_fused_at(input, spec, 0)
                 : quantize_composed_at(input, spec, 0);
    };
    for (int w = 0; w < c.warmup; ++w) (void)invoke();
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(c.repeats));
    for (int r = 0; r < c.repeats; ++r) {
      const auto t0 = Clock::now();
      Tensor out = invoke();
      const auto t1 = Clock::now();
      times.push_back(static_cast<double>(
          std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0)
              .count()));
    }
    set_num_threads(saved_threads);

    BenchResult r;
    r.spec = c;
    r.median_ns = percentile(times, 0.5);
    r.iqr_ns = percentile(times, 0.75) - percentile(times, 0.25);
    results.push_back(r);
  }
  return results;
}

void write_bench_csv(std::ostream& os, const std::vector<BenchResult>& results) {
  os << "case_id,format,mode,implementation,elements,threads,median_ns,iqr_ns\n";
  int id = 0;
  for (const BenchResult& r : results) {
    std::ostringstream cid;
    cid << "c" << std::setw(3) << std::setfill('0') << id++;
    os << cid.str() << "," << format_to_string(r.spec.format) << ","
       << to_string(r.spec.mode) << "," << to_string(r.spec.implementation)
       << "," << r.spec.tensor_elements << "," << r.spec.threads << ","
       << std::fixed << std::setprecision(0) << r.median_ns << ","
       << r.iqr_ns << "\n";
  }
}

OverheadResult run_training_overhead(int epochs, const QuantConfig& cfg) {
  if (epochs < 1) throw format_error("training overhead: epochs must be >= 1");
  // matmul-dominated desk-scale net so quantization overhead is measured
  // against meaningful compute
  const Dataset data = make_blob_dataset(4096, 64, 11);
  const std::vector<int> dims{64, 128, 2};
  const int batch = 128;

  auto epoch_time = [&](const QuantConfig& config) {
    Model model = make_mlp(dims, 5);
    (void)train(model, data, config, 1, 0.05, 0.9, 1, batch); // warmup epoch
    Model timed_model = make_mlp(dims, 5);
    const auto t0 = Clock::now();
    (void)train(timed_model, data, config, epochs, 0.05, 0.9, 1, batch);
    const auto t1 = Clock::now();
    return std::chrono::duration<double>(t1 - t0).count() /
           static_cast<double>(epochs);
  };

  OverheadResult out;
  out.baseline_epoch_sec = epoch_time(QuantConfig{});
  out.quantized_epoch_sec = epoch_time(cfg);
  return out;
}

} // namespace lpsim
