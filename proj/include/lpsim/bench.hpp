#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "lpsim/quant_ops.hpp"
#include "lpsim/train.hpp"

namespace lpsim {

enum class Impl { Fused, Composed };

inline const char* to_string(Impl i) {
  return i == Impl::Fused ? "fused" : "composed";
}

struct BenchCase {
  NumberFormat format;
  RoundingMode mode = RoundingMode::NearestEven;
  Impl implementation = Impl::Fused;
  std::int64_t tensor_elements = 1 << 20;
  int repeats = 7;
  int warmup = 2;
  int threads = 1;
};

struct BenchResult {
  BenchCase spec;
  double median_ns = 0.0;
  double iqr_ns = 0.0;
};

// Default sweep sizes: powers of two from 2^10 to 2^24.
std::vector<std::int64_t> default_bench_sizes();

// Times one quantization invocation per case: `warmup` untimed runs, then the
// median (and interquartile range) of `repeats` timed runs. Before timing,
// fused and composed outputs are verified bit-identical on the case's input;
// a mismatch aborts with a diagnostic, since timing unequal implementations
// is meaningless.
std::vector<BenchResult> run_bench(const std::vector<BenchCase>& cases);

// CSV: case-id, format, mode, implementation, elements, threads, median_ns,
// iqr_ns.
void write_bench_csv(std::ostream& os, const std::vector<BenchResult>& results);

struct OverheadResult {
  double quantized_epoch_sec = 0.0;
  double baseline_epoch_sec = 0.0;
  double ratio() const { return quantized_epoch_sec / baseline_epoch_sec; }
};

// End-to-end training overhead: per-epoch wall time of a quantized training
// run vs. the same model and data in full precision.
OverheadResult run_training_overhead(int epochs, const QuantConfig& cfg);

} // namespace lpsim
