#include <chrono>
#include <sstream>

#include <doctest.h>

#include "lpsim/bench.hpp"

using namespace lpsim;

namespace {

BenchCase make_case(NumberFormat fmt, RoundingMode mode, Impl impl,
                    std::int64_t elements) {
  BenchCase c;
  c.format = fmt;
  c.mode = mode;
  c.implementation = impl;
  c.tensor_elements = elements;
  c.repeats = 5;
  c.warmup = 1;
  return c;
}

} // namespace

TEST_CASE("bench smoke run on a small tensor finishes quickly") {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<BenchCase> cases{
      make_case(FixedFormat{8, 4, false, true}, RoundingMode::NearestEven,
                Impl::Fused, 1 << 10),
      make_case(FixedFormat{8, 4, false, true}, RoundingMode::NearestEven,
                Impl::Composed, 1 << 10),
      make_case(BlockFloatFormat{8, {}}, RoundingMode::Stochastic,
                Impl::Composed, 1 << 10),
  };
  const auto results = run_bench(cases);
  const auto t1 = std::chrono::steady_clock::now();
  CHECK(std::chrono::duration<double>(t1 - t0).count() < 1.0);
  REQUIRE(results.size() == 3);
  for (const auto& r : results) {
    CHECK(r.median_ns > 0.0);
    CHECK(r.iqr_ns >= 0.0);
  }
}

TEST_CASE("bench validates its case parameters") {
  BenchCase c = make_case(FixedFormat{8, 4, false, true},
                          RoundingMode::NearestEven, Impl::Fused, 64);
  c.repeats = 3;
  CHECK_THROWS_AS(run_bench({c}), format_error);
  c.repeats = 5;
  c.warmup = 0;
  CHECK_THROWS_AS(run_bench({c}), format_error);
  CHECK_THROWS_AS(
      run_bench({make_case(FloatFormat{5, 2}, RoundingMode::NearestEven,
                           Impl::Composed, 64)}),
      unsupported_format_error);
}

TEST_CASE("bench CSV layout") {
  const auto results = run_bench({make_case(FixedFormat{8, 4, false, true},
                                            RoundingMode::NearestEven,
                                            Impl::Fused, 1 << 10)});
  std::ostringstream os;
  write_bench_csv(os, results);
  const std::string csv = os.str();
  CHECK(csv.rfind("case_id,format,mode,implementation,elements,threads,"
                  "median_ns,iqr_ns\n", 0) == 0);
  CHECK(csv.find("c000,fixed:8:4,nearest_even,fused,1024,1,") !=
        std::string::npos);
}

TEST_CASE("bench medians are stable across a rerun") {
  // run the same case suite twice; medians on an idle machine agree within 25%
  std::vector<BenchCase> cases{
      make_case(FixedFormat{8, 4, false, true}, RoundingMode::NearestEven,
                Impl::Fused, 1 << 18),
      make_case(FixedFormat{8, 4, false, true}, RoundingMode::NearestEven,
                Impl::Composed, 1 << 18),
  };
  for (auto& c : cases) c.repeats = 15;
  auto first = run_bench(cases);
  auto second = run_bench(cases);
  for (std::size_t i = 0; i < first.size(); ++i) {
    const double a = first[i].median_ns, b = second[i].median_ns;
    CHECK(std::max(a, b) / std::min(a, b) <= 1.25);
  }
}

TEST_CASE("identity-format training overhead is modest") {
  QuantConfig cfg;
  const QuantSpec id{FloatFormat{8, 23}, RoundingMode::NearestEven, 0, 0};
  cfg.weight = id;
  cfg.accumulator = id;
  cfg.gradient = id;
  cfg.activation = id;
  cfg.error = id;
  const auto t0 = std::chrono::steady_clock::now();
  const OverheadResult r = run_training_overhead(2, cfg);
  const auto t1 = std::chrono::steady_clock::now();
  CHECK(std::chrono::duration<double>(t1 - t0).count() < 30.0);
  CHECK(r.baseline_epoch_sec > 0.0);
  CHECK(r.quantized_epoch_sec > 0.0);
  CHECK(r.ratio() <= 1.5);
}

TEST_CASE("block-8 training overhead is reported, not asserted") {
  QuantConfig cfg;
  cfg.weight = QuantSpec{BlockFloatFormat{8, {}}, RoundingMode::Stochastic, 1, 0};
  cfg.activation =
      QuantSpec{BlockFloatFormat{8, {}}, RoundingMode::Stochastic, 2, 0};
  const OverheadResult r = run_training_overhead(1, cfg);
  CHECK(std::isfinite(r.ratio()));
  CHECK(r.ratio() > 0.0);
}
