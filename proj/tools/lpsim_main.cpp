#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lpsim/bench.hpp"
#include "lpsim/enumerate.hpp"
#include "lpsim/errors.hpp"
#include "lpsim/io.hpp"
#include "lpsim/quant_ops.hpp"
#include "lpsim/train.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;   // parse or validation failure
constexpr int kExitNumeric = 3; // non-finite numeric input

int cmd_quantize(const std::string& in_path, const std::string& out_path,
                 const std::string& format, const std::string& rounding,
                 std::uint64_t seed) {
  const lpsim::Tensor input = lpsim::read_tensor_file(in_path);
  lpsim::QuantSpec spec;
  spec.format = lpsim::parse_format(format);
  spec.mode = lpsim::parse_rounding(rounding);
  spec.seed = seed;
  const lpsim::Tensor out = lpsim::quantize_fused(input, spec);
  lpsim::write_tensor_file(out_path, out);
  return kExitOk;
}

int cmd_enumerate(const std::string& format, std::optional<int> block_exponent,
                  std::size_t cap) {
  const lpsim::NumberFormat fmt = lpsim::parse_format(format);
  const auto values = lpsim::enumerate_representable(fmt, block_exponent, cap);
  for (float v : values) std::cout << v << "\n";
  return kExitOk;
}

int cmd_train(const std::string& config_path, int epochs, double lr,
              double momentum, std::uint64_t seed,
              const std::string& trace_path) {
  lpsim::QuantConfig cfg;
  if (!config_path.empty()) cfg = lpsim::load_quant_config(config_path, seed);

  const lpsim::Dataset data = lpsim::make_blob_dataset(256, 2, seed);
  lpsim::Model model = lpsim::make_mlp({2, 16, 2}, seed + 1);
  const lpsim::TrainResult result =
      lpsim::train(std::move(model), data, cfg, epochs, lr, momentum, seed);

  if (!trace_path.empty()) {
    std::ofstream os(trace_path);
    if (!os) throw lpsim::format_error("cannot open " + trace_path);
    os << "epoch,loss,accuracy\n";
    int epoch = 0;
    for (const auto& s : result.trace)
      os << epoch++ << "," << s.loss << "," << s.accuracy << "\n";
  }
  const double final_acc =
      result.trace.empty() ? 0.0 : result.trace.back().accuracy;
  std::cout << "final_accuracy " << final_acc << "\n";
  return kExitOk;
}

int cmd_bench(const std::vector<std::int64_t>& sizes,
              const std::vector<std::string>& formats,
              const std::vector<std::string>& roundings,
              const std::string& impl, int repeats, int warmup, int threads,
              const std::string& csv_path, bool training_overhead,
              int overhead_epochs, const std::string& overhead_config) {
  if (training_overhead) {
    lpsim::QuantConfig cfg;
    if (!overhead_config.empty())
      cfg = lpsim::load_quant_config(overhead_config, 0);
    const lpsim::OverheadResult r =
        lpsim::run_training_overhead(overhead_epochs, cfg);
    std::cout << "baseline_epoch_sec " << r.baseline_epoch_sec << "\n"
              << "quantized_epoch_sec " << r.quantized_epoch_sec << "\n"
              << "ratio " << r.ratio() << "\n";
    return kExitOk;
  }

  std::vector<lpsim::Impl> impls;
  if (impl == "fused") impls = {lpsim::Impl::Fused};
  else if (impl == "composed") impls = {lpsim::Impl::Composed};
  else if (impl == "both") impls = {lpsim::Impl::Fused, lpsim::Impl::Composed};
  else throw lpsim::format_error("--impl must be fused, composed or both");

  std::vector<lpsim::BenchCase> cases;
  for (const std::string& ftext : formats) {
    const lpsim::NumberFormat fmt = lpsim::parse_format(ftext);
    const bool is_float = std::holds_alternative<lpsim::FloatFormat>(fmt);
    for (const std::string& rtext : roundings) {
      const lpsim::RoundingMode mode = lpsim::parse_rounding(rtext);
      for (lpsim::Impl i : impls) {
        if (i == lpsim::Impl::Composed && is_float) {
          if (impl == "composed")
            throw lpsim::unsupported_format_error(
                "composed quantization cannot express low-width float "
                "formats");
          continue; // implied by --impl both: benchmark the fused side only
        }
        for (std::int64_t n : sizes) {
          lpsim::BenchCase c;
          c.format = fmt;
          c.mode = mode;
          c.implementation = i;
          c.tensor_elements = n;
          c.repeats = repeats;
          c.warmup = warmup;
          c.threads = threads;
          cases.push_back(c);
        }
      }
    }
  }

  const auto results = lpsim::run_bench(cases);
  if (csv_path.empty()) {
    lpsim::write_bench_csv(std::cout, results);
  } else {
    std::ofstream os(csv_path);
    if (!os) throw lpsim::format_error("cannot open " + csv_path);
    lpsim::write_bench_csv(os, results);
  }
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"low-precision arithmetic simulation toolkit"};
  app.require_subcommand(1);

  // quantize
  auto* quantize = app.add_subcommand("quantize", "quantize a tensor file");
  std::string q_in, q_out, q_format;
  std::string q_rounding = "nearest_even";
  std::uint64_t q_seed = 0;
  quantize->add_option("--in", q_in, "input tensor file")->required();
  quantize->add_option("--out", q_out, "output tensor file")->required();
  quantize->add_option("--format", q_format, "number format spec")->required();
  quantize->add_option("--rounding", q_rounding, "rounding mode");
  quantize->add_option("--seed", q_seed, "stochastic rounding seed");

  // enumerate
  auto* enumerate = app.add_subcommand("enumerate",
                                       "print every representable value");
  std::string e_format;
  int e_block_exponent = 0;
  bool e_has_exponent = false;
  std::size_t e_cap = lpsim::kDefaultEnumerationCap;
  enumerate->add_option("--format", e_format, "number format spec")->required();
  auto* e_opt = enumerate->add_option("--block-exponent", e_block_exponent,
                                      "shared exponent for block formats");
  enumerate->add_option("--cap", e_cap, "maximum set size");
  (void)e_opt;

  // train
  auto* train = app.add_subcommand("train", "train the built-in MLP on the "
                                            "built-in synthetic dataset");
  std::string t_config, t_trace;
  int t_epochs = 30;
  double t_lr = 0.1, t_momentum = 0.9;
  std::uint64_t t_seed = 1;
  train->add_option("--config", t_config, "quantization config (JSON)");
  train->add_option("--epochs", t_epochs, "training epochs");
  train->add_option("--lr", t_lr, "learning rate");
  train->add_option("--momentum", t_momentum, "momentum");
  train->add_option("--seed", t_seed, "seed for data, init and quantizers");
  train->add_option("--trace-out", t_trace, "per-epoch CSV trace path");

  // bench
  auto* bench = app.add_subcommand("bench", "fused vs composed wall-clock "
                                            "benchmark");
  std::vector<std::int64_t> b_sizes = lpsim::default_bench_sizes();
  std::vector<std::string> b_formats = {"fixed:8:4", "block:8"};
  std::vector<std::string> b_roundings = {"nearest_even", "stochastic"};
  std::string b_impl = "both", b_csv;
  int b_repeats = 7, b_warmup = 2, b_threads = 1;
  bool b_overhead = false;
  int b_overhead_epochs = 3;
  std::string b_overhead_config;
  bench->add_option("--sizes", b_sizes, "tensor element counts")->delimiter(',');
  bench->add_option("--formats", b_formats, "format specs")->delimiter(',');
  bench->add_option("--rounding", b_roundings, "rounding modes")->delimiter(',');
  bench->add_option("--impl", b_impl, "fused, composed or both");
  bench->add_option("--repeats", b_repeats, "timed repeats per case");
  bench->add_option("--warmup", b_warmup, "warmup runs per case");
  bench->add_option("--threads", b_threads, "kernel thread count");
  bench->add_option("--csv", b_csv, "output CSV path (default stdout)");
  bench->add_flag("--training-overhead", b_overhead,
                  "measure end-to-end training overhead instead");
  bench->add_option("--epochs", b_overhead_epochs, "overhead epochs");
  bench->add_option("--overhead-config", b_overhead_config,
                    "quantization config for the overhead run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e); // --help
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*quantize)
      return cmd_quantize(q_in, q_out, q_format, q_rounding, q_seed);
    if (*enumerate) {
      e_has_exponent = enumerate->count("--block-exponent") > 0;
      return cmd_enumerate(e_format,
                           e_has_exponent ? std::optional<int>(e_block_exponent)
                                          : std::nullopt,
                           e_cap);
    }
    if (*train)
      return cmd_train(t_config, t_epochs, t_lr, t_momentum, t_seed, t_trace);
    if (*bench)
      return cmd_bench(b_sizes, b_formats, b_roundings, b_impl, b_repeats,
                       b_warmup, b_threads, b_csv, b_overhead,
                       b_overhead_epochs, b_overhead_config);
  } catch (const lpsim::invalid_input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const lpsim::invalid_value_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
