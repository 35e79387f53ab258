#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "lpsim/quant_ops.hpp"
#include "lpsim/tensor.hpp"

namespace lpsim {

// Per-category quantizer assignment. An absent category stays in full
// precision.
struct QuantConfig {
  std::optional<QuantSpec> weight{};
  std::optional<QuantSpec> accumulator{};
  std::optional<QuantSpec> gradient{};
  std::optional<QuantSpec> activation{};
  std::optional<QuantSpec> error{};
};

// y = x * w^T + b, with w stored [out x in].
struct Linear {
  Tensor w;
  Tensor b;
};
struct ReLU {};
// Quantizes activations on the forward pass; pass-through on backward.
struct ActivationQuant {
  QuantSpec spec;
};
// Identity on forward; quantizes the backpropagated error signal.
struct ErrorQuant {
  QuantSpec spec;
};

using Layer = std::variant<Linear, ReLU, ActivationQuant, ErrorQuant>;

struct Model {
  std::vector<Layer> layers;
  bool injected = false;
};

// Two-layer style MLP builder: Linear(dims[0]->dims[1]), ReLU, ...,
// Linear(dims[n-2]->dims[n-1]). Weights seeded uniform, biases zero.
Model make_mlp(const std::vector<int>& dims, std::uint64_t seed);

struct ForwardCache {
  std::vector<Tensor> inputs; // input to each layer, post any quantization
  Tensor output;
};

// Error signals captured as they leave each ErrorQuant on the backward pass.
struct BackwardTrace {
  std::vector<Tensor> error_signals;
};

struct LayerGrads {
  Tensor dw;
  Tensor db;
};
using Gradients = std::vector<LayerGrads>; // one entry per Linear, in order

std::pair<Tensor, ForwardCache> forward(Model& model, const Tensor& x);
// Parameter gradients are returned unquantized; gradient quantization
// happens once inside the optimizer step.
Gradients backward(Model& model, const ForwardCache& cache,
                   const Tensor& loss_grad, BackwardTrace* trace = nullptr);

// Inserts ActivationQuant after each nonlinearity (or directly after a Linear
// with no following nonlinearity) and ErrorQuant after each Linear, per the
// configured categories. A model may be injected only once.
Model inject_quantizers(const Model& model, const QuantConfig& cfg);

struct StepTrace {
  std::vector<Tensor> quantized_grads;
};

// SGD with momentum over a higher-precision accumulator copy of the
// parameters. After every step the live weights equal
// quantize_weight(accumulator_copy) exactly.
class LowPrecisionOptimizer {
public:
  LowPrecisionOptimizer(const Model& model, double lr, double momentum,
                        const QuantConfig& cfg);

  void step(Model& model, const Gradients& grads, StepTrace* trace = nullptr);

  // accumulator copies, ordered [w, b] per Linear
  const std::vector<Tensor>& accumulators() const { return acc_; }
  double learning_rate() const { return lr_; }

private:
  double lr_;
  double momentum_;
  std::optional<QuantSpec> weight_spec_;
  std::optional<QuantSpec> grad_spec_;
  std::optional<QuantSpec> acc_spec_;
  std::vector<Tensor> acc_;
  std::vector<Tensor> vel_;
};

struct Dataset {
  Tensor x; // [n x dim]
  std::vector<int> labels;
};

// Two Gaussian blobs at +/-(3,...,3) with noise clipped to 2.5 sigma, so the
// classes are linearly separable by construction for every seed.
Dataset make_blob_dataset(int n, int dim, std::uint64_t seed);

struct LossGrad {
  double loss;
  Tensor grad; // d loss / d logits
};
// Softmax cross entropy, computed in full precision (never quantized).
LossGrad softmax_cross_entropy(const Tensor& logits,
                               const std::vector<int>& labels);

double accuracy(const Tensor& logits, const std::vector<int>& labels);

struct EpochStats {
  double loss;
  double accuracy;
};

struct TrainResult {
  std::vector<EpochStats> trace;
  Model model;
};

// Minibatch SGD training loop; deterministic given the seed.
TrainResult train(Model model, const Dataset& data, const QuantConfig& cfg,
                  int epochs, double lr, double momentum, std::uint64_t seed,
                  int batch_size = 32);

} // namespace lpsim
