#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sslab/rng.hpp"
#include "sslab/tape.hpp"
#include "sslab/tensor.hpp"

namespace sslab {

/// Fully connected classifier: leaky-relu hidden layers, softmax output.
struct MlpSpec {
  std::vector<std::size_t> layer_widths;  // input, hidden..., num_classes
  double leaky_slope = 0.1;

  void validate() const;
  std::size_t input_dim() const { return layer_widths.front(); }
  std::size_t num_classes() const { return layer_widths.back(); }
};

struct MlpParams {
  std::vector<Tensor> weights;  // [in, out] per layer
  std::vector<Tensor> biases;   // rank-1 [out] per layer
  double leaky_slope = 0.1;

  std::size_t num_layers() const { return weights.size(); }
  std::size_t input_dim() const { return weights.front().rows(); }
  std::size_t num_classes() const { return weights.back().cols(); }
  void validate() const;

  /// Flat view in layer order (W0, b0, W1, b1, ...); used by the optimizer.
  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
};

/// He-style init: W ~ N(0, sqrt(2 / fan_in)), biases zero.
MlpParams init_params(const MlpSpec& spec, Rng& rng);

/// Parameters registered as leaves on a tape, ready for graph building.
struct MlpVars {
  std::vector<Var> weights;
  std::vector<Var> biases;
  double leaky_slope = 0.1;
};

MlpVars make_vars(Tape& tape, const MlpParams& params);

/// Softmax class probabilities, shape [batch, num_classes].
Var predict_probs(Tape& tape, const MlpVars& vars, Var x);

/// Pre-softmax activations.
Var predict_logits(Tape& tape, const MlpVars& vars, Var x);

/// Value-level forward for evaluation paths that need no gradients.
Tensor predict_probs(const MlpParams& params, const Tensor& x);

std::vector<int> predict_classes(const MlpParams& params, const Tensor& x);

/// Gradients of a scalar root with respect to every parameter, in the same
/// order as MlpParams::tensors().
std::vector<Tensor> param_grads(const Tape& tape, const MlpVars& vars, Var root);

/// Binary checkpoint, little-endian:
///   magic "NS3L", version u32, layer count u32,
///   then per layer: rows u32, cols u32, rows*cols f64 weights (row-major),
///   cols f64 biases.
void save_checkpoint(const MlpParams& params, const std::string& path);
MlpParams load_checkpoint(const std::string& path);

}  // namespace sslab
