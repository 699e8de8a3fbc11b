#include "sslab/mlp.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "sslab/error.hpp"

namespace sslab {

namespace {

constexpr std::uint32_t kMagic = 0x4c33534eu;  // bytes "NS3L" read LSB-first
constexpr std::uint32_t kVersion = 1u;

void write_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b, 4);
}

void write_f64(std::ostream& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  out.write(b, 8);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  require(static_cast<bool>(in), "checkpoint truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double read_f64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  require(static_cast<bool>(in), "checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

}  // namespace

void MlpSpec::validate() const {
  require(layer_widths.size() >= 2,
          "mlp needs at least input and output widths");
  for (std::size_t w : layer_widths)
    require(w >= 1, "mlp layer widths must be positive");
  require(num_classes() >= 2, "mlp output width (classes) must be at least 2");
  require(leaky_slope >= 0.0 && leaky_slope < 1.0,
          "leaky slope must lie in [0, 1)");
}

void MlpParams::validate() const {
  require(!weights.empty() && weights.size() == biases.size(),
          "mlp params: weight/bias layer counts differ");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    require(weights[l].rank() == 2, "mlp weight must be rank-2");
    require(biases[l].rank() == 1 && biases[l].numel() == weights[l].cols(),
            "mlp bias width must match weight output width");
    if (l + 1 < weights.size())
      require(weights[l].cols() == weights[l + 1].rows(),
              "mlp adjacent layer widths do not chain");
  }
  require(num_classes() >= 2, "mlp needs at least 2 output classes");
}

std::vector<Tensor*> MlpParams::tensors() {
  std::vector<Tensor*> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
  return out;
}

std::vector<const Tensor*> MlpParams::tensors() const {
  std::vector<const Tensor*> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
  return out;
}

MlpParams init_params(const MlpSpec& spec, Rng& rng) {
  spec.validate();
  MlpParams params;
  params.leaky_slope = spec.leaky_slope;
  for (std::size_t l = 0; l + 1 < spec.layer_widths.size(); ++l) {
    std::size_t fan_in = spec.layer_widths[l];
    std::size_t fan_out = spec.layer_widths[l + 1];
    double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    Tensor w = Tensor::zeros(fan_in, fan_out);
    for (std::size_t i = 0; i < w.numel(); ++i) w[i] = rng.normal(0.0, stddev);
    params.weights.push_back(std::move(w));
    params.biases.push_back(Tensor({fan_out}));
  }
  return params;
}

MlpVars make_vars(Tape& tape, const MlpParams& params) {
  params.validate();
  MlpVars vars;
  vars.leaky_slope = params.leaky_slope;
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    vars.weights.push_back(tape.leaf(params.weights[l]));
    vars.biases.push_back(tape.leaf(params.biases[l]));
  }
  return vars;
}

Var predict_logits(Tape& tape, const MlpVars& vars, Var x) {
  require(!vars.weights.empty(), "predict on empty mlp");
  require(tape.value(x).rank() == 2, "mlp input must be rank-2 [batch, dim]");
  Var h = x;
  for (std::size_t l = 0; l < vars.weights.size(); ++l) {
    h = add_rowvec(matmul(h, vars.weights[l]), vars.biases[l]);
    if (l + 1 < vars.weights.size()) h = leaky_relu(h, vars.leaky_slope);
  }
  return h;
}

Var predict_probs(Tape& tape, const MlpVars& vars, Var x) {
  return row_softmax(predict_logits(tape, vars, x));
}

Tensor predict_probs(const MlpParams& params, const Tensor& x) {
  Tape tape;
  MlpVars vars = make_vars(tape, params);
  Var probs = predict_probs(tape, vars, tape.leaf(x));
  return tape.value(probs);
}

std::vector<int> predict_classes(const MlpParams& params, const Tensor& x) {
  Tensor probs = predict_probs(params, x);
  std::vector<int> out(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < probs.cols(); ++j)
      if (probs.at(i, j) > probs.at(i, best)) best = j;
    out[i] = static_cast<int>(best);
  }
  return out;
}

std::vector<Tensor> param_grads(const Tape& tape, const MlpVars& vars, Var root) {
  std::vector<Tensor> all = tape.backward(root);
  std::vector<Tensor> out;
  for (std::size_t l = 0; l < vars.weights.size(); ++l) {
    out.push_back(std::move(all[static_cast<std::size_t>(vars.weights[l].id)]));
    out.push_back(std::move(all[static_cast<std::size_t>(vars.biases[l].id)]));
  }
  return out;
}

void save_checkpoint(const MlpParams& params, const std::string& path) {
  params.validate();
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), "cannot open checkpoint for writing: " + path);
  write_u32(out, kMagic);
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(params.num_layers()));
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    const Tensor& w = params.weights[l];
    write_u32(out, static_cast<std::uint32_t>(w.rows()));
    write_u32(out, static_cast<std::uint32_t>(w.cols()));
    for (std::size_t i = 0; i < w.numel(); ++i) write_f64(out, w[i]);
    for (std::size_t j = 0; j < w.cols(); ++j) write_f64(out, params.biases[l][j]);
  }
  require(static_cast<bool>(out), "checkpoint write failed: " + path);
}

MlpParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open checkpoint: " + path);
  require(read_u32(in) == kMagic, "bad checkpoint magic (expected NS3L)");
  std::uint32_t version = read_u32(in);
  require(version == kVersion,
          "unsupported checkpoint version " + std::to_string(version));
  std::uint32_t layers = read_u32(in);
  require(layers >= 1 && layers < 1024, "implausible checkpoint layer count");
  MlpParams params;
  for (std::uint32_t l = 0; l < layers; ++l) {
    std::uint32_t rows = read_u32(in);
    std::uint32_t cols = read_u32(in);
    require(rows >= 1 && cols >= 1, "checkpoint layer with zero dimension");
    Tensor w = Tensor::zeros(rows, cols);
    for (std::size_t i = 0; i < w.numel(); ++i) w[i] = read_f64(in);
    Tensor b({cols});
    for (std::size_t j = 0; j < cols; ++j) b[j] = read_f64(in);
    params.weights.push_back(std::move(w));
    params.biases.push_back(std::move(b));
  }
  in.peek();
  require(in.eof(), "trailing bytes after checkpoint payload");
  params.validate();
  return params;
}

}  // namespace sslab
