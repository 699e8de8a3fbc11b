// Hot-path benchmarks: tape round trips, the negative-label loss, the
// adversarial perturbation search, and a full mixed-batch construction.
#include <benchmark/benchmark.h>

#include <vector>

#include "sslab/losses.hpp"
#include "sslab/mixmatch.hpp"
#include "sslab/mlp.hpp"
#include "sslab/rng.hpp"
#include "sslab/tape.hpp"

using namespace sslab;

namespace {

Tensor random_matrix(Rng& rng, std::size_t r, std::size_t c, double scale) {
  std::vector<double> v(r * c);
  for (double& x : v) x = rng.normal(0.0, scale);
  return Tensor({r, c}, v);
}

MlpParams bench_params(Rng& rng) {
  MlpSpec spec;
  spec.layer_widths = {8, 32, 4};
  return init_params(spec, rng);
}

void bm_matmul_forward_backward(benchmark::State& state) {
  Rng rng(1);
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Tensor a = random_matrix(rng, n, n, 1.0);
  Tensor b = random_matrix(rng, n, n, 1.0);
  for (auto _ : state) {
    Tape tape;
    Var va = tape.leaf(a), vb = tape.leaf(b);
    Var loss = sum_all(matmul(va, vb));
    auto grads = tape.backward(loss);
    benchmark::DoNotOptimize(grads[va.id][0]);
  }
}
BENCHMARK(bm_matmul_forward_backward)->Arg(16)->Arg(64);

void bm_mlp_forward(benchmark::State& state) {
  Rng rng(2);
  MlpParams params = bench_params(rng);
  Tensor x = random_matrix(rng, 100, 8, 1.0);
  for (auto _ : state) {
    Tensor probs = predict_probs(params, x);
    benchmark::DoNotOptimize(probs[0]);
  }
}
BENCHMARK(bm_mlp_forward);

void bm_ns3l_loss_backward(benchmark::State& state) {
  Rng rng(3);
  MlpParams params = bench_params(rng);
  Tensor x = random_matrix(rng, 100, 8, 1.0);
  Tensor probs = predict_probs(params, x);
  NegativeLabelMask mask = threshold_mask(probs, 0.04);
  for (auto _ : state) {
    Tape tape;
    MlpVars vars = make_vars(tape, params);
    Var loss = ns3l_loss(tape, predict_probs(tape, vars, tape.leaf(x)), mask);
    auto grads = tape.backward(loss);
    benchmark::DoNotOptimize(grads[vars.weights[0].id][0]);
  }
}
BENCHMARK(bm_ns3l_loss_backward);

void bm_vat_perturbation(benchmark::State& state) {
  Rng rng(4);
  MlpParams params = bench_params(rng);
  Tensor x = random_matrix(rng, 100, 8, 1.0);
  VatConfig cfg;
  for (auto _ : state) {
    Tensor r = vat_perturbation(params, x, cfg, rng);
    benchmark::DoNotOptimize(r[0]);
  }
}
BENCHMARK(bm_vat_perturbation);

void bm_mixmatch_batch(benchmark::State& state) {
  Rng rng(5);
  MlpParams params = bench_params(rng);
  Tensor xl = random_matrix(rng, 16, 8, 1.0);
  Tensor xu = random_matrix(rng, 16, 8, 1.0);
  std::vector<int> yl(16);
  for (std::size_t i = 0; i < yl.size(); ++i)
    yl[i] = static_cast<int>(rng.uniform_index(4));
  MixMatchConfig cfg;
  for (auto _ : state) {
    Tape tape;
    MlpVars vars = make_vars(tape, params);
    MixedBatch mixed = mixmatch_batch(tape, vars, xl, yl, 4, xu, cfg, rng);
    benchmark::DoNotOptimize(mixed.y_unsup[0]);
  }
}
BENCHMARK(bm_mixmatch_batch);

}  // namespace

BENCHMARK_MAIN();
