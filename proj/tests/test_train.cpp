#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "sslab/error.hpp"
#include "sslab/train.hpp"

using namespace sslab;

namespace {

MlpParams scalar_param(double w) {
  MlpParams p;
  p.weights = {Tensor({1, 1}, {w})};
  p.biases = {Tensor::vec({0.0})};
  return p;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(static_cast<bool>(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path(name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("adam against two hand-computed steps") {
  MlpParams p = scalar_param(0.0);
  AdamState state = make_adam(p);
  std::vector<Tensor> grads{Tensor({1, 1}, {1.0}), Tensor::vec({0.0})};

  adam_step(p, grads, state, 0.1);
  // Bias correction makes the first step exactly lr in the gradient
  // direction, up to eps: m_hat = 1, v_hat = 1.
  CHECK(std::abs(p.weights[0][0] - (-0.1 / (1.0 + 1e-8))) < 1e-15);
  CHECK(p.biases[0][0] == 0.0);

  adam_step(p, grads, state, 0.1);
  CHECK(std::abs(p.weights[0][0] - (-0.2 / (1.0 + 1e-8))) < 1e-12);

  std::vector<Tensor> bad{Tensor({1, 1}, {std::nan("")}), Tensor::vec({0.0})};
  CHECK_THROWS_WITH_AS(adam_step(p, bad, state, 0.1),
                       doctest::Contains("non-finite gradient"), Error);
  std::vector<Tensor> wrong_shape{Tensor({1, 1}, {1.0})};
  CHECK_THROWS_AS(adam_step(p, wrong_shape, state, 0.1), Error);
}

TEST_CASE("ema shadow trails the live parameters") {
  MlpParams p = scalar_param(0.0);
  EmaState ema = make_ema(p, 0.5);
  p.weights[0][0] = 1.0;
  ema_update(ema, p);
  CHECK(ema.shadow.weights[0][0] == doctest::Approx(0.5));
  ema_update(ema, p);
  CHECK(ema.shadow.weights[0][0] == doctest::Approx(0.75));
  CHECK_THROWS_AS(make_ema(p, 1.0), Error);
}

TEST_CASE("warmup ramp values") {
  CHECK(std::abs(warmup_weight(0, 100) - 0.006737946999085467) < 1e-18);
  CHECK(std::abs(warmup_weight(50, 100) - 0.2865047968601901) < 1e-16);
  CHECK(warmup_weight(100, 100) == 1.0);
  CHECK(warmup_weight(250, 100) == 1.0);
  CHECK(warmup_weight(0, 0) == 1.0);
  CHECK(warmup_weight(3, -5) == 1.0);
}

TEST_CASE("learning rate schedule") {
  CHECK(lr_at(0.3, 1999, 0, 2000) == 0.3);
  CHECK(lr_at(0.3, 9, 10, 20) == 0.3);
  CHECK(lr_at(0.3, 10, 10, 20) == 0.3);
  CHECK(lr_at(0.3, 15, 10, 20) == doctest::Approx(0.15));
  CHECK(lr_at(0.3, 20, 10, 20) == 0.0);
}

TEST_CASE("error evaluation counts argmax mismatches") {
  MlpParams p;
  p.weights = {Tensor({1, 2}, {1.0, -1.0})};
  p.biases = {Tensor::vec({0.0, 0.0})};
  Tensor x({2, 1}, {1.0, -1.0});
  CHECK(evaluate_error(p, x, {0, 1}) == 0.0);
  CHECK(evaluate_error(p, x, {1, 0}) == 1.0);
  CHECK(evaluate_error(p, x, {0, 0}) == 0.5);
}

TEST_CASE("metrics files are byte-stable") {
  std::vector<MetricRow> rows{{100, "total", 1.0 / 3.0},
                              {100, "val_error", 0.25},
                              {200, "total", 0.1234567890123456789}};
  TempFile a("test_tmp_metrics_a.csv");
  TempFile b("test_tmp_metrics_b.csv");
  write_metrics_csv(rows, a.path);
  write_metrics_csv(rows, b.path);
  std::string text = read_file(a.path);
  CHECK(text == read_file(b.path));
  CHECK(text.substr(0, 16) == "step,term,value\n");
  CHECK(text.find("100,total,0.33333333333333331\n") != std::string::npos);
}

TEST_CASE("dataset construction is driven by the split seed alone") {
  ExperimentConfig cfg;
  cfg.dataset = "toy1d";
  cfg.toy_n_labeled = 10;
  cfg.toy_n_unlabeled = 50;
  cfg.n_labeled = 10;
  cfg.split_seed = 4;
  cfg.seed = 1;
  ExperimentData d1 = build_dataset(cfg);
  cfg.seed = 99;  // training seed must not matter
  ExperimentData d2 = build_dataset(cfg);
  CHECK(d1.data.features.values() == d2.data.features.values());
  CHECK(d1.split.labeled == d2.split.labeled);
  CHECK(d1.toy_boundary == 0.0);

  cfg.split_seed = 5;
  ExperimentData d3 = build_dataset(cfg);
  CHECK(d1.data.features.values() != d3.data.features.values());
}

namespace {

ExperimentConfig small_toy_run() {
  ExperimentConfig cfg;
  cfg.dataset = "toy1d";
  cfg.toy_n_labeled = 12;
  cfg.toy_n_unlabeled = 60;
  cfg.n_labeled = 12;
  cfg.hidden = {};
  cfg.lr = 0.05;
  cfg.total_steps = 30;
  cfg.warmup_steps = 10;
  cfg.eval_interval = 10;
  cfg.batch_labeled = 8;
  cfg.batch_unlabeled = 8;
  return cfg;
}

}  // namespace

TEST_CASE("training runs log metrics and reproduce exactly") {
  ExperimentConfig cfg = small_toy_run();
  TrainResult r1 = train_run(cfg);
  CHECK(r1.steps_run == 30);
  CHECK(r1.val_error >= 0.0);
  CHECK(r1.val_error <= 1.0);

  // Metric stream: three eval points plus the final test row.
  std::size_t val_rows = 0, test_rows = 0;
  for (const MetricRow& row : r1.metrics) {
    if (row.term == "val_error") ++val_rows;
    if (row.term == "test_error") ++test_rows;
  }
  CHECK(val_rows == 3);
  CHECK(test_rows == 1);
  CHECK(r1.metrics.back().term == "test_error");
  CHECK(r1.metrics.back().value == r1.test_error);

  TrainResult r2 = train_run(cfg);
  REQUIRE(r2.metrics.size() == r1.metrics.size());
  for (std::size_t i = 0; i < r1.metrics.size(); ++i) {
    CHECK(r1.metrics[i].step == r2.metrics[i].step);
    CHECK(r1.metrics[i].term == r2.metrics[i].term);
    CHECK(r1.metrics[i].value == r2.metrics[i].value);
  }
  for (std::size_t i = 0; i < r1.params.weights.size(); ++i)
    CHECK(r1.params.weights[i].values() == r2.params.weights[i].values());
}

TEST_CASE("unsupervised methods run on the toy problem") {
  ExperimentConfig cfg = small_toy_run();
  cfg.method = Method::kNs3l;
  cfg.lambda1 = 1.0;
  cfg.neg_strategy = NegStrategy::kUniform;
  cfg.neg_p = 1;
  TrainResult r = train_run(cfg);
  bool saw_ns3l = false, saw_err_rate = false;
  for (const MetricRow& row : r.metrics) {
    saw_ns3l |= row.term == "ns3l";
    saw_err_rate |= row.term == "neg_error_rate";
  }
  CHECK(saw_ns3l);
  CHECK(saw_err_rate);
}

TEST_CASE("neighbour strategies precompute their pool mask") {
  ExperimentConfig cfg;
  cfg.dataset = "blobs";
  cfg.blobs_classes = 3;
  cfg.blobs_per_class = 40;
  cfg.blobs_dim = 3;
  cfg.blobs_spread = 0.3;
  cfg.n_labeled = 9;
  cfg.hidden = {8};
  cfg.lr = 0.01;
  cfg.total_steps = 6;
  cfg.warmup_steps = 0;
  cfg.eval_interval = 3;
  cfg.batch_labeled = 9;
  cfg.batch_unlabeled = 16;
  cfg.method = Method::kNs3l;
  cfg.lambda1 = 1.0;
  cfg.neg_strategy = NegStrategy::kNnExclude1;
  TrainResult r = train_run(cfg);
  CHECK(r.steps_run == 6);

  cfg.neg_strategy = NegStrategy::kFurthest;
  TrainResult r2 = train_run(cfg);
  CHECK(r2.steps_run == 6);
}

TEST_CASE("ema evaluation uses the shadow parameters") {
  ExperimentConfig cfg = small_toy_run();
  cfg.ema_decay = 0.9;
  TrainResult live = train_run(cfg);
  cfg.eval_with_ema = true;
  TrainResult shadow = train_run(cfg);
  // Same trajectory, so the live parameters coincide...
  for (std::size_t i = 0; i < live.params.weights.size(); ++i)
    CHECK(live.params.weights[i].values() == shadow.params.weights[i].values());
  // ...but the shadow lags them.
  CHECK(shadow.ema_params.weights[0].values() !=
        shadow.params.weights[0].values());
}

TEST_CASE("divergence reports the failing step") {
  ExperimentConfig cfg = small_toy_run();
  cfg.lr = 1e308;
  cfg.total_steps = 10;
  try {
    train_run(cfg);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.step() >= 1);
    CHECK(std::string(e.what()).find("diverged at step") != std::string::npos);
  }
}
