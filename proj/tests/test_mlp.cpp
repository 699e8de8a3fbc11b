#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "sslab/error.hpp"
#include "sslab/mlp.hpp"

using namespace sslab;

namespace {

MlpParams small_net(std::uint64_t seed = 5) {
  Rng rng(seed);
  return init_params(MlpSpec{{4, 8, 3}, 0.1}, rng);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(static_cast<bool>(in));
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("init shapes and spec validation") {
  MlpParams p = small_net();
  CHECK(p.num_layers() == 2);
  CHECK(p.input_dim() == 4);
  CHECK(p.num_classes() == 3);
  CHECK(p.weights[0].shape() == std::vector<std::size_t>{4, 8});
  CHECK(p.biases[0].shape() == std::vector<std::size_t>{8});
  for (std::size_t j = 0; j < 8; ++j) CHECK(p.biases[0][j] == 0.0);

  Rng rng(1);
  CHECK_THROWS_AS(init_params(MlpSpec{{4}, 0.1}, rng), Error);
  CHECK_THROWS_AS(init_params(MlpSpec{{4, 1}, 0.1}, rng), Error);  // 1 class
  CHECK_THROWS_AS(init_params(MlpSpec{{4, 3}, 1.5}, rng), Error);
}

TEST_CASE("init is deterministic in the seed") {
  MlpParams a = small_net(9), b = small_net(9), c = small_net(10);
  CHECK(a.weights[0].values() == b.weights[0].values());
  CHECK(a.weights[0].values() != c.weights[0].values());
}

TEST_CASE("forward outputs simplex rows and value path matches tape path") {
  MlpParams p = small_net();
  Rng rng(3);
  Tensor x = Tensor::zeros(5, 4);
  for (std::size_t i = 0; i < x.numel(); ++i) x[i] = rng.uniform(-1.0, 1.0);

  Tensor probs = predict_probs(p, x);
  CHECK(probs.rows() == 5);
  CHECK(probs.cols() == 3);
  for (std::size_t b = 0; b < 5; ++b) {
    double s = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(probs.at(b, k) > 0.0);
      s += probs.at(b, k);
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }

  Tape tape;
  MlpVars vars = make_vars(tape, p);
  const Tensor& taped = tape.value(predict_probs(tape, vars, tape.leaf(x)));
  CHECK(taped.values() == probs.values());
}

TEST_CASE("predict_classes takes the row argmax") {
  MlpParams p;
  p.weights = {Tensor({1, 2}, {1.0, -1.0})};
  p.biases = {Tensor({2}, {0.0, 0.0})};
  std::vector<int> y = predict_classes(p, Tensor({2, 1}, {2.0, -2.0}));
  CHECK(y[0] == 0);
  CHECK(y[1] == 1);
}

TEST_CASE("checkpoint round trip is byte-stable") {
  MlpParams p = small_net(21);
  const std::string path = "ckpt_test.bin";
  save_checkpoint(p, path);
  MlpParams q = load_checkpoint(path);
  CHECK(q.num_layers() == p.num_layers());
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    CHECK(q.weights[l].values() == p.weights[l].values());
    CHECK(q.biases[l].values() == p.biases[l].values());
  }
  const std::string path2 = "ckpt_test2.bin";
  save_checkpoint(q, path2);
  CHECK(read_file(path) == read_file(path2));
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("checkpoint header layout") {
  MlpParams p;
  p.weights = {Tensor({1, 2}, {1.5, -2.5})};
  p.biases = {Tensor({2}, {0.25, 0.5})};
  const std::string path = "ckpt_header.bin";
  save_checkpoint(p, path);
  std::string bytes = read_file(path);
  // magic, version, layer count, rows, cols: five little-endian u32 words,
  // then 2 weights + 2 biases as f64.
  REQUIRE(bytes.size() == 20 + 4 * 8);
  CHECK(bytes.substr(0, 4) == "NS3L");
  CHECK(bytes[4] == 1);
  CHECK(bytes[8] == 1);   // one layer
  CHECK(bytes[12] == 1);  // rows
  CHECK(bytes[16] == 2);  // cols
  std::remove(path.c_str());
}

TEST_CASE("checkpoint loader rejects malformed files") {
  const std::string path = "ckpt_bad.bin";
  {
    std::ofstream out(path, std::ios::binary);
    out << "XXXX";
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("magic"),
                       Error);
  {
    std::ofstream out(path, std::ios::binary);
    out << "NS3L";  // then truncated
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("truncated"),
                       Error);
  MlpParams p = small_net();
  save_checkpoint(p, path);
  {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out << "junk";
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("trailing"),
                       Error);
  CHECK_THROWS_AS(load_checkpoint("does_not_exist.bin"), Error);
  std::remove(path.c_str());
}

TEST_CASE("param_grads aligns with tensors() order") {
  MlpParams p = small_net();
  Tape tape;
  MlpVars vars = make_vars(tape, p);
  Tensor x = Tensor::full(2, 4, 0.3);
  Var probs = predict_probs(tape, vars, tape.leaf(x));
  std::vector<Tensor> grads = param_grads(tape, vars, mean_all(probs));
  std::vector<Tensor*> tensors = p.tensors();
  REQUIRE(grads.size() == tensors.size());
  for (std::size_t i = 0; i < grads.size(); ++i)
    CHECK(grads[i].same_shape(*tensors[i]));
}
