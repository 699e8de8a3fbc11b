#include <cmath>

#include "doctest.h"
#include "sslab/error.hpp"
#include "sslab/tape.hpp"

using namespace sslab;

namespace {

Tensor grad_of(Tape& tape, Var root, Var wrt) {
  return tape.backward(root)[static_cast<std::size_t>(wrt.id)];
}

}  // namespace

TEST_CASE("matmul forward and backward") {
  Tape t;
  Var a = t.leaf(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  Var b = t.leaf(Tensor({3, 2}, {1, 0, 0, 1, 1, 1}));
  Var c = matmul(a, b);
  const Tensor& v = t.value(c);
  CHECK(v.shape() == std::vector<std::size_t>{2, 2});
  CHECK(v.at(0, 0) == 4.0);   // 1 + 3
  CHECK(v.at(0, 1) == 5.0);   // 2 + 3
  CHECK(v.at(1, 0) == 10.0);  // 4 + 6
  CHECK(v.at(1, 1) == 11.0);  // 5 + 6

  Var root = sum_all(c);
  Tensor ga = grad_of(t, root, a);
  // dA = G B^T with G all ones: row sums of B.
  CHECK(ga.at(0, 0) == 1.0);
  CHECK(ga.at(0, 1) == 1.0);
  CHECK(ga.at(0, 2) == 2.0);
  Tensor gb = grad_of(t, root, b);
  // dB = A^T G: column sums of A broadcast.
  CHECK(gb.at(0, 0) == 5.0);
  CHECK(gb.at(2, 1) == 9.0);

  Tape t2;
  Var bad = t2.leaf(Tensor({2, 2}, {1, 2, 3, 4}));
  CHECK_THROWS_AS(matmul(a, bad), Error);  // different tapes
  Var wrong = t.leaf(Tensor({2, 2}, {1, 2, 3, 4}));
  CHECK_THROWS_WITH_AS(matmul(a, wrong),
                       doctest::Contains("inner dimensions"), Error);
}

TEST_CASE("elementwise ops") {
  Tape t;
  Var a = t.leaf(Tensor({2}, {2.0, -3.0}));
  Var b = t.leaf(Tensor({2}, {5.0, 7.0}));
  CHECK(t.value(add(a, b))[0] == 7.0);
  CHECK(t.value(sub(a, b))[1] == -10.0);
  CHECK(t.value(mul(a, b))[0] == 10.0);
  CHECK(t.value(scale(a, -2.0))[1] == 6.0);
  CHECK(t.value(add_scalar(a, 1.5))[0] == 3.5);
  CHECK(t.value(square(a))[1] == 9.0);
  CHECK(t.value(clamp_min(a, 0.0))[1] == 0.0);
  CHECK(t.value(clamp_min(a, 0.0))[0] == 2.0);

  Var mixed = t.leaf(Tensor({3}, {1, 2, 3}));
  CHECK_THROWS_WITH_AS(add(a, mixed), doctest::Contains("shape mismatch"),
                       Error);
}

TEST_CASE("mul backward routes each operand's value to the other") {
  Tape t;
  Var a = t.leaf(Tensor({2}, {2.0, -3.0}));
  Var b = t.leaf(Tensor({2}, {5.0, 7.0}));
  Var root = sum_all(mul(a, b));
  Tensor ga = grad_of(t, root, a);
  Tensor gb = grad_of(t, root, b);
  CHECK(ga[0] == 5.0);
  CHECK(ga[1] == 7.0);
  CHECK(gb[0] == 2.0);
  CHECK(gb[1] == -3.0);
}

TEST_CASE("add_rowvec broadcasts and accumulates bias gradient") {
  Tape t;
  Var x = t.leaf(Tensor({2, 2}, {1, 2, 3, 4}));
  Var row = t.leaf(Tensor({2}, {10, 20}));
  Var y = add_rowvec(x, row);
  CHECK(t.value(y).at(0, 0) == 11.0);
  CHECK(t.value(y).at(1, 1) == 24.0);
  Var root = sum_all(y);
  Tensor grow = grad_of(t, root, row);
  CHECK(grow[0] == 2.0);  // summed over the batch dimension
  CHECK(grow[1] == 2.0);

  Var badrow = t.leaf(Tensor({3}, {1, 2, 3}));
  CHECK_THROWS_AS(add_rowvec(x, badrow), Error);
}

TEST_CASE("leaky_relu slope on the negative side only") {
  Tape t;
  Var x = t.leaf(Tensor({3}, {-2.0, 0.5, 3.0}));
  Var y = leaky_relu(x, 0.1);
  CHECK(t.value(y)[0] == doctest::Approx(-0.2));
  CHECK(t.value(y)[1] == 0.5);
  Tensor g = grad_of(t, sum_all(y), x);
  CHECK(g[0] == doctest::Approx(0.1));
  CHECK(g[1] == 1.0);
  CHECK(g[2] == 1.0);
}

TEST_CASE("exp log square backward") {
  Tape t;
  Var x = t.leaf(Tensor({2}, {0.5, 2.0}));
  Tensor ge = grad_of(t, sum_all(vexp(x)), x);
  CHECK(ge[0] == doctest::Approx(std::exp(0.5)));
  Tensor gl = grad_of(t, sum_all(vlog(x)), x);
  CHECK(gl[1] == doctest::Approx(0.5));
  Tensor gs = grad_of(t, sum_all(square(x)), x);
  CHECK(gs[1] == doctest::Approx(4.0));

  Var bad = t.leaf(Tensor({1}, {-1.0}));
  CHECK_THROWS_WITH_AS(vlog(bad), doctest::Contains("non-positive"), Error);
  Var zero = t.leaf(Tensor({1}, {0.0}));
  CHECK_THROWS_WITH_AS(vlog(zero), doctest::Contains("non-positive"), Error);
}

TEST_CASE("row_softmax rows form a simplex and shift invariance holds") {
  Tape t;
  Var x = t.leaf(Tensor({2, 3}, {1, 2, 3, -1, 0, 1}));
  const Tensor& p = t.value(row_softmax(x));
  for (std::size_t b = 0; b < 2; ++b) {
    double sum = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(p.at(b, k) > 0.0);
      sum += p.at(b, k);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  // Rows differ by a constant shift, so the distributions coincide.
  CHECK(p.at(0, 0) == doctest::Approx(p.at(1, 0)).epsilon(1e-12));

  // Huge logits must not overflow.
  Var big = t.leaf(Tensor({1, 2}, {1000.0, 999.0}));
  const Tensor& pb = t.value(row_softmax(big));
  CHECK(pb.at(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("row_softmax backward matches the closed form") {
  // d/dx_j sum_k c_k y_k = y_j (c_j - sum_k c_k y_k)
  Tape t;
  Var x = t.leaf(Tensor({1, 3}, {0.2, -0.4, 0.9}));
  Var y = row_softmax(x);
  Var c = t.leaf(Tensor({1, 3}, {1.0, 2.0, 3.0}));
  Var root = sum_all(mul(y, c));
  Tensor g = grad_of(t, root, x);
  const Tensor& yv = t.value(y);
  double dot = 0.0;
  for (std::size_t k = 0; k < 3; ++k) dot += yv.at(0, k) * t.value(c).at(0, k);
  for (std::size_t k = 0; k < 3; ++k)
    CHECK(g.at(0, k) ==
          doctest::Approx(yv.at(0, k) * (t.value(c).at(0, k) - dot)));
}

TEST_CASE("reductions") {
  Tape t;
  Var x = t.leaf(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  const Tensor& rs = t.value(row_sum(x));
  CHECK(rs.shape() == std::vector<std::size_t>{2, 1});
  CHECK(rs.at(0, 0) == 6.0);
  CHECK(rs.at(1, 0) == 15.0);
  CHECK(t.value(sum_all(x))[0] == 21.0);
  CHECK(t.value(mean_all(x))[0] == doctest::Approx(3.5));

  Tensor g = grad_of(t, mean_all(x), x);
  CHECK(g.at(1, 2) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("stop_gradient blocks flow and reads as zero") {
  Tape t;
  Var x = t.leaf(Tensor({2}, {3.0, 4.0}));
  Var cut = stop_gradient(square(x));
  Var root = sum_all(add(x, cut));
  std::vector<Tensor> grads = t.backward(root);
  CHECK(grads[static_cast<std::size_t>(x.id)][0] == 1.0);  // only direct path
  CHECK(grads[static_cast<std::size_t>(x.id)][1] == 1.0);
  CHECK(grads[static_cast<std::size_t>(cut.id)][0] == 0.0);
  CHECK(t.value(cut)[0] == 9.0);  // forward is identity
}

TEST_CASE("backward validates its root") {
  Tape t;
  Var x = t.leaf(Tensor({2}, {1.0, 2.0}));
  CHECK_THROWS_WITH_AS(t.backward(x), doctest::Contains("scalar"), Error);
  Tape other;
  Var y = other.leaf(Tensor::scalar(1.0));
  CHECK_THROWS_AS(t.backward(y), Error);
}

TEST_CASE("gradient accumulates over reuse of a node") {
  Tape t;
  Var x = t.leaf(Tensor::scalar(3.0));
  Var y = mul(x, x);  // x^2, both parents are the same node
  Tensor g = grad_of(t, sum_all(y), x);
  CHECK(g[0] == doctest::Approx(6.0));
}

TEST_CASE("non-finite forward results are rejected") {
  Tape t;
  Var x = t.leaf(Tensor({1}, {1e308}));
  CHECK_THROWS_WITH_AS(vexp(x), doctest::Contains("non-finite"), Error);
  Var big = t.leaf(Tensor({1, 1}, {1e308}));
  Var big2 = t.leaf(Tensor({1, 1}, {1e308}));
  CHECK_THROWS_AS(matmul(big, big2), Error);
  Tensor nan_leaf({1}, {std::nan("")});
  CHECK_THROWS_AS(t.leaf(nan_leaf), Error);
}
