#pragma once

#include <cstddef>
#include <deque>
#include <vector>

#include "sslab/tensor.hpp"

namespace sslab {

class Tape;

/// Handle to a node on a Tape.  Cheap to copy; valid for the tape's lifetime.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
  bool valid() const { return tape != nullptr && id >= 0; }
};

enum class OpKind {
  kLeaf,
  kMatmul,
  kAdd,
  kSub,
  kMul,
  kScale,      // param: multiplier
  kAddScalar,  // param: addend
  kAddRowVec,  // bias broadcast: [B,K] + [K] per row
  kLeakyRelu,  // param: negative slope
  kExp,
  kLog,
  kSquare,
  kClampMin,  // param: floor
  kRowSoftmax,
  kRowSum,   // [B,K] -> [B,1]
  kSumAll,   // -> scalar
  kMeanAll,  // -> scalar
  kStopGradient,
};

/// Reverse-mode tape.  Forward values are computed eagerly as nodes are
/// recorded; backward replays the tape once in reverse.  Append-only: nodes
/// may only reference earlier nodes, so tape order is a topological order.
class Tape {
public:
  /// Input node.  Value must be finite.
  Var leaf(Tensor value);

  /// Records one op, validates shapes, runs its forward, and checks the
  /// result for non-finite entries.
  Var record(OpKind kind, Var a, Var b, double param = 0.0);

  /// References stay valid as more nodes are recorded (deque storage).
  const Tensor& value(Var v) const;
  const Tensor& value(int id) const;
  std::size_t size() const { return nodes_.size(); }

  /// d(root)/d(node) for every node at or before root.  Root must be scalar.
  /// stop_gradient nodes receive a zero gradient and block all flow upstream.
  std::vector<Tensor> backward(Var root) const;

private:
  struct Node {
    OpKind kind;
    int a = -1;
    int b = -1;
    double param = 0.0;
    Tensor value;
  };

  Tensor run_forward(OpKind kind, int a, int b, double param) const;
  void accumulate(const Node& node, const Tensor& grad,
                  std::vector<Tensor>& grads) const;

  std::deque<Node> nodes_;
};

// Graph-building ops.  Each records one node on the operands' tape.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var add_rowvec(Var a, Var row);
Var leaky_relu(Var a, double negative_slope);
Var vexp(Var a);
Var vlog(Var a);
Var square(Var a);
Var clamp_min(Var a, double floor);
Var row_softmax(Var a);
Var row_sum(Var a);
Var sum_all(Var a);
Var mean_all(Var a);
Var stop_gradient(Var a);

}  // namespace sslab
