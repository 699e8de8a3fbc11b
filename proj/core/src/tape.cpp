#include "sslab/tape.hpp"

#include <algorithm>
#include <cmath>

#include "sslab/error.hpp"

namespace sslab {

namespace {

const char* op_name(OpKind k) {
  switch (k) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kAddScalar: return "add_scalar";
    case OpKind::kAddRowVec: return "add_rowvec";
    case OpKind::kLeakyRelu: return "leaky_relu";
    case OpKind::kExp: return "exp";
    case OpKind::kLog: return "log";
    case OpKind::kSquare: return "square";
    case OpKind::kClampMin: return "clamp_min";
    case OpKind::kRowSoftmax: return "row_softmax";
    case OpKind::kRowSum: return "row_sum";
    case OpKind::kSumAll: return "sum_all";
    case OpKind::kMeanAll: return "mean_all";
    case OpKind::kStopGradient: return "stop_gradient";
  }
  return "?";
}

bool is_binary(OpKind k) {
  return k == OpKind::kMatmul || k == OpKind::kAdd || k == OpKind::kSub ||
         k == OpKind::kMul || k == OpKind::kAddRowVec;
}

}  // namespace

Var Tape::leaf(Tensor value) {
  require(value.numel() > 0, "leaf value must be non-empty");
  require(value.all_finite(), "leaf value contains a non-finite entry");
  nodes_.push_back({OpKind::kLeaf, -1, -1, 0.0, std::move(value)});
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::record(OpKind kind, Var a, Var b, double param) {
  require(kind != OpKind::kLeaf, "use Tape::leaf for input nodes");
  require(a.valid() && a.tape == this && a.id < static_cast<int>(size()),
          std::string(op_name(kind)) + ": first operand is not on this tape");
  if (is_binary(kind)) {
    require(b.valid() && b.tape == this && b.id < static_cast<int>(size()),
            std::string(op_name(kind)) + ": second operand is not on this tape");
  } else {
    b.id = -1;
  }
  Tensor out = run_forward(kind, a.id, b.id, param);
  require(out.all_finite(),
          std::string(op_name(kind)) + " produced a non-finite value");
  nodes_.push_back({kind, a.id, b.id, param, std::move(out)});
  return {this, static_cast<int>(nodes_.size() - 1)};
}

const Tensor& Tape::value(Var v) const {
  require(v.valid() && v.tape == this, "value() of a var not on this tape");
  return value(v.id);
}

const Tensor& Tape::value(int id) const {
  require(id >= 0 && id < static_cast<int>(nodes_.size()),
          "node id out of range");
  return nodes_[static_cast<std::size_t>(id)].value;
}

Tensor Tape::run_forward(OpKind kind, int ia, int ib, double param) const {
  const Tensor& a = nodes_[static_cast<std::size_t>(ia)].value;
  switch (kind) {
    case OpKind::kMatmul: {
      const Tensor& b = nodes_[static_cast<std::size_t>(ib)].value;
      require(a.rank() == 2 && b.rank() == 2, "matmul requires rank-2 operands");
      require(a.cols() == b.rows(), "matmul inner dimensions differ: " +
                                        a.shape_str() + " x " + b.shape_str());
      std::size_t m = a.rows(), k = a.cols(), n = b.cols();
      Tensor out = Tensor::zeros(m, n);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double av = a.at(i, p);
          if (av == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) out.at(i, j) += av * b.at(p, j);
        }
      return out;
    }
    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul: {
      const Tensor& b = nodes_[static_cast<std::size_t>(ib)].value;
      require(a.same_shape(b), std::string(op_name(kind)) + " shape mismatch: " +
                                   a.shape_str() + " vs " + b.shape_str());
      Tensor out = a;
      for (std::size_t i = 0; i < out.numel(); ++i) {
        if (kind == OpKind::kAdd) out[i] += b[i];
        else if (kind == OpKind::kSub) out[i] -= b[i];
        else out[i] *= b[i];
      }
      return out;
    }
    case OpKind::kScale: {
      Tensor out = a;
      for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= param;
      return out;
    }
    case OpKind::kAddScalar: {
      Tensor out = a;
      for (std::size_t i = 0; i < out.numel(); ++i) out[i] += param;
      return out;
    }
    case OpKind::kAddRowVec: {
      const Tensor& b = nodes_[static_cast<std::size_t>(ib)].value;
      require(b.rows() == 1 && b.cols() == a.cols(),
              "add_rowvec: row shape " + b.shape_str() +
                  " does not broadcast over " + a.shape_str());
      Tensor out = a;
      for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out.at(i, j) += b[j];
      return out;
    }
    case OpKind::kLeakyRelu: {
      Tensor out = a;
      for (std::size_t i = 0; i < out.numel(); ++i)
        if (out[i] < 0.0) out[i] *= param;
      return out;
    }
    case OpKind::kExp: {
      Tensor out = a;
      for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::exp(out[i]);
      return out;
    }
    case OpKind::kLog: {
      Tensor out = a;
      for (std::size_t i = 0; i < out.numel(); ++i) {
        require(out[i] > 0.0, "log of non-positive value");
        out[i] = std::log(out[i]);
      }
      return out;
    }
    case OpKind::kSquare: {
      Tensor out = a;
      for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= out[i];
      return out;
    }
    case OpKind::kClampMin: {
      Tensor out = a;
      for (std::size_t i = 0; i < out.numel(); ++i)
        out[i] = std::max(out[i], param);
      return out;
    }
    case OpKind::kRowSoftmax: {
      require(a.rank() == 2, "row_softmax requires a rank-2 operand");
      Tensor out = a;
      for (std::size_t i = 0; i < a.rows(); ++i) {
        double hi = out.at(i, 0);
        for (std::size_t j = 1; j < a.cols(); ++j) hi = std::max(hi, out.at(i, j));
        double denom = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) {
          double e = std::exp(out.at(i, j) - hi);
          out.at(i, j) = e;
          denom += e;
        }
        for (std::size_t j = 0; j < a.cols(); ++j) out.at(i, j) /= denom;
      }
      return out;
    }
    case OpKind::kRowSum: {
      require(a.rank() == 2, "row_sum requires a rank-2 operand");
      Tensor out = Tensor::zeros(a.rows(), 1);
      for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out.at(i, 0) += a.at(i, j);
      return out;
    }
    case OpKind::kSumAll:
    case OpKind::kMeanAll: {
      double s = 0.0;
      for (std::size_t i = 0; i < a.numel(); ++i) s += a[i];
      if (kind == OpKind::kMeanAll) s /= static_cast<double>(a.numel());
      return Tensor::scalar(s);
    }
    case OpKind::kStopGradient:
      return a;
    case OpKind::kLeaf:
      break;
  }
  fail("unreachable op kind");
}

void Tape::accumulate(const Node& node, const Tensor& grad,
                      std::vector<Tensor>& grads) const {
  const std::size_t ia = static_cast<std::size_t>(node.a);
  Tensor& ga = grads[ia];
  const Tensor& va = nodes_[ia].value;
  switch (node.kind) {
    case OpKind::kMatmul: {
      const std::size_t ib = static_cast<std::size_t>(node.b);
      const Tensor& vb = nodes_[ib].value;
      Tensor& gb = grads[ib];
      std::size_t m = va.rows(), k = va.cols(), n = vb.cols();
      // dA += G B^T, dB += A^T G
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += grad.at(i, j) * vb.at(p, j);
          ga.at(i, p) += s;
        }
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < n; ++j) {
          double s = 0.0;
          for (std::size_t i = 0; i < m; ++i) s += va.at(i, p) * grad.at(i, j);
          gb.at(p, j) += s;
        }
      return;
    }
    case OpKind::kAdd: {
      Tensor& gb = grads[static_cast<std::size_t>(node.b)];
      for (std::size_t i = 0; i < grad.numel(); ++i) {
        ga[i] += grad[i];
        gb[i] += grad[i];
      }
      return;
    }
    case OpKind::kSub: {
      Tensor& gb = grads[static_cast<std::size_t>(node.b)];
      for (std::size_t i = 0; i < grad.numel(); ++i) {
        ga[i] += grad[i];
        gb[i] -= grad[i];
      }
      return;
    }
    case OpKind::kMul: {
      const std::size_t ib = static_cast<std::size_t>(node.b);
      const Tensor& vb = nodes_[ib].value;
      Tensor& gb = grads[ib];
      for (std::size_t i = 0; i < grad.numel(); ++i) {
        ga[i] += grad[i] * vb[i];
        gb[i] += grad[i] * va[i];
      }
      return;
    }
    case OpKind::kScale:
      for (std::size_t i = 0; i < grad.numel(); ++i) ga[i] += grad[i] * node.param;
      return;
    case OpKind::kAddScalar:
      for (std::size_t i = 0; i < grad.numel(); ++i) ga[i] += grad[i];
      return;
    case OpKind::kAddRowVec: {
      Tensor& gb = grads[static_cast<std::size_t>(node.b)];
      for (std::size_t i = 0; i < grad.rows(); ++i)
        for (std::size_t j = 0; j < grad.cols(); ++j) {
          ga.at(i, j) += grad.at(i, j);
          gb[j] += grad.at(i, j);
        }
      return;
    }
    case OpKind::kLeakyRelu:
      for (std::size_t i = 0; i < grad.numel(); ++i)
        ga[i] += va[i] < 0.0 ? grad[i] * node.param : grad[i];
      return;
    case OpKind::kExp:
      for (std::size_t i = 0; i < grad.numel(); ++i)
        ga[i] += grad[i] * node.value[i];
      return;
    case OpKind::kLog:
      for (std::size_t i = 0; i < grad.numel(); ++i) ga[i] += grad[i] / va[i];
      return;
    case OpKind::kSquare:
      for (std::size_t i = 0; i < grad.numel(); ++i)
        ga[i] += 2.0 * va[i] * grad[i];
      return;
    case OpKind::kClampMin:
      for (std::size_t i = 0; i < grad.numel(); ++i)
        if (va[i] >= node.param) ga[i] += grad[i];
      return;
    case OpKind::kRowSoftmax: {
      const Tensor& y = node.value;
      for (std::size_t i = 0; i < y.rows(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < y.cols(); ++j) dot += grad.at(i, j) * y.at(i, j);
        for (std::size_t j = 0; j < y.cols(); ++j)
          ga.at(i, j) += y.at(i, j) * (grad.at(i, j) - dot);
      }
      return;
    }
    case OpKind::kRowSum:
      for (std::size_t i = 0; i < va.rows(); ++i)
        for (std::size_t j = 0; j < va.cols(); ++j) ga.at(i, j) += grad.at(i, 0);
      return;
    case OpKind::kSumAll:
      for (std::size_t i = 0; i < va.numel(); ++i) ga[i] += grad[0];
      return;
    case OpKind::kMeanAll: {
      double g = grad[0] / static_cast<double>(va.numel());
      for (std::size_t i = 0; i < va.numel(); ++i) ga[i] += g;
      return;
    }
    case OpKind::kStopGradient:
    case OpKind::kLeaf:
      return;
  }
}

std::vector<Tensor> Tape::backward(Var root) const {
  require(root.valid() && root.tape == this, "backward root is not on this tape");
  require(value(root).is_scalar(), "backward root must be a scalar");

  std::vector<Tensor> grads;
  grads.reserve(nodes_.size());
  for (const Node& n : nodes_) grads.push_back(n.value.zeros_like());
  grads[static_cast<std::size_t>(root.id)][0] = 1.0;

  for (int i = root.id; i >= 0; --i) {
    const Node& node = nodes_[static_cast<std::size_t>(i)];
    if (node.kind == OpKind::kLeaf) continue;
    if (node.kind == OpKind::kStopGradient) {
      // Blocks flow: the node's own gradient reads as zero and nothing
      // propagates to its parent.
      grads[static_cast<std::size_t>(i)] =
          grads[static_cast<std::size_t>(i)].zeros_like();
      continue;
    }
    accumulate(node, grads[static_cast<std::size_t>(i)], grads);
  }
  return grads;
}

namespace {

Tape* tape_of(Var a) {
  require(a.valid(), "op on an invalid var");
  return a.tape;
}

}  // namespace

Var matmul(Var a, Var b) { return tape_of(a)->record(OpKind::kMatmul, a, b); }
Var add(Var a, Var b) { return tape_of(a)->record(OpKind::kAdd, a, b); }
Var sub(Var a, Var b) { return tape_of(a)->record(OpKind::kSub, a, b); }
Var mul(Var a, Var b) { return tape_of(a)->record(OpKind::kMul, a, b); }
Var scale(Var a, double c) { return tape_of(a)->record(OpKind::kScale, a, {}, c); }
Var add_scalar(Var a, double c) {
  return tape_of(a)->record(OpKind::kAddScalar, a, {}, c);
}
Var add_rowvec(Var a, Var row) {
  return tape_of(a)->record(OpKind::kAddRowVec, a, row);
}
Var leaky_relu(Var a, double negative_slope) {
  return tape_of(a)->record(OpKind::kLeakyRelu, a, {}, negative_slope);
}
Var vexp(Var a) { return tape_of(a)->record(OpKind::kExp, a, {}); }
Var vlog(Var a) { return tape_of(a)->record(OpKind::kLog, a, {}); }
Var square(Var a) { return tape_of(a)->record(OpKind::kSquare, a, {}); }
Var clamp_min(Var a, double floor) {
  return tape_of(a)->record(OpKind::kClampMin, a, {}, floor);
}
Var row_softmax(Var a) { return tape_of(a)->record(OpKind::kRowSoftmax, a, {}); }
Var row_sum(Var a) { return tape_of(a)->record(OpKind::kRowSum, a, {}); }
Var sum_all(Var a) { return tape_of(a)->record(OpKind::kSumAll, a, {}); }
Var mean_all(Var a) { return tape_of(a)->record(OpKind::kMeanAll, a, {}); }
Var stop_gradient(Var a) {
  return tape_of(a)->record(OpKind::kStopGradient, a, {});
}

}  // namespace sslab
