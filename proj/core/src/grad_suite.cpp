#include "sslab/grad_suite.hpp"

#include <cmath>
#include <functional>

#include "sslab/error.hpp"
#include "sslab/grad_check.hpp"
#include "sslab/losses.hpp"
#include "sslab/mixmatch.hpp"
#include "sslab/mlp.hpp"
#include "sslab/negative_select.hpp"
#include "sslab/rng.hpp"

namespace sslab {

namespace {

constexpr double kStep = 1e-5;
constexpr std::size_t kInstances = 8;

Tensor random_tensor(std::size_t rows, std::size_t cols, double lo, double hi,
                     Rng& rng) {
  Tensor t = Tensor::zeros(rows, cols);
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

/// Entries bounded away from zero, for kinked ops.
Tensor random_away_from(std::size_t rows, std::size_t cols, double margin,
                        Rng& rng) {
  Tensor t = Tensor::zeros(rows, cols);
  for (std::size_t i = 0; i < t.numel(); ++i) {
    double v = rng.uniform(margin, 2.0);
    t[i] = rng.uniform() < 0.5 ? -v : v;
  }
  return t;
}

NegativeLabelMask random_mask(std::size_t batch, std::size_t k, Rng& rng) {
  NegativeLabelMask m = NegativeLabelMask::empty(batch, k);
  for (std::size_t b = 0; b < batch; ++b) {
    std::size_t count = 1 + rng.uniform_index(k - 1);
    std::size_t placed = 0;
    while (placed < count) {
      std::size_t j = rng.uniform_index(k);
      if (!m.at(b, j)) {
        m.set(b, j);
        ++placed;
      }
    }
  }
  return m;
}

/// True when some row's top-two probabilities are within `margin` of each
/// other or of `tau`; such instances flip decisions under perturbation.
bool near_decision(const Tensor& probs, double tau, double margin) {
  for (std::size_t b = 0; b < probs.rows(); ++b) {
    double top = -1.0, second = -1.0;
    for (std::size_t k = 0; k < probs.cols(); ++k) {
      double v = probs.at(b, k);
      if (v > top) {
        second = top;
        top = v;
      } else if (v > second) {
        second = v;
      }
    }
    if (top - second < margin) return true;
    if (std::abs(top - tau) < margin) return true;
  }
  return false;
}

Tensor softmax_of(const Tensor& logits) {
  Tape t;
  return t.value(row_softmax(t.leaf(logits)));
}

struct Suite {
  Rng rng;
  std::vector<GradCheckCase> cases;

  explicit Suite(std::uint64_t seed) : rng(seed) {}

  void run(const std::string& name, std::size_t instances,
           const std::function<double(Rng&)>& one) {
    double worst = 0.0;
    for (std::size_t i = 0; i < instances; ++i)
      worst = std::max(worst, one(rng));
    cases.push_back({name, worst});
  }
};

}  // namespace

std::vector<GradCheckCase> run_gradcheck_suite(std::uint64_t seed) {
  Suite s(seed);
  const std::size_t B = 3, K = 4, D = 5;

  s.run("op.matmul", kInstances, [&](Rng& rng) {
    Tensor c = random_tensor(D, K, -1.0, 1.0, rng);
    Tensor x = random_tensor(B, D, -1.0, 1.0, rng);
    return grad_check(
        [&](Tape& t, Var v) { return sum_all(matmul(v, t.leaf(c))); }, x, kStep);
  });
  s.run("op.matmul.rhs", kInstances, [&](Rng& rng) {
    Tensor c = random_tensor(B, D, -1.0, 1.0, rng);
    Tensor x = random_tensor(D, K, -1.0, 1.0, rng);
    return grad_check(
        [&](Tape& t, Var v) { return sum_all(matmul(t.leaf(c), v)); }, x, kStep);
  });
  s.run("op.add", kInstances, [&](Rng& rng) {
    Tensor c = random_tensor(B, K, -1.0, 1.0, rng);
    Tensor x = random_tensor(B, K, -1.0, 1.0, rng);
    return grad_check(
        [&](Tape& t, Var v) { return sum_all(square(add(v, t.leaf(c)))); }, x,
        kStep);
  });
  s.run("op.sub", kInstances, [&](Rng& rng) {
    Tensor c = random_tensor(B, K, -1.0, 1.0, rng);
    Tensor x = random_tensor(B, K, -1.0, 1.0, rng);
    return grad_check(
        [&](Tape& t, Var v) { return sum_all(square(sub(t.leaf(c), v))); }, x,
        kStep);
  });
  s.run("op.mul", kInstances, [&](Rng& rng) {
    Tensor c = random_tensor(B, K, -2.0, 2.0, rng);
    Tensor x = random_tensor(B, K, -2.0, 2.0, rng);
    return grad_check(
        [&](Tape& t, Var v) { return sum_all(mul(v, t.leaf(c))); }, x, kStep);
  });
  s.run("op.scale", kInstances, [&](Rng& rng) {
    Tensor x = random_tensor(B, K, -2.0, 2.0, rng);
    return grad_check([&](Tape&, Var v) { return mean_all(scale(v, -1.7)); }, x,
                      kStep);
  });
  s.run("op.add_scalar", kInstances, [&](Rng& rng) {
    Tensor x = random_tensor(B, K, -2.0, 2.0, rng);
    return grad_check(
        [&](Tape&, Var v) { return sum_all(square(add_scalar(v, 0.8))); }, x,
        kStep);
  });
  s.run("op.add_rowvec.matrix", kInstances, [&](Rng& rng) {
    Tensor row = random_tensor(1, K, -1.0, 1.0, rng);
    Tensor rowv({K}, row.values());
    Tensor x = random_tensor(B, K, -1.0, 1.0, rng);
    return grad_check(
        [&](Tape& t, Var v) {
          return sum_all(square(add_rowvec(v, t.leaf(rowv))));
        },
        x, kStep);
  });
  s.run("op.add_rowvec.row", kInstances, [&](Rng& rng) {
    Tensor c = random_tensor(B, K, -1.0, 1.0, rng);
    Tensor x({K}, random_tensor(1, K, -1.0, 1.0, rng).values());
    return grad_check(
        [&](Tape& t, Var v) {
          return sum_all(square(add_rowvec(t.leaf(c), v)));
        },
        x, kStep);
  });
  s.run("op.leaky_relu", kInstances, [&](Rng& rng) {
    Tensor x = random_away_from(B, K, 1e-2, rng);
    return grad_check(
        [&](Tape&, Var v) { return sum_all(leaky_relu(v, 0.1)); }, x, kStep);
  });
  s.run("op.exp", kInstances, [&](Rng& rng) {
    Tensor x = random_tensor(B, K, -2.0, 2.0, rng);
    return grad_check([&](Tape&, Var v) { return sum_all(vexp(v)); }, x, kStep);
  });
  s.run("op.log", kInstances, [&](Rng& rng) {
    Tensor x = random_tensor(B, K, 0.5, 3.0, rng);
    return grad_check([&](Tape&, Var v) { return sum_all(vlog(v)); }, x, kStep);
  });
  s.run("op.square", kInstances, [&](Rng& rng) {
    Tensor x = random_tensor(B, K, -2.0, 2.0, rng);
    return grad_check([&](Tape&, Var v) { return sum_all(square(v)); }, x,
                      kStep);
  });
  s.run("op.clamp_min", kInstances, [&](Rng& rng) {
    Tensor x = random_away_from(B, K, 1e-2, rng);  // floor at 0 stays distant
    return grad_check(
        [&](Tape&, Var v) { return sum_all(square(clamp_min(v, 0.0))); }, x,
        kStep);
  });
  s.run("op.row_softmax", kInstances, [&](Rng& rng) {
    Tensor c = random_tensor(B, K, -1.0, 1.0, rng);
    Tensor x = random_tensor(B, K, -2.0, 2.0, rng);
    return grad_check(
        [&](Tape& t, Var v) {
          return sum_all(mul(row_softmax(v), t.leaf(c)));
        },
        x, kStep);
  });
  s.run("op.row_sum", kInstances, [&](Rng& rng) {
    Tensor x = random_tensor(B, K, -2.0, 2.0, rng);
    return grad_check(
        [&](Tape&, Var v) { return sum_all(square(row_sum(v))); }, x, kStep);
  });
  s.run("op.sum_all", kInstances, [&](Rng& rng) {
    Tensor x = random_tensor(B, K, -2.0, 2.0, rng);
    return grad_check([&](Tape&, Var v) { return square(sum_all(v)); }, x,
                      kStep);
  });
  s.run("op.mean_all", kInstances, [&](Rng& rng) {
    Tensor x = random_tensor(B, K, -2.0, 2.0, rng);
    return grad_check([&](Tape&, Var v) { return square(mean_all(v)); }, x,
                      kStep);
  });
  s.run("op.stop_gradient.const_branch", kInstances, [&](Rng& rng) {
    // The cut branch is constant in x, so finite differences agree with the
    // taped gradient; flow blocking itself is asserted in the unit tests.
    Tensor c = random_tensor(B, K, -1.0, 1.0, rng);
    Tensor x = random_tensor(B, K, -1.0, 1.0, rng);
    return grad_check(
        [&](Tape& t, Var v) {
          return sum_all(mul(v, stop_gradient(t.leaf(c))));
        },
        x, kStep);
  });

  s.run("loss.supervised_ce", kInstances, [&](Rng& rng) {
    Tensor x = random_tensor(B, K, -2.0, 2.0, rng);
    std::vector<int> y(B);
    for (std::size_t i = 0; i < B; ++i)
      y[i] = static_cast<int>(rng.uniform_index(K));
    return grad_check(
        [&](Tape& t, Var v) { return supervised_ce(t, row_softmax(v), y); }, x,
        kStep);
  });
  s.run("loss.soft_ce", kInstances, [&](Rng& rng) {
    Tensor x = random_tensor(B, K, -2.0, 2.0, rng);
    Tensor targets = softmax_of(random_tensor(B, K, -1.0, 1.0, rng));
    return grad_check(
        [&](Tape& t, Var v) { return soft_ce(t, row_softmax(v), targets); }, x,
        kStep);
  });
  s.run("loss.ns3l", kInstances, [&](Rng& rng) {
    for (;;) {
      Tensor x = random_tensor(B, K, -2.0, 2.0, rng);
      NegativeLabelMask mask = random_mask(B, K, rng);
      Tensor probs = softmax_of(x);
      bool safe = true;
      for (std::size_t b = 0; b < B && safe; ++b) {
        double sum = 0.0;
        for (std::size_t k = 0; k < K; ++k)
          if (mask.at(b, k)) sum += probs.at(b, k);
        if (1.0 - sum < 1e-3) safe = false;  // keep clear of the clamp floor
      }
      if (!safe) continue;
      return grad_check(
          [&](Tape& t, Var v) { return ns3l_loss(t, row_softmax(v), mask); },
          x, kStep);
    }
  });
  s.run("loss.entropy", kInstances, [&](Rng& rng) {
    Tensor x = random_tensor(B, K, -2.0, 2.0, rng);
    return grad_check(
        [&](Tape& t, Var v) { return entropy_loss(t, row_softmax(v)); }, x,
        kStep);
  });
  s.run("loss.pseudo_label", kInstances, [&](Rng& rng) {
    const double tau = 0.6;
    for (;;) {
      Tensor x = random_tensor(B, K, -3.0, 3.0, rng);
      if (near_decision(softmax_of(x), tau, 1e-3)) continue;
      return grad_check(
          [&](Tape& t, Var v) {
            return pseudo_label_loss(t, row_softmax(v), tau);
          },
          x, kStep);
    }
  });
  s.run("loss.consistency_mse", kInstances, [&](Rng& rng) {
    Tensor x = random_tensor(B, K, -2.0, 2.0, rng);
    return grad_check(
        [&](Tape& t, Var v) {
          return consistency_mse(t, row_softmax(v), row_softmax(scale(v, 0.5)));
        },
        x, kStep);
  });
  s.run("loss.kl.q_branch", kInstances, [&](Rng& rng) {
    Tensor x = random_tensor(B, K, -2.0, 2.0, rng);
    Tensor p = softmax_of(random_tensor(B, K, -2.0, 2.0, rng));
    return grad_check(
        [&](Tape& t, Var v) {
          return kl_divergence_rows(t, t.leaf(p), row_softmax(v));
        },
        x, kStep);
  });
  s.run("loss.kl.p_branch", kInstances, [&](Rng& rng) {
    Tensor x = random_tensor(B, K, -2.0, 2.0, rng);
    Tensor q = softmax_of(random_tensor(B, K, -2.0, 2.0, rng));
    return grad_check(
        [&](Tape& t, Var v) {
          return kl_divergence_rows(t, row_softmax(v), t.leaf(q));
        },
        x, kStep);
  });
  s.run("loss.sharpen", kInstances, [&](Rng& rng) {
    Tensor c = random_tensor(B, K, -1.0, 1.0, rng);
    Tensor x = random_tensor(B, K, -2.0, 2.0, rng);
    return grad_check(
        [&](Tape& t, Var v) {
          return sum_all(mul(sharpen(t, row_softmax(v), 0.5), t.leaf(c)));
        },
        x, kStep);
  });

  // Compositions through the network, one parameter tensor at a time.
  s.run("model.ce_through_mlp.w1", kInstances, [&](Rng& rng) {
    Tensor inputs = random_tensor(B, D, -1.0, 1.0, rng);
    Tensor w2 = random_tensor(3, K, -1.0, 1.0, rng);
    Tensor b1({3}, {0.1, -0.2, 0.3});
    Tensor b2({static_cast<std::size_t>(K)},
              std::vector<double>(K, 0.05));
    std::vector<int> y(B);
    for (std::size_t i = 0; i < B; ++i)
      y[i] = static_cast<int>(rng.uniform_index(K));
    Tensor w1 = random_tensor(D, 3, -1.0, 1.0, rng);
    return grad_check(
        [&](Tape& t, Var v) {
          Var h = leaky_relu(add_rowvec(matmul(t.leaf(inputs), v), t.leaf(b1)),
                             0.1);
          Var logits = add_rowvec(matmul(h, t.leaf(w2)), t.leaf(b2));
          return supervised_ce(t, row_softmax(logits), y);
        },
        w1, kStep);
  });
  s.run("model.vat_frozen.w", kInstances, [&](Rng& rng) {
    Tensor inputs = random_tensor(B, D, -1.0, 1.0, rng);
    Tensor r_adv = random_tensor(B, D, -0.1, 0.1, rng);
    Tensor b({static_cast<std::size_t>(K)}, std::vector<double>(K, 0.0));
    Tensor clean = softmax_of(random_tensor(B, K, -1.0, 1.0, rng));
    Tensor w = random_tensor(D, K, -1.0, 1.0, rng);
    return grad_check(
        [&](Tape& t, Var v) {
          MlpVars vars;
          vars.weights = {v};
          vars.biases = {t.leaf(b)};
          vars.leaky_slope = 0.1;
          return vat_loss_frozen(t, vars, inputs, r_adv, clean);
        },
        w, kStep);
  });
  s.run("model.ns3l_plus_ce.w", kInstances, [&](Rng& rng) {
    Tensor inputs = random_tensor(B, D, -1.0, 1.0, rng);
    Tensor b({static_cast<std::size_t>(K)}, std::vector<double>(K, 0.0));
    std::vector<int> y(B);
    for (std::size_t i = 0; i < B; ++i)
      y[i] = static_cast<int>(rng.uniform_index(K));
    for (;;) {
      Tensor w = random_tensor(D, K, -1.0, 1.0, rng);
      NegativeLabelMask mask = random_mask(B, K, rng);
      Tape probe;
      MlpVars pv;
      pv.weights = {probe.leaf(w)};
      pv.biases = {probe.leaf(b)};
      pv.leaky_slope = 0.1;
      Tensor probs =
          probe.value(predict_probs(probe, pv, probe.leaf(inputs)));
      bool safe = true;
      for (std::size_t row = 0; row < B && safe; ++row) {
        double sum = 0.0;
        for (std::size_t k = 0; k < K; ++k)
          if (mask.at(row, k)) sum += probs.at(row, k);
        if (1.0 - sum < 1e-3) safe = false;
      }
      if (!safe) continue;
      return grad_check(
          [&](Tape& t, Var v) {
            MlpVars vars;
            vars.weights = {v};
            vars.biases = {t.leaf(b)};
            vars.leaky_slope = 0.1;
            Var probs_v = predict_probs(t, vars, t.leaf(inputs));
            Var ce = supervised_ce(t, probs_v, y);
            Var ns = ns3l_loss(t, probs_v, mask);
            return add(ce, scale(ns, 0.7));
          },
          w, kStep);
    }
  });

  return s.cases;
}

}  // namespace sslab
