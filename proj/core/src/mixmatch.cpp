#include "sslab/mixmatch.hpp"

#include <algorithm>
#include <cmath>

#include "sslab/error.hpp"

namespace sslab {

namespace {

constexpr double kProbFloor = 1e-12;

void fisher_yates(std::vector<std::size_t>& v, Rng& rng) {
  if (v.size() < 2) return;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    std::size_t j = i + rng.uniform_index(v.size() - i);
    std::swap(v[i], v[j]);
  }
}

}  // namespace

void MixMatchConfig::validate() const {
  require(temperature > 0.0, "sharpening temperature must be positive");
  require(augmentations >= 1, "need at least one augmentation");
  require(alpha > 0.0, "mixup alpha must be positive");
  require(lambda3 >= 0.0, "lambda3 must be non-negative");
  require(sigma >= 0.0, "augmentation sigma must be non-negative");
  require(ns3l_lambda1 >= 0.0, "ns3l_lambda1 must be non-negative");
  require(ns3l_threshold > 0.0 && ns3l_threshold < 1.0,
          "ns3l_threshold must lie in (0, 1)");
}

Tensor augment(const Tensor& x, double sigma, Rng& rng) {
  require(sigma >= 0.0, "augmentation sigma must be non-negative");
  Tensor out = x;
  for (std::size_t i = 0; i < out.numel(); ++i)
    out[i] += rng.normal(0.0, sigma);
  return out;
}

Tensor sharpen(const Tensor& p, double temperature) {
  require(temperature > 0.0, "sharpening temperature must be positive");
  Tensor out = p;
  double inv = 1.0 / temperature;
  for (std::size_t b = 0; b < out.rows(); ++b) {
    double denom = 0.0;
    for (std::size_t k = 0; k < out.cols(); ++k) {
      double v = out.rank() == 1 ? out[k] : out.at(b, k);
      require(v >= 0.0, "sharpen expects non-negative entries");
      double powed = std::pow(std::max(v, kProbFloor), inv);
      if (out.rank() == 1) out[k] = powed;
      else out.at(b, k) = powed;
      denom += powed;
    }
    for (std::size_t k = 0; k < out.cols(); ++k) {
      if (out.rank() == 1) out[k] /= denom;
      else out.at(b, k) /= denom;
    }
    if (out.rank() == 1) break;
  }
  return out;
}

Var sharpen(Tape& tape, Var p, double temperature) {
  require(temperature > 0.0, "sharpening temperature must be positive");
  (void)tape;
  return row_softmax(scale(vlog(clamp_min(p, kProbFloor)), 1.0 / temperature));
}

double mixup_lambda_prime(double alpha, Rng& rng) {
  require(alpha > 0.0, "mixup alpha must be positive");
  double g1 = rng.gamma(alpha);
  double g2 = rng.gamma(alpha);
  double lam = g1 / (g1 + g2);
  return std::max(lam, 1.0 - lam);
}

std::pair<Tensor, Tensor> mixup(const Tensor& x1, const Tensor& y1,
                                const Tensor& x2, const Tensor& y2,
                                double lam) {
  require(x1.same_shape(x2), "mixup input shapes differ");
  require(y1.same_shape(y2), "mixup target shapes differ");
  require(lam >= 0.5 && lam <= 1.0, "mixup weight must be folded to [0.5, 1]");
  Tensor x = x1;
  Tensor y = y1;
  for (std::size_t i = 0; i < x.numel(); ++i)
    x[i] = lam * x1[i] + (1.0 - lam) * x2[i];
  for (std::size_t i = 0; i < y.numel(); ++i)
    y[i] = lam * y1[i] + (1.0 - lam) * y2[i];
  return {std::move(x), std::move(y)};
}

LabelGuess guess_labels(Tape& tape, const MlpVars& vars, const Tensor& x_u,
                        const MixMatchConfig& cfg, Rng& rng) {
  cfg.validate();
  require(x_u.rank() == 2, "guess_labels expects [batch, dim] inputs");
  LabelGuess guess;
  Var avg;
  for (std::size_t a = 0; a < cfg.augmentations; ++a) {
    guess.augmented.push_back(augment(x_u, cfg.sigma, rng));
    Var probs = predict_probs(tape, vars, tape.leaf(guess.augmented.back()));
    avg = a == 0 ? probs : add(avg, probs);
  }
  avg = scale(avg, 1.0 / static_cast<double>(cfg.augmentations));
  guess.q_hat = stop_gradient(sharpen(tape, avg, cfg.temperature));
  return guess;
}

MixedBatch mixmatch_batch(Tape& tape, const MlpVars& vars,
                          const Tensor& x_labeled,
                          const std::vector<int>& y_labeled,
                          std::size_t num_classes, const Tensor& x_unlabeled,
                          const MixMatchConfig& cfg, Rng& rng) {
  cfg.validate();
  require(x_labeled.rows() == y_labeled.size(), "labeled sizes differ");
  require(x_labeled.cols() == x_unlabeled.cols(),
          "labeled/unlabeled dims differ");

  std::size_t b1 = x_labeled.rows();
  std::size_t b2 = x_unlabeled.rows();
  std::size_t dim = x_labeled.cols();
  std::size_t n_unsup = b2 * cfg.augmentations;
  std::size_t n = b1 + n_unsup;

  // Pool all augmented rows with their targets: labeled first, then the
  // A guessing copies, each carrying its sample's guessed distribution.
  LabelGuess guess = guess_labels(tape, vars, x_unlabeled, cfg, rng);
  const Tensor& q_hat = tape.value(guess.q_hat);
  Tensor labels_sup = onehot(y_labeled, num_classes);
  Tensor x_aug_sup = augment(x_labeled, cfg.sigma, rng);

  Tensor pool_x = Tensor::zeros(n, dim);
  Tensor pool_y = Tensor::zeros(n, num_classes);
  for (std::size_t i = 0; i < b1; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      pool_x.at(i, j) = x_aug_sup.at(i, j);
    }
  for (std::size_t i = 0; i < b1; ++i)
    for (std::size_t k = 0; k < num_classes; ++k)
      pool_y.at(i, k) = labels_sup.at(i, k);
  for (std::size_t a = 0; a < cfg.augmentations; ++a)
    for (std::size_t i = 0; i < b2; ++i) {
      std::size_t row = b1 + a * b2 + i;
      for (std::size_t j = 0; j < dim; ++j)
        pool_x.at(row, j) = guess.augmented[a].at(i, j);
      for (std::size_t k = 0; k < num_classes; ++k)
        pool_y.at(row, k) = q_hat.at(i, k);
    }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  fisher_yates(order, rng);

  MixedBatch mixed;
  mixed.x_sup = Tensor::zeros(b1, dim);
  mixed.y_sup = Tensor::zeros(b1, num_classes);
  mixed.x_unsup = Tensor::zeros(n_unsup, dim);
  mixed.y_unsup = Tensor::zeros(n_unsup, num_classes);

  auto mix_row = [&](std::size_t own, std::size_t partner, Tensor& xd,
                     Tensor& yd, std::size_t drow) {
    double lam = mixup_lambda_prime(cfg.alpha, rng);
    for (std::size_t j = 0; j < dim; ++j)
      xd.at(drow, j) =
          lam * pool_x.at(own, j) + (1.0 - lam) * pool_x.at(partner, j);
    for (std::size_t k = 0; k < num_classes; ++k)
      yd.at(drow, k) =
          lam * pool_y.at(own, k) + (1.0 - lam) * pool_y.at(partner, k);
  };

  for (std::size_t i = 0; i < b1; ++i)
    mix_row(i, order[i], mixed.x_sup, mixed.y_sup, i);
  for (std::size_t i = 0; i < n_unsup; ++i)
    mix_row(b1 + i, order[b1 + i], mixed.x_unsup, mixed.y_unsup, i);
  return mixed;
}

Objective mixmatch_objective(Tape& tape, const MlpVars& vars,
                             const MixedBatch& mixed,
                             const MixMatchConfig& cfg, double warmup) {
  cfg.validate();
  require(warmup >= 0.0 && warmup <= 1.0, "warmup weight must lie in [0, 1]");

  Objective obj;
  obj.terms.warmup = warmup;

  Var probs_sup = predict_probs(tape, vars, tape.leaf(mixed.x_sup));
  Var loss = soft_ce(tape, probs_sup, mixed.y_sup);
  obj.terms.supervised = tape.value(loss)[0];

  Var probs_unsup = predict_probs(tape, vars, tape.leaf(mixed.x_unsup));
  Var brier = mean_all(square(sub(tape.leaf(mixed.y_unsup), probs_unsup)));
  obj.terms.mixmatch_u = tape.value(brier)[0];
  if (cfg.lambda3 * warmup != 0.0)
    loss = add(loss, scale(brier, cfg.lambda3 * warmup));

  if (cfg.ns3l_lambda1 > 0.0) {
    // Negatives come from the mixed targets, not from model predictions:
    // a class whose target mass is under T is asserted wrong.
    NegativeLabelMask mask_sup = threshold_mask(mixed.y_sup, cfg.ns3l_threshold);
    NegativeLabelMask mask_unsup =
        threshold_mask(mixed.y_unsup, cfg.ns3l_threshold);
    Var ns_sup = ns3l_loss(tape, probs_sup, mask_sup);
    Var ns_unsup = ns3l_loss(tape, probs_unsup, mask_unsup);
    double n1 = static_cast<double>(mixed.x_sup.rows());
    double n2 = static_cast<double>(mixed.x_unsup.rows());
    Var ns_all = add(scale(ns_sup, n1 / (n1 + n2)),
                     scale(ns_unsup, n2 / (n1 + n2)));
    obj.terms.ns3l = tape.value(ns_all)[0];
    if (cfg.ns3l_lambda1 * warmup != 0.0)
      loss = add(loss, scale(ns_all, cfg.ns3l_lambda1 * warmup));
  }

  obj.loss = loss;
  obj.terms.total = tape.value(loss)[0];
  return obj;
}

Objective mixmatch_step(Tape& tape, const MlpVars& vars, const SslBatch& batch,
                        std::size_t num_classes, const MixMatchConfig& cfg,
                        double warmup, Rng& rng) {
  MixedBatch mixed =
      mixmatch_batch(tape, vars, batch.x_labeled, batch.y_labeled, num_classes,
                     batch.x_unlabeled, cfg, rng);
  return mixmatch_objective(tape, vars, mixed, cfg, warmup);
}

}  // namespace sslab
