#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "sslab/losses.hpp"
#include "sslab/mlp.hpp"
#include "sslab/rng.hpp"
#include "sslab/tape.hpp"
#include "sslab/tensor.hpp"

namespace sslab {

struct MixMatchConfig {
  double temperature = 0.5;       // sharpening temperature E
  std::size_t augmentations = 2;  // copies per unlabeled sample A
  double alpha = 0.75;            // Beta(alpha, alpha) mixing
  double lambda3 = 75.0;          // consistency weight
  double sigma = 0.1;             // Gaussian augmentation noise
  double ns3l_lambda1 = 0.0;      // 0 disables the negative-label term
  double ns3l_threshold = 0.05;

  void validate() const;
};

/// Gaussian-noise augmentation; the only input transform these toy feature
/// spaces support.
Tensor augment(const Tensor& x, double sigma, Rng& rng);

/// Temperature sharpening p_k^(1/E) / sum_j p_j^(1/E), computed per row.
Tensor sharpen(const Tensor& p, double temperature);

/// On-tape form: row_softmax(log(max(p, 1e-12)) / E).  Equal to the power
/// form wherever no entry is clamped.
Var sharpen(Tape& tape, Var p, double temperature);

/// Beta(alpha, alpha) draw folded to [0.5, 1); consumes two Gamma draws.
double mixup_lambda_prime(double alpha, Rng& rng);

/// Convex combination weighted toward the first argument; lam must already
/// be folded to [0.5, 1].
std::pair<Tensor, Tensor> mixup(const Tensor& x1, const Tensor& y1,
                                const Tensor& x2, const Tensor& y2,
                                double lam);

/// Average of predictions over A augmented copies, sharpened, then cut off
/// from the gradient.  The copies are returned so the caller can reuse the
/// exact same inputs downstream.
struct LabelGuess {
  Var q_hat;                      // [B2, K], stop-gradient
  std::vector<Tensor> augmented;  // A tensors of shape [B2, dim]
};

LabelGuess guess_labels(Tape& tape, const MlpVars& vars, const Tensor& x_u,
                        const MixMatchConfig& cfg, Rng& rng);

/// Augment, guess, shuffle and mix.  Supervised rows keep batch size B1;
/// unsupervised rows hold all A copies (B2 * A).  Targets are constants.
struct MixedBatch {
  Tensor x_sup, y_sup;      // [B1, dim], [B1, K]
  Tensor x_unsup, y_unsup;  // [B2*A, dim], [B2*A, K]
};

MixedBatch mixmatch_batch(Tape& tape, const MlpVars& vars,
                          const Tensor& x_labeled,
                          const std::vector<int>& y_labeled,
                          std::size_t num_classes, const Tensor& x_unlabeled,
                          const MixMatchConfig& cfg, Rng& rng);

/// Soft cross-entropy on the supervised mix plus lambda3-weighted Brier
/// consistency on the unsupervised mix; optionally a negative-sampling term
/// over both mixes with negatives taken where the mixed target mass falls
/// below the threshold.  Unsupervised terms are scaled by warmup.
Objective mixmatch_objective(Tape& tape, const MlpVars& vars,
                             const MixedBatch& mixed,
                             const MixMatchConfig& cfg, double warmup);

/// Full step: guess, mix, build.
Objective mixmatch_step(Tape& tape, const MlpVars& vars,
                        const SslBatch& batch, std::size_t num_classes,
                        const MixMatchConfig& cfg, double warmup, Rng& rng);

}  // namespace sslab
