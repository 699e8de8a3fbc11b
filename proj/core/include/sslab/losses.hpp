#pragma once

#include <string>
#include <vector>

#include "sslab/data.hpp"
#include "sslab/mlp.hpp"
#include "sslab/negative_select.hpp"
#include "sslab/rng.hpp"
#include "sslab/tape.hpp"
#include "sslab/tensor.hpp"

namespace sslab {

Tensor onehot(const std::vector<int>& labels, std::size_t num_classes);

/// -mean_b log(max(mu[b, y_b], 1e-12)) on softmax rows.
Var supervised_ce(Tape& tape, Var probs, const std::vector<int>& labels);

/// Soft-target cross-entropy: -mean_b sum_k t[b,k] log(max(mu[b,k], 1e-12)).
Var soft_ce(Tape& tape, Var probs, const Tensor& targets);

/// Negative-sampling loss: -mean_b log(1 - sum_{k selected} mu[b,k]).
/// The inner difference is floored at 1e-7 before the log; a mask row
/// covering every class is rejected outright.
Var ns3l_loss(Tape& tape, Var probs, const NegativeLabelMask& mask);

/// Value-level reference evaluation of the same quantity.
double ns3l_loss_value(const Tensor& probs, const NegativeLabelMask& mask);

/// Prediction entropy: -mean_b sum_k mu log(max(mu, 1e-12)).
Var entropy_loss(Tape& tape, Var probs);

/// Confident rows (max prob >= tau, argmax ties to the lowest index) are
/// trained toward their own argmax; the mean still runs over the full batch,
/// so an unconfident row contributes zero.
Var pseudo_label_loss(Tape& tape, Var probs, double tau,
                      std::size_t* confident_out = nullptr);

/// mean over all entries of (a - b)^2.
Var consistency_mse(Tape& tape, Var probs_a, Var probs_b);

/// mean_b KL(p_b || q_b) with both operands floored at 1e-12 inside the logs.
Var kl_divergence_rows(Tape& tape, Var p, Var q);

struct VatConfig {
  double xi = 1e-6;
  double epsilon = 1.0;
  std::size_t power_iterations = 1;
  void validate() const;
};

/// Power-iteration estimate of the adversarial direction, one row per sample,
/// each row scaled to exactly epsilon.  Rows whose KL gradient vanishes fall
/// back to their initial random direction.
Tensor vat_perturbation(const MlpParams& params, const Tensor& x,
                        const VatConfig& cfg, Rng& rng);

/// mean_b KL(stop_grad f(x) || f(x + r_adv)); gradient flows only through
/// the perturbed branch.
Var vat_loss(Tape& tape, const MlpVars& vars, const Tensor& x,
             const Tensor& r_adv);

/// Same value and parameter gradient, but with the clean distribution passed
/// in as a constant; this is the form finite differences can validate.
Var vat_loss_frozen(Tape& tape, const MlpVars& vars, const Tensor& x,
                    const Tensor& r_adv, const Tensor& clean_probs);

enum class Method {
  kSupervised,
  kPseudoLabel,
  kNs3l,
  kPi,
  kPiNs3l,
  kVat,
  kVatEntMin,
  kVatPseudoLabel,
  kVatNs3l,
  kMixMatch,
  kMixMatchNs3l,
};

std::string to_string(Method m);
Method method_from_string(const std::string& s);
bool method_uses_mixmatch(Method m);
bool method_uses_ns3l(Method m);
bool method_uses_vat(Method m);

/// Weights and switches for the non-MixMatch training objectives.
struct CombinedConfig {
  Method method = Method::kSupervised;
  double lambda1 = 1.0;        // negative-sampling term
  double lambda2 = 1.0;        // consistency term (VAT or two-pass MSE)
  double entmin_weight = 1.0;
  double pl_weight = 1.0;
  double threshold = 0.04;     // negative-label probability threshold T
  bool scale_threshold_by_classes = false;
  double tau_pl = 0.95;
  VatConfig vat;
  double pi_sigma = 0.1;       // input noise for the two-pass consistency term
  NegStrategy neg_strategy = NegStrategy::kThreshold;
  std::size_t neg_p = 1;       // negatives per sample for sampled strategies

  double effective_threshold(std::size_t num_classes) const;
  void validate() const;
};

/// Per-term readout of one objective evaluation.  Term values are stored
/// unweighted; total applies the lambdas and the warmup factor.
struct TermBreakdown {
  double total = 0.0;
  double supervised = 0.0;
  double ns3l = 0.0;
  double vat = 0.0;
  double pi = 0.0;
  double entmin = 0.0;
  double pseudo_label = 0.0;
  double mixmatch_u = 0.0;
  double warmup = 1.0;
  double neg_error_rate = -1.0;  // -1 when no negatives were selected
  std::size_t pl_confident = 0;
};

struct Objective {
  Var loss;
  TermBreakdown terms;
};

/// Stochastic inputs fixed ahead of graph construction: the adversarial
/// perturbation, the consistency-pass noise, and any sampled negative mask.
/// Holding them constant makes one build differentiable in the parameters.
struct CombinedPrep {
  double warmup = 1.0;
  Tensor vat_r_adv;
  Tensor vat_clean_probs;
  Tensor pi_noise;
  NegativeLabelMask neg_mask;
  bool has_neg_mask = false;
  double neg_error_rate = -1.0;
};

/// pool_mask, when given, holds one precomputed row per unlabeled-pool entry
/// for the neighbour-based strategies; the batch rows are sliced from it.
CombinedPrep prepare_combined(const SslBatch& batch, const MlpParams& params,
                              const CombinedConfig& cfg, double warmup,
                              Rng& rng,
                              const NegativeLabelMask* pool_mask = nullptr);

Objective build_combined(Tape& tape, const MlpVars& vars, const SslBatch& batch,
                         const CombinedConfig& cfg, const CombinedPrep& prep);

/// prepare + build on the caller's tape.
Objective combined_objective(Tape& tape, const MlpVars& vars,
                             const SslBatch& batch, const CombinedConfig& cfg,
                             double warmup, Rng& rng,
                             const NegativeLabelMask* pool_mask = nullptr);

}  // namespace sslab
