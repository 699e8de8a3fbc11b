#include "sslab/losses.hpp"

#include <algorithm>
#include <cmath>

#include "sslab/error.hpp"

namespace sslab {

namespace {

constexpr double kProbFloor = 1e-12;
constexpr double kNs3lFloor = 1e-7;

void check_probs_labels(const Tape& tape, Var probs,
                        const std::vector<int>& labels) {
  const Tensor& p = tape.value(probs);
  require(p.rank() == 2, "loss expects [batch, classes] probabilities");
  require(p.rows() == labels.size(), "probability/label counts differ");
  for (int y : labels)
    require(y >= 0 && static_cast<std::size_t>(y) < p.cols(),
            "label out of range");
}

Tensor mask_tensor(const NegativeLabelMask& mask) {
  Tensor t = Tensor::zeros(mask.batch, mask.num_classes);
  for (std::size_t b = 0; b < mask.batch; ++b)
    for (std::size_t k = 0; k < mask.num_classes; ++k)
      if (mask.at(b, k)) t.at(b, k) = 1.0;
  return t;
}

}  // namespace

Tensor onehot(const std::vector<int>& labels, std::size_t num_classes) {
  require(!labels.empty(), "onehot of empty label list");
  Tensor t = Tensor::zeros(labels.size(), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 &&
                static_cast<std::size_t>(labels[i]) < num_classes,
            "label out of range");
    t.at(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return t;
}

Var supervised_ce(Tape& tape, Var probs, const std::vector<int>& labels) {
  check_probs_labels(tape, probs, labels);
  return soft_ce(tape, probs, onehot(labels, tape.value(probs).cols()));
}

Var soft_ce(Tape& tape, Var probs, const Tensor& targets) {
  require(tape.value(probs).same_shape(targets),
          "soft_ce target shape differs from probabilities");
  Var logp = vlog(clamp_min(probs, kProbFloor));
  Var picked = row_sum(mul(tape.leaf(targets), logp));
  return scale(mean_all(picked), -1.0);
}

Var ns3l_loss(Tape& tape, Var probs, const NegativeLabelMask& mask) {
  const Tensor& p = tape.value(probs);
  require(p.rank() == 2, "loss expects [batch, classes] probabilities");
  require(mask.batch == p.rows() && mask.num_classes == p.cols(),
          "negative mask shape does not match probabilities");
  mask.validate();
  Var selected = row_sum(mul(probs, tape.leaf(mask_tensor(mask))));  // [B,1]
  Var remainder = add_scalar(scale(selected, -1.0), 1.0);            // 1 - S_b
  return scale(mean_all(vlog(clamp_min(remainder, kNs3lFloor))), -1.0);
}

double ns3l_loss_value(const Tensor& probs, const NegativeLabelMask& mask) {
  require(probs.rank() == 2 && mask.batch == probs.rows() &&
              mask.num_classes == probs.cols(),
          "negative mask shape does not match probabilities");
  mask.validate();
  double total = 0.0;
  for (std::size_t b = 0; b < probs.rows(); ++b) {
    double s = 0.0;
    for (std::size_t k = 0; k < probs.cols(); ++k)
      if (mask.at(b, k)) s += probs.at(b, k);
    total -= std::log(std::max(1.0 - s, kNs3lFloor));
  }
  return total / static_cast<double>(probs.rows());
}

Var entropy_loss(Tape& tape, Var probs) {
  require(tape.value(probs).rank() == 2,
          "loss expects [batch, classes] probabilities");
  Var plogp = mul(probs, vlog(clamp_min(probs, kProbFloor)));
  return scale(mean_all(row_sum(plogp)), -1.0);
}

Var pseudo_label_loss(Tape& tape, Var probs, double tau,
                      std::size_t* confident_out) {
  const Tensor& p = tape.value(probs);
  require(p.rank() == 2, "loss expects [batch, classes] probabilities");
  require(tau > 0.0 && tau <= 1.0, "pseudo-label tau must lie in (0, 1]");

  Tensor targets = Tensor::zeros(p.rows(), p.cols());
  Tensor weights = Tensor::zeros(p.rows(), 1);
  std::size_t confident = 0;
  for (std::size_t b = 0; b < p.rows(); ++b) {
    std::size_t argmax = 0;
    for (std::size_t k = 1; k < p.cols(); ++k)
      if (p.at(b, k) > p.at(b, argmax)) argmax = k;
    if (p.at(b, argmax) >= tau) {
      targets.at(b, argmax) = 1.0;
      weights.at(b, 0) = 1.0;
      ++confident;
    }
  }
  if (confident_out) *confident_out = confident;

  Var picked = row_sum(mul(probs, tape.leaf(std::move(targets))));
  Var logp = vlog(clamp_min(picked, kProbFloor));
  Var gated = mul(logp, tape.leaf(std::move(weights)));
  return scale(mean_all(gated), -1.0);
}

Var consistency_mse(Tape& tape, Var probs_a, Var probs_b) {
  require(tape.value(probs_a).same_shape(tape.value(probs_b)),
          "consistency_mse operand shapes differ");
  return mean_all(square(sub(probs_a, probs_b)));
}

Var kl_divergence_rows(Tape& tape, Var p, Var q) {
  require(tape.value(p).same_shape(tape.value(q)),
          "kl_divergence operand shapes differ");
  Var diff = sub(vlog(clamp_min(p, kProbFloor)), vlog(clamp_min(q, kProbFloor)));
  return mean_all(row_sum(mul(p, diff)));
}

void VatConfig::validate() const {
  require(xi > 0.0, "vat xi must be positive");
  require(epsilon > 0.0, "vat epsilon must be positive");
  require(power_iterations >= 1, "vat needs at least one power iteration");
}

namespace {

/// Row-normalizes g into unit directions; rows below tiny keep `fallback`.
void update_directions(const Tensor& g, Tensor& directions) {
  for (std::size_t b = 0; b < g.rows(); ++b) {
    double norm = 0.0;
    for (std::size_t j = 0; j < g.cols(); ++j) norm += g.at(b, j) * g.at(b, j);
    norm = std::sqrt(norm);
    if (norm < 1e-300) continue;
    for (std::size_t j = 0; j < g.cols(); ++j)
      directions.at(b, j) = g.at(b, j) / norm;
  }
}

Tensor add_tensors(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += b[i];
  return out;
}

}  // namespace

Tensor vat_perturbation(const MlpParams& params, const Tensor& x,
                        const VatConfig& cfg, Rng& rng) {
  cfg.validate();
  require(x.rank() == 2, "vat_perturbation expects [batch, dim] inputs");
  std::size_t dim = x.cols();
  double init_sigma = cfg.xi / std::sqrt(static_cast<double>(dim));

  Tensor r0 = Tensor::zeros(x.rows(), dim);
  for (std::size_t i = 0; i < r0.numel(); ++i)
    r0[i] = rng.normal(0.0, init_sigma);

  Tensor directions = Tensor::zeros(x.rows(), dim);
  for (std::size_t b = 0; b < x.rows(); ++b) {
    double norm = 0.0;
    for (std::size_t j = 0; j < dim; ++j) norm += r0.at(b, j) * r0.at(b, j);
    norm = std::sqrt(norm);
    for (std::size_t j = 0; j < dim; ++j)
      directions.at(b, j) = norm > 0.0 ? r0.at(b, j) / norm : (j == 0 ? 1.0 : 0.0);
  }

  Tensor clean = predict_probs(params, x);
  for (std::size_t it = 0; it < cfg.power_iterations; ++it) {
    Tensor r = directions;
    for (std::size_t i = 0; i < r.numel(); ++i) r[i] *= cfg.xi;

    Tape tape;
    MlpVars vars = make_vars(tape, params);
    Var perturbed = tape.leaf(add_tensors(x, r));
    Var q = predict_probs(tape, vars, perturbed);
    Var p = tape.leaf(clean);
    Var kl = kl_divergence_rows(tape, p, q);
    Tensor g = tape.backward(kl)[static_cast<std::size_t>(perturbed.id)];
    update_directions(g, directions);
  }

  for (std::size_t i = 0; i < directions.numel(); ++i)
    directions[i] *= cfg.epsilon;
  return directions;
}

Var vat_loss(Tape& tape, const MlpVars& vars, const Tensor& x,
             const Tensor& r_adv) {
  require(x.same_shape(r_adv), "vat perturbation shape differs from inputs");
  Var p = stop_gradient(predict_probs(tape, vars, tape.leaf(x)));
  Var q = predict_probs(tape, vars, tape.leaf(add_tensors(x, r_adv)));
  return kl_divergence_rows(tape, p, q);
}

Var vat_loss_frozen(Tape& tape, const MlpVars& vars, const Tensor& x,
                    const Tensor& r_adv, const Tensor& clean_probs) {
  require(x.same_shape(r_adv), "vat perturbation shape differs from inputs");
  Var p = tape.leaf(clean_probs);
  Var q = predict_probs(tape, vars, tape.leaf(add_tensors(x, r_adv)));
  return kl_divergence_rows(tape, p, q);
}

std::string to_string(Method m) {
  switch (m) {
    case Method::kSupervised: return "supervised";
    case Method::kPseudoLabel: return "pl";
    case Method::kNs3l: return "ns3l";
    case Method::kPi: return "pi";
    case Method::kPiNs3l: return "pi+ns3l";
    case Method::kVat: return "vat";
    case Method::kVatEntMin: return "vat+entmin";
    case Method::kVatPseudoLabel: return "vat+pl";
    case Method::kVatNs3l: return "vat+ns3l";
    case Method::kMixMatch: return "mixmatch";
    case Method::kMixMatchNs3l: return "mixmatch+ns3l";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "supervised") return Method::kSupervised;
  if (s == "pl") return Method::kPseudoLabel;
  if (s == "ns3l") return Method::kNs3l;
  if (s == "pi") return Method::kPi;
  if (s == "pi+ns3l") return Method::kPiNs3l;
  if (s == "vat") return Method::kVat;
  if (s == "vat+entmin") return Method::kVatEntMin;
  if (s == "vat+pl") return Method::kVatPseudoLabel;
  if (s == "vat+ns3l") return Method::kVatNs3l;
  if (s == "mixmatch") return Method::kMixMatch;
  if (s == "mixmatch+ns3l") return Method::kMixMatchNs3l;
  fail("unknown method: " + s);
}

bool method_uses_mixmatch(Method m) {
  return m == Method::kMixMatch || m == Method::kMixMatchNs3l;
}

bool method_uses_ns3l(Method m) {
  return m == Method::kNs3l || m == Method::kPiNs3l ||
         m == Method::kVatNs3l || m == Method::kMixMatchNs3l;
}

bool method_uses_vat(Method m) {
  return m == Method::kVat || m == Method::kVatEntMin ||
         m == Method::kVatPseudoLabel || m == Method::kVatNs3l;
}

double CombinedConfig::effective_threshold(std::size_t num_classes) const {
  if (!scale_threshold_by_classes) return threshold;
  // Thresholds in the source experiments were tuned on 10-class problems;
  // this rescales the per-class budget T*K to other K.
  return threshold * 10.0 / static_cast<double>(num_classes);
}

void CombinedConfig::validate() const {
  require(!method_uses_mixmatch(method),
          "combined_objective does not handle the mixup-based methods");
  require(threshold > 0.0 && threshold < 1.0, "threshold must lie in (0, 1)");
  require(tau_pl > 0.0 && tau_pl <= 1.0, "tau_pl must lie in (0, 1]");
  require(pi_sigma >= 0.0, "pi_sigma must be non-negative");
  require(neg_p >= 1, "neg_p must be at least 1");
  if (method_uses_vat(method)) vat.validate();
}

namespace {

NegativeLabelMask slice_pool_mask(const NegativeLabelMask& pool,
                                  const std::vector<std::size_t>& rows) {
  NegativeLabelMask out = NegativeLabelMask::empty(rows.size(), pool.num_classes);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] < pool.batch, "pool mask row out of range");
    for (std::size_t k = 0; k < pool.num_classes; ++k)
      if (pool.at(rows[i], k)) out.set(i, k);
  }
  return out;
}

}  // namespace

CombinedPrep prepare_combined(const SslBatch& batch, const MlpParams& params,
                              const CombinedConfig& cfg, double warmup,
                              Rng& rng, const NegativeLabelMask* pool_mask) {
  cfg.validate();
  require(warmup >= 0.0 && warmup <= 1.0, "warmup weight must lie in [0, 1]");
  CombinedPrep prep;
  prep.warmup = warmup;

  if (method_uses_vat(cfg.method)) {
    prep.vat_r_adv = vat_perturbation(params, batch.x_unlabeled, cfg.vat, rng);
    prep.vat_clean_probs = predict_probs(params, batch.x_unlabeled);
  }

  if (cfg.method == Method::kPi || cfg.method == Method::kPiNs3l) {
    prep.pi_noise = batch.x_unlabeled.zeros_like();
    for (std::size_t i = 0; i < prep.pi_noise.numel(); ++i)
      prep.pi_noise[i] = rng.normal(0.0, cfg.pi_sigma);
  }

  if (method_uses_ns3l(cfg.method)) {
    std::size_t k = params.num_classes();
    switch (cfg.neg_strategy) {
      case NegStrategy::kThreshold:
        break;  // built from live probabilities at graph time
      case NegStrategy::kUniform:
        prep.neg_mask = uniform_mask(batch.b2(), k, cfg.neg_p, rng);
        prep.has_neg_mask = true;
        break;
      case NegStrategy::kOracle:
        prep.neg_mask =
            oracle_mask(batch.diagnostic_true_labels(), k, cfg.neg_p, rng);
        prep.has_neg_mask = true;
        break;
      case NegStrategy::kNnExclude1:
      case NegStrategy::kNnExclude4:
      case NegStrategy::kFurthest:
        require(pool_mask != nullptr,
                "neighbour-based strategies need a precomputed pool mask");
        prep.neg_mask = slice_pool_mask(*pool_mask, batch.unlabeled_rows);
        prep.has_neg_mask = true;
        break;
    }
    if (prep.has_neg_mask)
      prep.neg_error_rate = negative_label_error_rate(
          prep.neg_mask, batch.diagnostic_true_labels());
  }
  return prep;
}

Objective build_combined(Tape& tape, const MlpVars& vars, const SslBatch& batch,
                         const CombinedConfig& cfg, const CombinedPrep& prep) {
  cfg.validate();
  Objective obj;
  obj.terms.warmup = prep.warmup;
  obj.terms.neg_error_rate = prep.neg_error_rate;

  Var probs_l = predict_probs(tape, vars, tape.leaf(batch.x_labeled));
  Var loss = supervised_ce(tape, probs_l, batch.y_labeled);
  obj.terms.supervised = tape.value(loss)[0];

  bool need_unlabeled_probs = method_uses_ns3l(cfg.method) ||
                              cfg.method == Method::kPseudoLabel ||
                              cfg.method == Method::kVatEntMin ||
                              cfg.method == Method::kVatPseudoLabel ||
                              cfg.method == Method::kPi ||
                              cfg.method == Method::kPiNs3l;
  Var probs_u;
  if (need_unlabeled_probs)
    probs_u = predict_probs(tape, vars, tape.leaf(batch.x_unlabeled));

  auto add_term = [&](Var term, double weight, double* slot) {
    *slot = tape.value(term)[0];
    if (weight * prep.warmup != 0.0)
      loss = add(loss, scale(term, weight * prep.warmup));
  };

  if (method_uses_vat(cfg.method)) {
    require(prep.vat_r_adv.same_shape(batch.x_unlabeled),
            "prepared perturbation does not match this batch");
    Var term = vat_loss(tape, vars, batch.x_unlabeled, prep.vat_r_adv);
    add_term(term, cfg.lambda2, &obj.terms.vat);
  }

  if (cfg.method == Method::kPi || cfg.method == Method::kPiNs3l) {
    require(prep.pi_noise.same_shape(batch.x_unlabeled),
            "prepared noise does not match this batch");
    Var noisy = tape.leaf(add_tensors(batch.x_unlabeled, prep.pi_noise));
    Var probs_noisy = predict_probs(tape, vars, noisy);
    Var term = consistency_mse(tape, probs_u, probs_noisy);
    add_term(term, cfg.lambda2, &obj.terms.pi);
  }

  if (method_uses_ns3l(cfg.method)) {
    NegativeLabelMask mask;
    if (prep.has_neg_mask) {
      mask = prep.neg_mask;
    } else {
      double t = cfg.effective_threshold(tape.value(probs_u).cols());
      mask = threshold_mask(tape.value(probs_u), t);
      obj.terms.neg_error_rate =
          negative_label_error_rate(mask, batch.diagnostic_true_labels());
    }
    Var term = ns3l_loss(tape, probs_u, mask);
    add_term(term, cfg.lambda1, &obj.terms.ns3l);
  }

  if (cfg.method == Method::kVatEntMin) {
    Var term = entropy_loss(tape, probs_u);
    add_term(term, cfg.entmin_weight, &obj.terms.entmin);
  }

  if (cfg.method == Method::kPseudoLabel ||
      cfg.method == Method::kVatPseudoLabel) {
    std::size_t confident = 0;
    Var term = pseudo_label_loss(tape, probs_u, cfg.tau_pl, &confident);
    obj.terms.pl_confident = confident;
    add_term(term, cfg.pl_weight, &obj.terms.pseudo_label);
  }

  obj.loss = loss;
  obj.terms.total = tape.value(loss)[0];
  return obj;
}

Objective combined_objective(Tape& tape, const MlpVars& vars,
                             const SslBatch& batch, const CombinedConfig& cfg,
                             double warmup, Rng& rng,
                             const NegativeLabelMask* pool_mask) {
  MlpParams params;
  params.leaky_slope = vars.leaky_slope;
  for (std::size_t l = 0; l < vars.weights.size(); ++l) {
    params.weights.push_back(tape.value(vars.weights[l]));
    params.biases.push_back(tape.value(vars.biases[l]));
  }
  CombinedPrep prep =
      prepare_combined(batch, params, cfg, warmup, rng, pool_mask);
  return build_combined(tape, vars, batch, cfg, prep);
}

}  // namespace sslab
