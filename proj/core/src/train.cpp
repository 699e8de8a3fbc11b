#include "sslab/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "sslab/error.hpp"
#include "sslab/mixmatch.hpp"

namespace sslab {

AdamState make_adam(const MlpParams& params, AdamConfig cfg) {
  require(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0, "adam beta1 must lie in [0, 1)");
  require(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0, "adam beta2 must lie in [0, 1)");
  require(cfg.eps > 0.0, "adam eps must be positive");
  AdamState state;
  state.cfg = cfg;
  for (const Tensor* t : params.tensors()) {
    state.m.push_back(t->zeros_like());
    state.v.push_back(t->zeros_like());
  }
  return state;
}

void adam_step(MlpParams& params, const std::vector<Tensor>& grads,
               AdamState& state, double lr) {
  std::vector<Tensor*> tensors = params.tensors();
  require(grads.size() == tensors.size(),
          "adam_step gradient count does not match parameter count");
  require(lr >= 0.0, "adam lr must be non-negative");
  ++state.step;
  double bc1 = 1.0 - std::pow(state.cfg.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(state.cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    require(grads[i].same_shape(*tensors[i]),
            "adam_step gradient shape does not match its parameter");
    require(grads[i].all_finite(),
            "non-finite gradient in adam step " + std::to_string(state.step));
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    Tensor& p = *tensors[i];
    for (std::size_t j = 0; j < p.numel(); ++j) {
      double g = grads[i][j];
      m[j] = state.cfg.beta1 * m[j] + (1.0 - state.cfg.beta1) * g;
      v[j] = state.cfg.beta2 * v[j] + (1.0 - state.cfg.beta2) * g * g;
      double mhat = m[j] / bc1;
      double vhat = v[j] / bc2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + state.cfg.eps);
    }
  }
}

EmaState make_ema(const MlpParams& params, double decay) {
  require(decay >= 0.0 && decay < 1.0, "ema decay must lie in [0, 1)");
  return {params, decay};
}

void ema_update(EmaState& ema, const MlpParams& params) {
  std::vector<Tensor*> shadow = ema.shadow.tensors();
  std::vector<const Tensor*> live = params.tensors();
  require(shadow.size() == live.size(), "ema/parameter layouts differ");
  for (std::size_t i = 0; i < shadow.size(); ++i)
    for (std::size_t j = 0; j < shadow[i]->numel(); ++j)
      (*shadow[i])[j] =
          ema.decay * (*shadow[i])[j] + (1.0 - ema.decay) * (*live[i])[j];
}

double warmup_weight(long step, long warmup_steps) {
  require(step >= 0, "warmup step must be non-negative");
  if (warmup_steps <= 0) return 1.0;
  double u = std::min(static_cast<double>(step) /
                          static_cast<double>(warmup_steps),
                      1.0);
  double d = 1.0 - u;
  return std::exp(-5.0 * d * d);
}

double lr_at(double base_lr, long step, long decay_step, long total_steps) {
  if (decay_step <= 0 || step < decay_step) return base_lr;
  double span = static_cast<double>(total_steps - decay_step);
  double into = static_cast<double>(step - decay_step);
  return base_lr * std::max(0.0, 1.0 - into / span);
}

double evaluate_error(const MlpParams& params, const Tensor& x,
                      const std::vector<int>& y) {
  require(x.rows() == y.size(), "evaluation feature/label counts differ");
  std::vector<int> pred = predict_classes(params, x);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (pred[i] != y[i]) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(y.size());
}

void write_metrics_csv(const std::vector<MetricRow>& rows,
                       const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot open for writing: " + path);
  out << "step,term,value\n";
  char buf[64];
  for (const MetricRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.value);
    out << r.step << ',' << r.term << ',' << buf << '\n';
  }
  require(static_cast<bool>(out), "metrics write failed: " + path);
}

ExperimentData build_dataset(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentData out;
  if (cfg.dataset == "toy1d") {
    Rng rng(cfg.split_seed);
    Toy1dData toy =
        gen_toy_1d(cfg.toy_n_labeled, cfg.toy_n_unlabeled, cfg.toy_bias, rng);
    out.data = std::move(toy.data);
    out.split = std::move(toy.split);
    out.toy_boundary = toy.true_boundary;
    return out;
  }
  if (cfg.dataset == "blobs") {
    Rng rng(cfg.split_seed);
    out.data = gen_blobs(cfg.blobs_classes, cfg.blobs_per_class, cfg.blobs_dim,
                         cfg.blobs_spread, rng);
  } else {
    out.data = load_csv_dataset(cfg.csv_path);
  }
  out.split = split_labeled_unlabeled(out.data, cfg.n_labeled, cfg.split_seed);
  return out;
}

namespace {

/// Precomputed pool-level negative mask for the neighbour-based strategies;
/// fixed geometry, so computed once per run.
NegativeLabelMask build_pool_mask(const ExperimentConfig& cfg,
                                  const ExperimentData& exp, Rng& rng) {
  Tensor pool_x = gather_rows(exp.data.features, exp.split.unlabeled);
  Tensor labeled_x = gather_rows(exp.data.features, exp.split.labeled);
  std::vector<int> labeled_y =
      gather_labels(exp.data.labels, exp.split.labeled);
  std::size_t k = exp.data.num_classes;
  switch (cfg.neg_strategy) {
    case NegStrategy::kNnExclude1:
      return nn_exclude_mask(pool_x, labeled_x, labeled_y, k, cfg.neg_p,
                             NnVariant::kExcludeOne, rng);
    case NegStrategy::kNnExclude4:
      return nn_exclude_mask(pool_x, labeled_x, labeled_y, k, cfg.neg_p,
                             NnVariant::kExcludeFour, rng);
    case NegStrategy::kFurthest:
      return furthest_class_mask(pool_x, labeled_x, labeled_y, k);
    default:
      fail("pool mask requested for a non-neighbour strategy");
  }
}

}  // namespace

TrainResult train_run(const ExperimentConfig& cfg) {
  ExperimentData data = build_dataset(cfg);
  return train_run(cfg, data);
}

TrainResult train_run(const ExperimentConfig& cfg, const ExperimentData& exp) {
  cfg.validate();
  exp.data.validate();
  exp.split.validate(exp.data);

  Rng master(cfg.seed);
  Rng init_rng = master.split();
  Rng batch_rng = master.split();
  Rng loss_rng = master.split();

  MlpSpec spec = cfg.mlp_spec(exp.data.dim(), exp.data.num_classes);
  MlpParams params = init_params(spec, init_rng);
  AdamState adam = make_adam(params);
  EmaState ema = make_ema(params, cfg.ema_decay);

  bool is_mixmatch = method_uses_mixmatch(cfg.method);
  CombinedConfig combined_cfg;
  MixMatchConfig mixmatch_cfg;
  if (is_mixmatch) mixmatch_cfg = cfg.mixmatch();
  else combined_cfg = cfg.combined();

  bool needs_pool_mask = !is_mixmatch && method_uses_ns3l(cfg.method) &&
                         (cfg.neg_strategy == NegStrategy::kNnExclude1 ||
                          cfg.neg_strategy == NegStrategy::kNnExclude4 ||
                          cfg.neg_strategy == NegStrategy::kFurthest);
  NegativeLabelMask pool_mask;
  if (needs_pool_mask) pool_mask = build_pool_mask(cfg, exp, loss_rng);

  BatchSampler sampler(exp.data, exp.split);
  Tensor val_x = gather_rows(exp.data.features, exp.split.validation);
  std::vector<int> val_y = gather_labels(exp.data.labels, exp.split.validation);
  Tensor test_x = gather_rows(exp.data.features, exp.split.test);
  std::vector<int> test_y = gather_labels(exp.data.labels, exp.split.test);

  TrainResult result;
  auto log = [&](long step, const std::string& term, double value) {
    result.metrics.push_back({step, term, value});
  };
  const MlpParams& eval_params_ref = cfg.eval_with_ema ? ema.shadow : params;

  for (long step = 0; step < cfg.total_steps; ++step) {
    SslBatch batch =
        sampler.next(cfg.batch_labeled, cfg.batch_unlabeled, batch_rng);
    double w = warmup_weight(step, cfg.warmup_steps);

    TermBreakdown terms;
    try {
      Tape tape;
      MlpVars vars = make_vars(tape, params);
      Objective obj =
          is_mixmatch
              ? mixmatch_step(tape, vars, batch, exp.data.num_classes,
                              mixmatch_cfg, w, loss_rng)
              : combined_objective(tape, vars, batch, combined_cfg, w, loss_rng,
                                   needs_pool_mask ? &pool_mask : nullptr);
      terms = obj.terms;
      std::vector<Tensor> grads = param_grads(tape, vars, obj.loss);
      adam_step(params, grads, adam,
                lr_at(cfg.lr, step, cfg.lr_decay_step, cfg.total_steps));
    } catch (const Error& e) {
      throw DivergenceError(step, e.what());
    }
    ema_update(ema, params);
    result.steps_run = step + 1;

    if ((step + 1) % cfg.eval_interval == 0 || step + 1 == cfg.total_steps) {
      log(step + 1, "total", terms.total);
      log(step + 1, "supervised", terms.supervised);
      if (method_uses_ns3l(cfg.method)) log(step + 1, "ns3l", terms.ns3l);
      if (method_uses_vat(cfg.method)) log(step + 1, "vat", terms.vat);
      if (cfg.method == Method::kPi || cfg.method == Method::kPiNs3l)
        log(step + 1, "pi", terms.pi);
      if (cfg.method == Method::kVatEntMin)
        log(step + 1, "entmin", terms.entmin);
      if (cfg.method == Method::kPseudoLabel ||
          cfg.method == Method::kVatPseudoLabel) {
        log(step + 1, "pseudo_label", terms.pseudo_label);
        log(step + 1, "pl_confident", static_cast<double>(terms.pl_confident));
      }
      if (is_mixmatch) log(step + 1, "mixmatch_u", terms.mixmatch_u);
      if (terms.neg_error_rate >= 0.0)
        log(step + 1, "neg_error_rate", terms.neg_error_rate);
      log(step + 1, "warmup", terms.warmup);
      log(step + 1, "val_error", evaluate_error(eval_params_ref, val_x, val_y));
    }
  }

  result.val_error = evaluate_error(eval_params_ref, val_x, val_y);
  result.test_error = evaluate_error(eval_params_ref, test_x, test_y);
  result.metrics.push_back({cfg.total_steps, "test_error", result.test_error});
  result.params = std::move(params);
  result.ema_params = std::move(ema.shadow);
  return result;
}

}  // namespace sslab
