#include "sslab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "sslab/error.hpp"

namespace sslab {

namespace {

double mean_of(const std::vector<double>& v) {
  require(!v.empty(), "mean of empty vector");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double prob_gap(const MlpParams& params, double x) {
  Tensor probs = predict_probs(params, Tensor({1, 1}, {x}));
  return probs.at(0, 1) - probs.at(0, 0);
}

}  // namespace

double decision_boundary_1d(const MlpParams& params, double lo, double hi) {
  require(params.input_dim() == 1 && params.num_classes() == 2,
          "boundary extraction expects a 1-input 2-class model");
  require(lo < hi, "boundary interval is empty");
  double glo = prob_gap(params, lo);
  double ghi = prob_gap(params, hi);
  if ((glo > 0.0) == (ghi > 0.0)) {
    // No crossing inside the interval; report the closest approach.
    double best_x = lo, best = std::abs(glo);
    for (int i = 0; i <= 100; ++i) {
      double x = lo + (hi - lo) * static_cast<double>(i) / 100.0;
      double g = std::abs(prob_gap(params, x));
      if (g < best) {
        best = g;
        best_x = x;
      }
    }
    return best_x;
  }
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double gmid = prob_gap(params, mid);
    if (gmid == 0.0) return mid;
    if ((gmid > 0.0) == (glo > 0.0)) {
      lo = mid;
      glo = gmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

ExperimentConfig toy_supervised_config() {
  ExperimentConfig cfg = ExperimentConfig::defaults_for(Method::kSupervised);
  cfg.dataset = "toy1d";
  cfg.toy_bias = 0.6;
  cfg.toy_n_labeled = 20;
  cfg.toy_n_unlabeled = 400;
  cfg.hidden.clear();  // linear softmax: the boundary is a single crossing
  cfg.lr = 0.05;
  cfg.total_steps = 600;
  cfg.warmup_steps = 0;
  cfg.eval_interval = 200;
  cfg.batch_labeled = 20;
  cfg.batch_unlabeled = 20;
  return cfg;
}

ExperimentConfig toy_ns3l_config() {
  ExperimentConfig cfg = toy_supervised_config();
  cfg.method = Method::kNs3l;
  // Negative labels assigned uniformly at random: half are wrong, yet the
  // aggregate force still centers the boundary inside the unlabeled mass.
  cfg.neg_strategy = NegStrategy::kUniform;
  cfg.neg_p = 1;
  cfg.lambda1 = 1.0;
  return cfg;
}

namespace {

/// Parameter gradient probe at a single unlabeled point: what one
/// pseudo-label step and one negative-label step would each do.
void fill_probe(ToyComparison& out, const MlpParams& params,
                const ExperimentData& data) {
  // The unlabeled point with the least confident prediction gives the
  // cleanest contrast; require it to sit away from the origin.
  double best_x = 0.0, best_gap = 2.0;
  for (std::size_t i : data.split.unlabeled) {
    double x = data.data.features.at(i, 0);
    if (std::abs(x) < 0.05) continue;
    double gap = std::abs(prob_gap(params, x));
    if (gap < best_gap) {
      best_gap = gap;
      best_x = x;
    }
  }
  Tensor px({1, 1}, {best_x});
  Tensor probs = predict_probs(params, px);
  std::size_t k = probs.at(0, 1) > probs.at(0, 0) ? 1 : 0;
  double mu = probs.at(0, k);

  out.probe_x = best_x;
  out.probe_mu = mu;
  out.formula_inductive_grad = -(1.0 - mu) * best_x;
  out.formula_negative_grad = mu * best_x;

  auto flat_grads = [&](bool negative) {
    Tape tape;
    MlpVars vars = make_vars(tape, params);
    Var p = predict_probs(tape, vars, tape.leaf(px));
    Var loss;
    if (negative) {
      NegativeLabelMask mask = NegativeLabelMask::empty(1, 2);
      mask.set(0, k);
      loss = ns3l_loss(tape, p, mask);
    } else {
      loss = supervised_ce(tape, p, {static_cast<int>(k)});
    }
    std::vector<double> flat;
    for (const Tensor& g : param_grads(tape, vars, loss))
      for (std::size_t i = 0; i < g.numel(); ++i) flat.push_back(g[i]);
    return flat;
  };
  out.measured_inductive_grad = flat_grads(false);
  out.measured_negative_grad = flat_grads(true);
}

}  // namespace

ToyComparison run_toy_comparison(std::size_t n_seeds, double bias) {
  require(n_seeds >= 1, "toy comparison needs at least one seed");
  ExperimentConfig sup = toy_supervised_config();
  ExperimentConfig ns = toy_ns3l_config();
  sup.toy_bias = bias;
  ns.toy_bias = bias;

  ToyComparison out;
  for (std::size_t s = 1; s <= n_seeds; ++s) {
    sup.split_seed = ns.split_seed = s;
    sup.seed = ns.seed = s;
    ExperimentData data = build_dataset(sup);

    TrainResult sup_run = train_run(sup, data);
    TrainResult ns_run = train_run(ns, data);
    double b_sup = decision_boundary_1d(sup_run.params, -1.0, 1.0);
    double b_ns = decision_boundary_1d(ns_run.params, -1.0, 1.0);
    out.supervised_abs_err.push_back(std::abs(b_sup - data.toy_boundary));
    out.ns3l_abs_err.push_back(std::abs(b_ns - data.toy_boundary));

    if (s == 1) fill_probe(out, sup_run.params, data);
  }
  out.supervised_mean = mean_of(out.supervised_abs_err);
  out.ns3l_mean = mean_of(out.ns3l_abs_err);
  out.improvement = out.supervised_mean > 0.0
                        ? (out.supervised_mean - out.ns3l_mean) /
                              out.supervised_mean
                        : 0.0;
  return out;
}

MethodStats eval_method(const ExperimentConfig& cfg,
                        const std::vector<std::uint64_t>& seeds) {
  ExperimentData data = build_dataset(cfg);
  return eval_method(cfg, seeds, data);
}

MethodStats eval_method(const ExperimentConfig& cfg,
                        const std::vector<std::uint64_t>& seeds,
                        const ExperimentData& data) {
  require(!seeds.empty(), "eval_method needs at least one seed");
  MethodStats stats;
  ExperimentConfig run_cfg = cfg;
  for (std::uint64_t s : seeds) {
    run_cfg.seed = s;
    stats.errors.push_back(train_run(run_cfg, data).test_error);
  }
  stats.mean = mean_of(stats.errors);
  stats.stddev = sample_stddev(stats.errors);
  return stats;
}

std::vector<double> default_threshold_grid() { return {0.01, 0.02, 0.04, 0.08}; }

std::vector<double> default_lambda1_grid() { return {0.3, 1.0, 2.0}; }

SweepResult run_sweep(const ExperimentConfig& base,
                      const std::vector<double>& threshold_grid,
                      const std::vector<double>& lambda1_grid,
                      std::size_t noise_seeds) {
  require(!threshold_grid.empty() && !lambda1_grid.empty(),
          "sweep grids must be non-empty");
  require(noise_seeds >= 2, "noise estimate needs at least 2 seeds");
  require(method_uses_ns3l(base.method),
          "sweep expects a negative-sampling method");

  ExperimentData data = build_dataset(base);
  SweepResult sweep;

  ExperimentConfig cfg = base;
  for (double t : threshold_grid)
    for (double l1 : lambda1_grid) {
      cfg.threshold = t;
      cfg.lambda1 = l1;
      double err = train_run(cfg, data).test_error;
      sweep.rows.push_back({t, l1, err});
    }

  // lambda1 = 0 leaves only the supervised term; it must reproduce the
  // supervised baseline exactly since both consume identical random streams.
  cfg = base;
  cfg.lambda1 = 0.0;
  sweep.control_error = train_run(cfg, data).test_error;

  ExperimentConfig sup = base;
  sup.method = Method::kSupervised;
  sup.lambda1 = 0.0;
  sweep.supervised_error = train_run(sup, data).test_error;

  for (std::size_t i = 0; i < noise_seeds; ++i) {
    sup.seed = base.seed + i;
    sweep.supervised_errors.push_back(train_run(sup, data).test_error);
  }
  sweep.supervised_mean = mean_of(sweep.supervised_errors);
  sweep.supervised_std = sample_stddev(sweep.supervised_errors);
  return sweep;
}

void save_sweep_csv(const SweepResult& sweep, const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot open for writing: " + path);
  out << "T,lambda1,test_error\n";
  char buf[64];
  for (const SweepRow& r : sweep.rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.threshold);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.lambda1);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.test_error);
    out << buf << '\n';
  }
  require(static_cast<bool>(out), "sweep write failed: " + path);
}

}  // namespace sslab
