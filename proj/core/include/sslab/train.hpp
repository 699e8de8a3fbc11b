#pragma once

#include <string>
#include <vector>

#include "sslab/config.hpp"
#include "sslab/data.hpp"
#include "sslab/losses.hpp"
#include "sslab/mlp.hpp"

namespace sslab {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment accumulators, one pair per parameter tensor in
/// MlpParams::tensors() order.
struct AdamState {
  AdamConfig cfg;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  long step = 0;
};

AdamState make_adam(const MlpParams& params, AdamConfig cfg = {});

/// One bias-corrected update.  Rejects non-finite gradients.
void adam_step(MlpParams& params, const std::vector<Tensor>& grads,
               AdamState& state, double lr);

struct EmaState {
  MlpParams shadow;
  double decay = 0.999;
};

EmaState make_ema(const MlpParams& params, double decay);
void ema_update(EmaState& ema, const MlpParams& params);

/// exp(-5 (1 - min(t / warmup, 1))^2); 1 everywhere when warmup_steps == 0.
double warmup_weight(long step, long warmup_steps);

/// Learning rate at a step: constant until decay_step, then linear to 0 at
/// total_steps.  decay_step == 0 disables decay.
double lr_at(double base_lr, long step, long decay_step, long total_steps);

/// Fraction of rows whose argmax prediction differs from the label.
double evaluate_error(const MlpParams& params, const Tensor& x,
                      const std::vector<int>& y);

struct MetricRow {
  long step = 0;
  std::string term;
  double value = 0.0;
};

/// "step,term,value" with %.17g values.
void write_metrics_csv(const std::vector<MetricRow>& rows,
                       const std::string& path);

/// Dataset plus split as described by a config; built from split_seed only,
/// so different training seeds see identical data.
struct ExperimentData {
  Dataset data;
  SslSplit split;
  double toy_boundary = 0.0;
};

ExperimentData build_dataset(const ExperimentConfig& cfg);

struct TrainResult {
  MlpParams params;
  MlpParams ema_params;
  std::vector<MetricRow> metrics;
  double val_error = 1.0;   // final, on the eval parameters
  double test_error = 1.0;  // final, on the eval parameters
  long steps_run = 0;
};

/// Runs the configured objective for total_steps.  Throws with the step
/// number if the loss or a gradient stops being finite.
TrainResult train_run(const ExperimentConfig& cfg);
TrainResult train_run(const ExperimentConfig& cfg, const ExperimentData& data);

}  // namespace sslab
