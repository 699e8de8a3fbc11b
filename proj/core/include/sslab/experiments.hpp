#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sslab/config.hpp"
#include "sslab/train.hpp"

namespace sslab {

/// x where the two class probabilities cross, found by bisection on
/// [lo, hi]; falls back to the grid argmin of |p1 - p0| if the ends agree.
double decision_boundary_1d(const MlpParams& params, double lo, double hi);

/// Per-seed absolute boundary errors of a supervised baseline against the
/// same model trained with the negative-sampling term, on the biased
/// one-dimensional problem.  Also carries the per-sample gradient probe at
/// one unlabeled point: the closed-form expressions and the measured
/// parameter gradients of the two unsupervised signals.
struct ToyComparison {
  std::vector<double> supervised_abs_err;
  std::vector<double> ns3l_abs_err;
  double supervised_mean = 0.0;
  double ns3l_mean = 0.0;
  double improvement = 0.0;  // relative reduction of the mean

  double probe_x = 0.0;
  double probe_mu = 0.0;               // predicted P(class 1) at the probe
  double formula_inductive_grad = 0.0; // -(1 - mu) * x
  double formula_negative_grad = 0.0;  // mu * x
  std::vector<double> measured_inductive_grad;  // d pseudo-label CE / d params
  std::vector<double> measured_negative_grad;   // d ns3l / d params
};

/// Base configs for the two toy runs; callers may override steps/lr/seeds.
ExperimentConfig toy_supervised_config();
ExperimentConfig toy_ns3l_config();

ToyComparison run_toy_comparison(std::size_t n_seeds, double bias);

/// Mean/stddev of test error across seeds, reusing one dataset when the
/// split seed is shared.
struct MethodStats {
  std::vector<double> errors;
  double mean = 0.0;
  double stddev = 0.0;  // sample stddev; 0 for a single seed
};

MethodStats eval_method(const ExperimentConfig& cfg,
                        const std::vector<std::uint64_t>& seeds);
MethodStats eval_method(const ExperimentConfig& cfg,
                        const std::vector<std::uint64_t>& seeds,
                        const ExperimentData& data);

struct SweepRow {
  double threshold = 0.0;
  double lambda1 = 0.0;
  double test_error = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double control_error = 0.0;     // lambda1 = 0 run
  double supervised_error = 0.0;  // plain supervised, same seed
  double supervised_mean = 0.0;   // across noise seeds
  double supervised_std = 0.0;
  std::vector<double> supervised_errors;
};

/// Grid over threshold x lambda1 with a lambda1=0 control and a supervised
/// noise estimate from `noise_seeds` independent runs.
SweepResult run_sweep(const ExperimentConfig& base,
                      const std::vector<double>& threshold_grid,
                      const std::vector<double>& lambda1_grid,
                      std::size_t noise_seeds);

/// "T,lambda1,test_error" with %.17g values.
void save_sweep_csv(const SweepResult& sweep, const std::string& path);

std::vector<double> default_threshold_grid();
std::vector<double> default_lambda1_grid();

}  // namespace sslab
