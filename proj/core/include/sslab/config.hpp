#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sslab/losses.hpp"
#include "sslab/mixmatch.hpp"
#include "sslab/mlp.hpp"

namespace sslab {

/// Complete description of one training run.  Serializes to a flat
/// "key = value" file; see key_names() for the canonical key set.
struct ExperimentConfig {
  Method method = Method::kSupervised;

  // Data source: "blobs", "toy1d" or "csv".
  std::string dataset = "blobs";
  std::string csv_path;
  std::size_t blobs_classes = 4;
  std::size_t blobs_per_class = 631;
  std::size_t blobs_dim = 8;
  double blobs_spread = 0.25;
  double toy_bias = 0.6;
  std::size_t toy_n_labeled = 20;
  std::size_t toy_n_unlabeled = 400;

  std::size_t n_labeled = 20;
  std::uint64_t split_seed = 1;  // dataset generation and split
  std::uint64_t seed = 1;        // init, batches, stochastic loss terms

  std::vector<std::size_t> hidden{32};
  double leaky_slope = 0.1;

  double lr = 6e-4;
  long total_steps = 2000;
  long warmup_steps = 500;
  long eval_interval = 100;
  long lr_decay_step = 0;  // 0: constant; else linear decay to 0 from here
  std::size_t batch_labeled = 50;
  std::size_t batch_unlabeled = 50;

  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda3 = 0.0;
  double entmin_weight = 1.0;
  double pl_weight = 1.0;
  double threshold = 0.04;
  double tau_pl = 0.95;
  bool scale_threshold_by_classes = false;

  double vat_xi = 1e-6;
  double vat_epsilon = 1.0;
  std::size_t vat_power_iterations = 1;
  double pi_sigma = 0.1;

  double mm_alpha = 0.75;
  double mm_temperature = 0.5;  // E
  std::size_t mm_augmentations = 2;  // A
  double mm_sigma = 0.1;

  double ema_decay = 0.999;
  bool eval_with_ema = false;

  NegStrategy neg_strategy = NegStrategy::kThreshold;
  std::size_t neg_p = 1;

  bool operator==(const ExperimentConfig&) const = default;

  /// Base defaults with the published per-method hyperparameters applied.
  static ExperimentConfig defaults_for(Method m);

  CombinedConfig combined() const;
  MixMatchConfig mixmatch() const;
  MlpSpec mlp_spec(std::size_t input_dim, std::size_t num_classes) const;
  void validate() const;
};

/// Canonical key order used by emit_config.
const std::vector<std::string>& config_key_names();

/// Parses "key = value" lines ('#' comments, blank lines allowed).  Unknown
/// keys are rejected with a nearest-key suggestion; duplicate keys are
/// rejected.  Method defaults apply first, then the file's values.
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin);
ExperimentConfig load_config(const std::string& path);

/// Writes every key; parse(emit(c)) == c.
std::string emit_config(const ExperimentConfig& cfg);
void save_config(const ExperimentConfig& cfg, const std::string& path);

/// Sets one key from its textual value (shared by file parsing and CLI
/// overrides).  Throws on unknown keys or unparsable values.
void apply_config_value(ExperimentConfig& cfg, const std::string& key,
                        const std::string& value, const std::string& origin);

}  // namespace sslab
