#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sslab/config.hpp"
#include "sslab/error.hpp"
#include "sslab/experiments.hpp"
#include "sslab/grad_suite.hpp"
#include "sslab/mlp.hpp"
#include "sslab/train.hpp"

namespace {

using sslab::ExperimentConfig;

/// Hyperparameter flags shared by train/eval/sweep; values are kept as
/// strings and funneled through the same setter the config parser uses.
struct ConfigFlags {
  std::string config_path;
  std::string method;
  std::vector<std::pair<std::string, std::string*>> overrides;
  std::vector<std::string> sets;
  std::string t, lambda1, lambda2, lambda3, epsilon, alpha, temperature,
      augmentations, lr, seed;

  void attach(CLI::App* cmd, bool with_config = true) {
    if (with_config)
      cmd->add_option("--config", config_path, "config file (key = value)");
    cmd->add_option("--method", method,
                    "training method; applies its published defaults when no "
                    "--config is given");
    auto opt = [&](const char* flag, std::string& slot, const char* key,
                   const char* help) {
      cmd->add_option(flag, slot, help);
      overrides.emplace_back(key, &slot);
    };
    opt("--T", t, "T", "negative-label probability threshold");
    opt("--lambda1", lambda1, "lambda1", "negative-sampling term weight");
    opt("--lambda2", lambda2, "lambda2", "consistency term weight");
    opt("--lambda3", lambda3, "lambda3", "mixup consistency term weight");
    opt("--epsilon", epsilon, "epsilon", "adversarial perturbation radius");
    opt("--alpha", alpha, "alpha", "mixup Beta(alpha, alpha) parameter");
    opt("--E", temperature, "E", "label sharpening temperature");
    opt("--A", augmentations, "A", "augmented copies per unlabeled sample");
    opt("--lr", lr, "lr", "learning rate");
    opt("--seed", seed, "seed", "base training seed");
    cmd->add_option("--set", sets,
                    "extra overrides as key=value (any config key)");
  }

  ExperimentConfig build() const {
    ExperimentConfig cfg;
    if (!config_path.empty()) {
      cfg = sslab::load_config(config_path);
      if (!method.empty()) cfg.method = sslab::method_from_string(method);
    } else if (!method.empty()) {
      cfg = ExperimentConfig::defaults_for(sslab::method_from_string(method));
    }
    for (const auto& [key, slot] : overrides)
      if (!slot->empty())
        sslab::apply_config_value(cfg, key, *slot, "flag --" + key);
    for (const std::string& kv : sets) {
      std::size_t eq = kv.find('=');
      sslab::require(eq != std::string::npos,
                     "--set expects key=value, got '" + kv + "'");
      sslab::apply_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1),
                                "flag --set");
    }
    cfg.validate();
    return cfg;
  }
};

std::vector<double> parse_grid(const std::string& csv, const char* what) {
  std::vector<double> out;
  std::size_t at = 0;
  while (at <= csv.size()) {
    std::size_t comma = csv.find(',', at);
    std::string field = csv.substr(
        at, comma == std::string::npos ? std::string::npos : comma - at);
    sslab::require(!field.empty(),
                   std::string(what) + ": empty entry in grid '" + csv + "'");
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(field, &pos));
      sslab::require(pos == field.size(), "bad number");
    } catch (const std::exception&) {
      sslab::fail(std::string(what) + ": cannot parse '" + field + "'");
    }
    if (comma == std::string::npos) break;
    at = comma + 1;
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

int cmd_train(const ConfigFlags& flags, const std::string& out_dir,
              std::size_t n_seeds) {
  ExperimentConfig cfg = flags.build();
  std::filesystem::create_directories(out_dir);
  sslab::save_config(cfg, out_dir + "/config.txt");
  sslab::ExperimentData data = sslab::build_dataset(cfg);

  std::printf("method=%s dataset=%s n=%zu labeled=%zu classes=%zu\n",
              sslab::to_string(cfg.method).c_str(), cfg.dataset.c_str(),
              data.data.size(), data.split.labeled.size(),
              data.data.num_classes);
  std::vector<double> errors;
  ExperimentConfig run_cfg = cfg;
  for (std::size_t i = 0; i < n_seeds; ++i) {
    run_cfg.seed = cfg.seed + i;
    sslab::TrainResult result = sslab::train_run(run_cfg, data);
    std::string tag = std::to_string(run_cfg.seed);
    sslab::write_metrics_csv(result.metrics,
                             out_dir + "/metrics_seed" + tag + ".csv");
    const sslab::MlpParams& save_params =
        cfg.eval_with_ema ? result.ema_params : result.params;
    sslab::save_checkpoint(save_params,
                           out_dir + "/checkpoint_seed" + tag + ".bin");
    std::printf("seed %s: val_error %.4f test_error %.4f\n", tag.c_str(),
                result.val_error, result.test_error);
    errors.push_back(result.test_error);
  }
  std::printf("test_error mean %.4f stddev %.4f over %zu seed(s)\n",
              mean_of(errors), stddev_of(errors), errors.size());
  std::printf("wrote metrics and checkpoints under %s\n", out_dir.c_str());
  return 0;
}

int cmd_eval(const ConfigFlags& flags, const std::string& checkpoint) {
  ExperimentConfig cfg = flags.build();
  sslab::ExperimentData data = sslab::build_dataset(cfg);
  sslab::MlpParams params = sslab::load_checkpoint(checkpoint);
  params.leaky_slope = cfg.leaky_slope;
  sslab::require(params.input_dim() == data.data.dim() &&
                     params.num_classes() == data.data.num_classes,
                 "checkpoint shape does not match the configured dataset");
  double val = sslab::evaluate_error(
      params, sslab::gather_rows(data.data.features, data.split.validation),
      sslab::gather_labels(data.data.labels, data.split.validation));
  double test = sslab::evaluate_error(
      params, sslab::gather_rows(data.data.features, data.split.test),
      sslab::gather_labels(data.data.labels, data.split.test));
  std::printf("val_error %.6f\ntest_error %.6f\n", val, test);
  return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
  std::vector<sslab::GradCheckCase> cases = sslab::run_gradcheck_suite(seed);
  double worst = 0.0;
  for (const auto& c : cases) {
    std::printf("%-32s max_rel_err %.3e\n", c.name.c_str(), c.max_rel_err);
    worst = std::max(worst, c.max_rel_err);
  }
  bool ok = worst < 1e-4;
  std::printf("worst %.3e (%s)\n", worst, ok ? "pass" : "FAIL");
  return ok ? 0 : 1;
}

int cmd_demo_toy(std::size_t n_seeds, double bias, const std::string& out_dir) {
  sslab::ToyComparison cmp = sslab::run_toy_comparison(n_seeds, bias);
  std::filesystem::create_directories(out_dir);

  std::printf("biased 1-d problem: labeled class-1 points only in (-1, %.2f), "
              "true boundary at 0\n",
              -bias);
  std::printf("probe point x_u = %.4f, predicted mu = %.4f\n", cmp.probe_x,
              cmp.probe_mu);
  std::printf("closed-form per-sample gradients in the scalar model:\n");
  std::printf("  pseudo-label pull  -(1-mu)*x = %+.6f\n",
              cmp.formula_inductive_grad);
  std::printf("  negative-label push   mu*x = %+.6f\n",
              cmp.formula_negative_grad);
  auto print_vec = [](const char* name, const std::vector<double>& v) {
    std::printf("  %s [", name);
    for (std::size_t i = 0; i < v.size(); ++i)
      std::printf("%s%+.6f", i ? ", " : "", v[i]);
    std::printf("]\n");
  };
  std::printf("measured parameter gradients at the probe:\n");
  print_vec("pseudo-label CE ", cmp.measured_inductive_grad);
  print_vec("negative-label  ", cmp.measured_negative_grad);

  std::FILE* f = std::fopen((out_dir + "/toy_boundaries.csv").c_str(), "w");
  sslab::require(f != nullptr, "cannot open boundary csv for writing");
  std::fprintf(f, "seed,supervised_abs_err,ns3l_abs_err\n");
  for (std::size_t i = 0; i < cmp.supervised_abs_err.size(); ++i)
    std::fprintf(f, "%zu,%.17g,%.17g\n", i + 1, cmp.supervised_abs_err[i],
                 cmp.ns3l_abs_err[i]);
  std::fclose(f);

  std::printf("mean |boundary - 0| over %zu seed(s):\n", n_seeds);
  std::printf("  supervised       %.4f\n", cmp.supervised_mean);
  std::printf("  with negatives   %.4f\n", cmp.ns3l_mean);
  std::printf("  improvement      %.1f%%\n", 100.0 * cmp.improvement);
  std::printf("wrote %s/toy_boundaries.csv\n", out_dir.c_str());
  return 0;
}

int cmd_sweep(const ConfigFlags& flags, const std::string& out_dir,
              std::size_t noise_seeds, const std::string& t_grid_csv,
              const std::string& l1_grid_csv) {
  ExperimentConfig cfg;
  if (flags.config_path.empty() && flags.method.empty()) {
    cfg = ExperimentConfig::defaults_for(sslab::Method::kNs3l);
    for (const auto& [key, slot] : flags.overrides)
      if (!slot->empty())
        sslab::apply_config_value(cfg, key, *slot, "flag --" + key);
    for (const std::string& kv : flags.sets) {
      std::size_t eq = kv.find('=');
      sslab::require(eq != std::string::npos,
                     "--set expects key=value, got '" + kv + "'");
      sslab::apply_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1),
                                "flag --set");
    }
  } else {
    cfg = flags.build();
  }
  std::vector<double> t_grid = t_grid_csv.empty()
                                   ? sslab::default_threshold_grid()
                                   : parse_grid(t_grid_csv, "--T-grid");
  std::vector<double> l1_grid = l1_grid_csv.empty()
                                    ? sslab::default_lambda1_grid()
                                    : parse_grid(l1_grid_csv, "--lambda1-grid");

  sslab::SweepResult sweep = sslab::run_sweep(cfg, t_grid, l1_grid, noise_seeds);
  std::filesystem::create_directories(out_dir);
  sslab::save_sweep_csv(sweep, out_dir + "/sweep.csv");

  std::printf("%-8s %-8s %s\n", "T", "lambda1", "test_error");
  for (const auto& r : sweep.rows)
    std::printf("%-8g %-8g %.4f\n", r.threshold, r.lambda1, r.test_error);
  std::printf("control (lambda1=0) test_error %.6f\n", sweep.control_error);
  std::printf("supervised same-seed test_error %.6f\n", sweep.supervised_error);
  std::printf("supervised across %zu seeds: mean %.6f stddev %.6f\n",
              sweep.supervised_errors.size(), sweep.supervised_mean,
              sweep.supervised_std);
  std::printf("wrote %s/sweep.csv\n", out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale semi-supervised learning laboratory"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "train one method, one or more seeds");
  ConfigFlags train_flags;
  train_flags.attach(train);
  std::string train_out = "runs/train";
  std::size_t train_seeds = 1;
  train->add_option("--out", train_out, "output directory");
  train->add_option("--seeds", train_seeds, "number of consecutive seeds");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  ConfigFlags eval_flags;
  eval_flags.attach(eval);
  std::string eval_checkpoint;
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint path")
      ->required();

  auto* gradcheck =
      app.add_subcommand("gradcheck", "finite-difference gradient validation");
  std::uint64_t gc_seed = 7;
  gradcheck->add_option("--seed", gc_seed, "suite seed");

  auto* demo = app.add_subcommand(
      "demo-toy", "biased 1-d comparison: supervised vs negative labels");
  std::size_t demo_seeds = 20;
  double demo_bias = 0.6;
  std::string demo_out = "runs/demo-toy";
  demo->add_option("--seeds", demo_seeds, "number of seeds");
  demo->add_option("--bias", demo_bias, "labeled class-1 gap width");
  demo->add_option("--out", demo_out, "output directory");

  auto* sweep =
      app.add_subcommand("sweep", "threshold x lambda1 grid with controls");
  ConfigFlags sweep_flags;
  sweep_flags.attach(sweep);
  std::string sweep_out = "runs/sweep";
  std::size_t sweep_noise_seeds = 5;
  std::string sweep_t_grid, sweep_l1_grid;
  sweep->add_option("--out", sweep_out, "output directory");
  sweep->add_option("--noise-seeds", sweep_noise_seeds,
                    "supervised seeds for the noise estimate");
  sweep->add_option("--T-grid", sweep_t_grid, "comma-separated thresholds");
  sweep->add_option("--lambda1-grid", sweep_l1_grid,
                    "comma-separated lambda1 values");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(train_flags, train_out, train_seeds);
    if (eval->parsed()) return cmd_eval(eval_flags, eval_checkpoint);
    if (gradcheck->parsed()) return cmd_gradcheck(gc_seed);
    if (demo->parsed()) return cmd_demo_toy(demo_seeds, demo_bias, demo_out);
    if (sweep->parsed())
      return cmd_sweep(sweep_flags, sweep_out, sweep_noise_seeds, sweep_t_grid,
                       sweep_l1_grid);
  } catch (const sslab::DivergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const sslab::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
