#include <string>

#include "doctest.h"
#include "sslab/config.hpp"
#include "sslab/error.hpp"

using namespace sslab;

TEST_CASE("per-method default hyperparameters") {
  ExperimentConfig base;
  CHECK(base.method == Method::kSupervised);
  CHECK(base.lambda1 == 0.0);
  CHECK(base.lr == doctest::Approx(6e-4));

  ExperimentConfig ns = ExperimentConfig::defaults_for(Method::kNs3l);
  CHECK(ns.lambda1 == 1.0);
  CHECK(ns.threshold == doctest::Approx(0.04));

  ExperimentConfig vn = ExperimentConfig::defaults_for(Method::kVatNs3l);
  CHECK(vn.lambda1 == doctest::Approx(0.3));
  CHECK(vn.lambda2 == doctest::Approx(0.3));

  ExperimentConfig pi = ExperimentConfig::defaults_for(Method::kPiNs3l);
  CHECK(pi.lambda1 == 1.0);
  CHECK(pi.lambda2 == 1.0);

  ExperimentConfig mm = ExperimentConfig::defaults_for(Method::kMixMatch);
  CHECK(mm.lambda3 == 75.0);
  CHECK(mm.eval_with_ema);
  CHECK(mm.mm_temperature == doctest::Approx(0.5));
  CHECK(mm.mm_augmentations == 2);
  CHECK(mm.mm_alpha == doctest::Approx(0.75));

  ExperimentConfig mmn = ExperimentConfig::defaults_for(Method::kMixMatchNs3l);
  CHECK(mmn.lambda1 == 2.0);
  CHECK(mmn.threshold == doctest::Approx(0.05));
}

TEST_CASE("emit and parse invert each other") {
  ExperimentConfig cfg = ExperimentConfig::defaults_for(Method::kVatNs3l);
  cfg.hidden = {64, 32};
  cfg.seed = 42;
  cfg.scale_threshold_by_classes = true;
  cfg.neg_strategy = NegStrategy::kNnExclude4;
  cfg.neg_p = 2;
  cfg.lr = 1.0 / 3.0;
  ExperimentConfig back = parse_config_text(emit_config(cfg), "mem");
  CHECK(back == cfg);

  cfg.hidden = {};
  cfg.dataset = "toy1d";
  back = parse_config_text(emit_config(cfg), "mem");
  CHECK(back == cfg);
}

TEST_CASE("config text accepts comments and blank lines") {
  std::string text =
      "# experiment\n"
      "method = ns3l\n"
      "\n"
      "lr = 0.01   # fast\n"
      "hidden = 16, 8\n";
  ExperimentConfig cfg = parse_config_text(text, "mem");
  CHECK(cfg.method == Method::kNs3l);
  CHECK(cfg.lr == doctest::Approx(0.01));
  CHECK(cfg.hidden == std::vector<std::size_t>{16, 8});
  // Method defaults fill everything the file does not mention.
  CHECK(cfg.lambda1 == 1.0);
}

TEST_CASE("method defaults apply before file overrides, in any order") {
  std::string text =
      "lambda1 = 0.5\n"
      "method = ns3l\n";
  ExperimentConfig cfg = parse_config_text(text, "mem");
  CHECK(cfg.method == Method::kNs3l);
  CHECK(cfg.lambda1 == 0.5);  // the file wins over the method default
}

TEST_CASE("unknown keys come back with a suggestion") {
  CHECK_THROWS_WITH_AS(parse_config_text("lamda1 = 1\n", "mem"),
                       doctest::Contains("did you mean 'lambda1'"), Error);
  ExperimentConfig cfg;
  CHECK_THROWS_WITH_AS(apply_config_value(cfg, "epsilom", "0.1", "cli"),
                       doctest::Contains("did you mean 'epsilon'"), Error);
}

TEST_CASE("malformed config text is rejected with line numbers") {
  CHECK_THROWS_WITH_AS(
      parse_config_text("method = ns3l\nlr = 0.1\nlr = 0.2\n", "mem"),
      doctest::Contains("mem:3: duplicate key 'lr'"), Error);
  CHECK_THROWS_WITH_AS(parse_config_text("just words\n", "mem"),
                       doctest::Contains("mem:1"), Error);
  CHECK_THROWS_AS(parse_config_text("lr = banana\n", "mem"), Error);
  CHECK_THROWS_AS(parse_config_text("method = adamw\n", "mem"), Error);
  CHECK_THROWS_AS(parse_config_text("hidden = 16,-3\n", "mem"), Error);
}

TEST_CASE("validation catches inconsistent settings") {
  ExperimentConfig cfg;
  cfg.lr = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);

  cfg = ExperimentConfig{};
  cfg.warmup_steps = cfg.total_steps + 1;
  CHECK_THROWS_AS(cfg.validate(), Error);

  cfg = ExperimentConfig{};
  cfg.dataset = "csv";
  CHECK_THROWS_AS(cfg.validate(), Error);

  cfg = ExperimentConfig{};
  cfg.dataset = "imagenet";
  CHECK_THROWS_AS(cfg.validate(), Error);

  cfg = ExperimentConfig{};
  cfg.method = Method::kNs3l;
  cfg.threshold = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("derived loss configurations mirror the experiment fields") {
  ExperimentConfig cfg = ExperimentConfig::defaults_for(Method::kVatNs3l);
  cfg.vat_epsilon = 2.5;
  cfg.threshold = 0.07;
  CombinedConfig c = cfg.combined();
  CHECK(c.method == Method::kVatNs3l);
  CHECK(c.vat.epsilon == 2.5);
  CHECK(c.threshold == 0.07);

  ExperimentConfig mm = ExperimentConfig::defaults_for(Method::kMixMatchNs3l);
  MixMatchConfig m = mm.mixmatch();
  CHECK(m.lambda3 == 75.0);
  CHECK(m.ns3l_lambda1 == 2.0);
  CHECK(m.ns3l_threshold == doctest::Approx(0.05));
  // The plain variant leaves the negative-label hook off.
  MixMatchConfig plain =
      ExperimentConfig::defaults_for(Method::kMixMatch).mixmatch();
  CHECK(plain.ns3l_lambda1 == 0.0);

  MlpSpec spec = cfg.mlp_spec(8, 4);
  REQUIRE(spec.layer_widths.size() == 3);
  CHECK(spec.layer_widths[0] == 8);
  CHECK(spec.layer_widths[1] == 32);
  CHECK(spec.layer_widths[2] == 4);
}

TEST_CASE("canonical key list starts with the method") {
  const std::vector<std::string>& keys = config_key_names();
  REQUIRE(!keys.empty());
  CHECK(keys.front() == "method");
  bool has_T = false, has_strategy = false;
  for (const std::string& k : keys) {
    has_T |= k == "T";
    has_strategy |= k == "neg_strategy";
  }
  CHECK(has_T);
  CHECK(has_strategy);
}
