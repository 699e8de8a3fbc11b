#include "sslab/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "sslab/error.hpp"

namespace sslab {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, const std::string& where) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    fail(where + ": cannot parse number '" + v + "'");
  }
  require(pos == v.size(), where + ": cannot parse number '" + v + "'");
  return out;
}

long long parse_int(const std::string& v, const std::string& where) {
  std::size_t pos = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &pos);
  } catch (const std::exception&) {
    fail(where + ": cannot parse integer '" + v + "'");
  }
  require(pos == v.size(), where + ": cannot parse integer '" + v + "'");
  return out;
}

std::size_t parse_size(const std::string& v, const std::string& where) {
  long long out = parse_int(v, where);
  require(out >= 0, where + ": expected a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(out);
}

bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true") return true;
  if (v == "false") return false;
  fail(where + ": expected 'true' or 'false', got '" + v + "'");
}

std::vector<std::size_t> parse_hidden(const std::string& v,
                                      const std::string& where) {
  std::vector<std::size_t> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string field;
  while (std::getline(ss, field, ',')) {
    field = trim(field);
    std::size_t w = parse_size(field, where);
    require(w >= 1, where + ": hidden widths must be positive");
    out.push_back(w);
  }
  return out;
}

std::string hidden_to_string(const std::vector<std::size_t>& hidden) {
  std::string s;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(hidden[i]);
  }
  return s;
}

struct KeyHandler {
  std::string name;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<KeyHandler>& key_table() {
  static const std::vector<KeyHandler> table = [] {
    std::vector<KeyHandler> t;
    auto add = [&](const std::string& name, auto set, auto get) {
      t.push_back({name, set, get});
    };
    auto dbl = [&](const std::string& name, double ExperimentConfig::* f) {
      add(name,
          [f](ExperimentConfig& c, const std::string& v, const std::string& w) {
            c.*f = parse_double(v, w);
          },
          [f](const ExperimentConfig& c) { return fmt_double(c.*f); });
    };
    auto size = [&](const std::string& name, std::size_t ExperimentConfig::* f) {
      add(name,
          [f](ExperimentConfig& c, const std::string& v, const std::string& w) {
            c.*f = parse_size(v, w);
          },
          [f](const ExperimentConfig& c) { return std::to_string(c.*f); });
    };
    auto slong = [&](const std::string& name, long ExperimentConfig::* f) {
      add(name,
          [f](ExperimentConfig& c, const std::string& v, const std::string& w) {
            c.*f = static_cast<long>(parse_int(v, w));
          },
          [f](const ExperimentConfig& c) { return std::to_string(c.*f); });
    };
    auto boolean = [&](const std::string& name, bool ExperimentConfig::* f) {
      add(name,
          [f](ExperimentConfig& c, const std::string& v, const std::string& w) {
            c.*f = parse_bool(v, w);
          },
          [f](const ExperimentConfig& c) { return (c.*f) ? "true" : "false"; });
    };

    add("method",
        [](ExperimentConfig& c, const std::string& v, const std::string&) {
          c.method = method_from_string(v);
        },
        [](const ExperimentConfig& c) { return to_string(c.method); });
    add("dataset",
        [](ExperimentConfig& c, const std::string& v, const std::string& w) {
          require(v == "blobs" || v == "toy1d" || v == "csv",
                  w + ": dataset must be blobs, toy1d or csv");
          c.dataset = v;
        },
        [](const ExperimentConfig& c) { return c.dataset; });
    add("csv_path",
        [](ExperimentConfig& c, const std::string& v, const std::string&) {
          c.csv_path = v;
        },
        [](const ExperimentConfig& c) { return c.csv_path; });
    size("blobs_classes", &ExperimentConfig::blobs_classes);
    size("blobs_per_class", &ExperimentConfig::blobs_per_class);
    size("blobs_dim", &ExperimentConfig::blobs_dim);
    dbl("blobs_spread", &ExperimentConfig::blobs_spread);
    dbl("toy_bias", &ExperimentConfig::toy_bias);
    size("toy_n_labeled", &ExperimentConfig::toy_n_labeled);
    size("toy_n_unlabeled", &ExperimentConfig::toy_n_unlabeled);
    size("n_labeled", &ExperimentConfig::n_labeled);
    add("split_seed",
        [](ExperimentConfig& c, const std::string& v, const std::string& w) {
          c.split_seed = static_cast<std::uint64_t>(parse_size(v, w));
        },
        [](const ExperimentConfig& c) { return std::to_string(c.split_seed); });
    add("seed",
        [](ExperimentConfig& c, const std::string& v, const std::string& w) {
          c.seed = static_cast<std::uint64_t>(parse_size(v, w));
        },
        [](const ExperimentConfig& c) { return std::to_string(c.seed); });
    add("hidden",
        [](ExperimentConfig& c, const std::string& v, const std::string& w) {
          c.hidden = parse_hidden(v, w);
        },
        [](const ExperimentConfig& c) { return hidden_to_string(c.hidden); });
    dbl("leaky_slope", &ExperimentConfig::leaky_slope);
    dbl("lr", &ExperimentConfig::lr);
    slong("total_steps", &ExperimentConfig::total_steps);
    slong("warmup_steps", &ExperimentConfig::warmup_steps);
    slong("eval_interval", &ExperimentConfig::eval_interval);
    slong("lr_decay_step", &ExperimentConfig::lr_decay_step);
    size("B1", &ExperimentConfig::batch_labeled);
    size("B2", &ExperimentConfig::batch_unlabeled);
    dbl("lambda1", &ExperimentConfig::lambda1);
    dbl("lambda2", &ExperimentConfig::lambda2);
    dbl("lambda3", &ExperimentConfig::lambda3);
    dbl("entmin_weight", &ExperimentConfig::entmin_weight);
    dbl("pl_weight", &ExperimentConfig::pl_weight);
    dbl("T", &ExperimentConfig::threshold);
    dbl("tau_pl", &ExperimentConfig::tau_pl);
    boolean("scale_threshold_by_classes",
            &ExperimentConfig::scale_threshold_by_classes);
    dbl("xi", &ExperimentConfig::vat_xi);
    dbl("epsilon", &ExperimentConfig::vat_epsilon);
    size("power_iterations", &ExperimentConfig::vat_power_iterations);
    dbl("pi_sigma", &ExperimentConfig::pi_sigma);
    dbl("alpha", &ExperimentConfig::mm_alpha);
    dbl("E", &ExperimentConfig::mm_temperature);
    size("A", &ExperimentConfig::mm_augmentations);
    dbl("sigma", &ExperimentConfig::mm_sigma);
    dbl("ema_decay", &ExperimentConfig::ema_decay);
    boolean("eval_with_ema", &ExperimentConfig::eval_with_ema);
    add("neg_strategy",
        [](ExperimentConfig& c, const std::string& v, const std::string&) {
          c.neg_strategy = neg_strategy_from_string(v);
        },
        [](const ExperimentConfig& c) { return to_string(c.neg_strategy); });
    size("neg_p", &ExperimentConfig::neg_p);
    return t;
  }();
  return table;
}

const KeyHandler* find_key(const std::string& name) {
  for (const KeyHandler& h : key_table())
    if (h.name == name) return &h;
  return nullptr;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string nearest_key(const std::string& name) {
  std::string best;
  std::size_t best_d = SIZE_MAX;
  for (const KeyHandler& h : key_table()) {
    std::size_t d = edit_distance(name, h.name);
    if (d < best_d) {
      best_d = d;
      best = h.name;
    }
  }
  return best_d <= 3 ? best : "";
}

}  // namespace

const std::vector<std::string>& config_key_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const KeyHandler& h : key_table()) out.push_back(h.name);
    return out;
  }();
  return names;
}

ExperimentConfig ExperimentConfig::defaults_for(Method m) {
  ExperimentConfig cfg;
  cfg.method = m;
  switch (m) {
    case Method::kSupervised:
    case Method::kPseudoLabel:
      break;
    case Method::kNs3l:
      cfg.lambda1 = 1.0;
      cfg.threshold = 0.04;
      cfg.lr = 6e-4;
      break;
    case Method::kPi:
      cfg.lambda2 = 1.0;
      break;
    case Method::kPiNs3l:
      cfg.lambda1 = 1.0;
      cfg.lambda2 = 1.0;
      cfg.threshold = 0.04;
      break;
    case Method::kVat:
    case Method::kVatEntMin:
    case Method::kVatPseudoLabel:
      cfg.lambda2 = 1.0;
      break;
    case Method::kVatNs3l:
      cfg.lambda1 = 0.3;
      cfg.lambda2 = 0.3;
      cfg.threshold = 0.04;
      break;
    case Method::kMixMatch:
      cfg.lambda3 = 75.0;
      cfg.eval_with_ema = true;
      break;
    case Method::kMixMatchNs3l:
      cfg.lambda3 = 75.0;
      cfg.lambda1 = 2.0;
      cfg.threshold = 0.05;
      cfg.eval_with_ema = true;
      break;
  }
  return cfg;
}

CombinedConfig ExperimentConfig::combined() const {
  CombinedConfig c;
  c.method = method;
  c.lambda1 = lambda1;
  c.lambda2 = lambda2;
  c.entmin_weight = entmin_weight;
  c.pl_weight = pl_weight;
  c.threshold = threshold;
  c.scale_threshold_by_classes = scale_threshold_by_classes;
  c.tau_pl = tau_pl;
  c.vat.xi = vat_xi;
  c.vat.epsilon = vat_epsilon;
  c.vat.power_iterations = vat_power_iterations;
  c.pi_sigma = pi_sigma;
  c.neg_strategy = neg_strategy;
  c.neg_p = neg_p;
  return c;
}

MixMatchConfig ExperimentConfig::mixmatch() const {
  MixMatchConfig c;
  c.temperature = mm_temperature;
  c.augmentations = mm_augmentations;
  c.alpha = mm_alpha;
  c.lambda3 = lambda3;
  c.sigma = mm_sigma;
  c.ns3l_lambda1 = method == Method::kMixMatchNs3l ? lambda1 : 0.0;
  c.ns3l_threshold = threshold;
  return c;
}

MlpSpec ExperimentConfig::mlp_spec(std::size_t input_dim,
                                   std::size_t num_classes) const {
  MlpSpec spec;
  spec.layer_widths.push_back(input_dim);
  for (std::size_t h : hidden) spec.layer_widths.push_back(h);
  spec.layer_widths.push_back(num_classes);
  spec.leaky_slope = leaky_slope;
  return spec;
}

void ExperimentConfig::validate() const {
  require(dataset == "blobs" || dataset == "toy1d" || dataset == "csv",
          "dataset must be blobs, toy1d or csv");
  require(dataset != "csv" || !csv_path.empty(),
          "dataset csv requires csv_path");
  require(lr > 0.0, "lr must be positive");
  require(total_steps >= 1, "total_steps must be at least 1");
  require(warmup_steps >= 0 && warmup_steps <= total_steps,
          "warmup_steps must lie in [0, total_steps]");
  require(eval_interval >= 1, "eval_interval must be at least 1");
  require(lr_decay_step >= 0 && lr_decay_step < total_steps,
          "lr_decay_step must lie in [0, total_steps)");
  require(batch_labeled >= 1 && batch_unlabeled >= 1,
          "batch sizes must be positive");
  require(ema_decay >= 0.0 && ema_decay < 1.0, "ema_decay must lie in [0, 1)");
  if (method_uses_mixmatch(method)) mixmatch().validate();
  else combined().validate();
}

void apply_config_value(ExperimentConfig& cfg, const std::string& key,
                        const std::string& value, const std::string& origin) {
  const KeyHandler* h = find_key(key);
  if (h == nullptr) {
    std::string hint = nearest_key(key);
    std::string msg = origin + ": unknown config key '" + key + "'";
    if (!hint.empty()) msg += " (did you mean '" + hint + "'?)";
    fail(msg);
  }
  h->set(cfg, value, origin + ": " + key);
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin) {
  struct Entry {
    std::string key, value;
    std::size_t line;
  };
  std::vector<Entry> entries;
  std::set<std::string> seen;
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    require(eq != std::string::npos,
            origin + ":" + std::to_string(lineno) +
                ": expected 'key = value', got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    require(!key.empty(),
            origin + ":" + std::to_string(lineno) + ": empty key");
    require(seen.insert(key).second,
            origin + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                "'");
    entries.push_back({key, value, lineno});
  }

  // Method first so its defaults underlie the file's explicit values.
  Method m = Method::kSupervised;
  for (const Entry& e : entries)
    if (e.key == "method") m = method_from_string(e.value);
  ExperimentConfig cfg = ExperimentConfig::defaults_for(m);
  for (const Entry& e : entries)
    apply_config_value(cfg, e.key, e.value,
                       origin + ":" + std::to_string(e.line));
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string emit_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const KeyHandler& h : key_table())
    out += h.name + " = " + h.get(cfg) + "\n";
  return out;
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot open for writing: " + path);
  out << emit_config(cfg);
  require(static_cast<bool>(out), "config write failed: " + path);
}

}  // namespace sslab
