#include "sslab/negative_select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sslab/error.hpp"

namespace sslab {

namespace {

void check_geometry(const Tensor& unlabeled_x, const Tensor& labeled_x,
                    const std::vector<int>& labeled_y, std::size_t num_classes) {
  require(unlabeled_x.rank() == 2 && labeled_x.rank() == 2,
          "neighbour selection expects rank-2 feature matrices");
  require(unlabeled_x.cols() == labeled_x.cols(),
          "labeled/unlabeled feature dimensions differ");
  require(labeled_x.rows() == labeled_y.size(),
          "labeled feature/label counts differ");
  require(labeled_y.size() > 0, "neighbour selection needs labeled examples");
  for (int y : labeled_y)
    require(y >= 0 && static_cast<std::size_t>(y) < num_classes,
            "labeled class id out of range");
}

double sq_distance(const Tensor& a, std::size_t i, const Tensor& b,
                   std::size_t j) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.cols(); ++d) {
    double diff = a.at(i, d) - b.at(j, d);
    s += diff * diff;
  }
  return s;
}

/// P distinct picks from `pool`, partial Fisher-Yates on a local copy.
std::vector<std::size_t> sample_distinct(std::vector<std::size_t> pool,
                                         std::size_t p, Rng& rng) {
  require(p <= pool.size(), "cannot sample more distinct classes than exist");
  for (std::size_t i = 0; i < p; ++i) {
    std::size_t j = i + rng.uniform_index(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(p);
  return pool;
}

}  // namespace

NegativeLabelMask NegativeLabelMask::empty(std::size_t batch,
                                           std::size_t num_classes) {
  require(batch > 0 && num_classes >= 2,
          "mask needs a positive batch and at least 2 classes");
  NegativeLabelMask m;
  m.batch = batch;
  m.num_classes = num_classes;
  m.selected.assign(batch * num_classes, 0);
  return m;
}

std::size_t NegativeLabelMask::count(std::size_t b) const {
  std::size_t n = 0;
  for (std::size_t k = 0; k < num_classes; ++k)
    if (at(b, k)) ++n;
  return n;
}

std::size_t NegativeLabelMask::total() const {
  std::size_t n = 0;
  for (char c : selected)
    if (c) ++n;
  return n;
}

void NegativeLabelMask::validate() const {
  require(selected.size() == batch * num_classes, "mask storage size mismatch");
  for (std::size_t b = 0; b < batch; ++b)
    require(count(b) < num_classes,
            "negative set covers all classes in row " + std::to_string(b));
}

NegativeLabelMask threshold_mask(const Tensor& probs, double threshold) {
  require(probs.rank() == 2, "threshold_mask expects [batch, classes] probs");
  require(threshold > 0.0 && threshold < 1.0,
          "threshold must lie strictly inside (0, 1)");
  NegativeLabelMask m = NegativeLabelMask::empty(probs.rows(), probs.cols());
  for (std::size_t b = 0; b < probs.rows(); ++b) {
    std::size_t argmax = 0;
    std::size_t selected = 0;
    for (std::size_t k = 0; k < probs.cols(); ++k) {
      if (probs.at(b, k) > probs.at(b, argmax)) argmax = k;
      if (probs.at(b, k) < threshold) {
        m.set(b, k);
        ++selected;
      }
    }
    // A row whose probabilities all fall under the threshold would assert
    // that no class is correct; keep its most likely class positive.
    if (selected == probs.cols()) m.set(b, argmax, false);
  }
  m.validate();
  return m;
}

NegativeLabelMask uniform_mask(std::size_t batch, std::size_t num_classes,
                               std::size_t num_negatives, Rng& rng) {
  require(num_negatives >= 1 && num_negatives < num_classes,
          "uniform negatives per sample must lie in [1, classes)");
  NegativeLabelMask m = NegativeLabelMask::empty(batch, num_classes);
  std::vector<std::size_t> all(num_classes);
  for (std::size_t k = 0; k < num_classes; ++k) all[k] = k;
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t k : sample_distinct(all, num_negatives, rng)) m.set(b, k);
  m.validate();
  return m;
}

NegativeLabelMask nn_exclude_mask(const Tensor& unlabeled_x,
                                  const Tensor& labeled_x,
                                  const std::vector<int>& labeled_y,
                                  std::size_t num_classes,
                                  std::size_t num_negatives, NnVariant variant,
                                  Rng& rng) {
  check_geometry(unlabeled_x, labeled_x, labeled_y, num_classes);
  std::size_t batch = unlabeled_x.rows();
  NegativeLabelMask m = NegativeLabelMask::empty(batch, num_classes);

  for (std::size_t b = 0; b < batch; ++b) {
    // Labeled points by increasing distance; ties keep the lower index first.
    std::vector<std::size_t> order(labeled_x.rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> dist(order.size());
    for (std::size_t i = 0; i < order.size(); ++i)
      dist[i] = sq_distance(unlabeled_x, b, labeled_x, i);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return dist[i] < dist[j]; });

    std::vector<char> excluded(num_classes, 0);
    std::size_t want = variant == NnVariant::kExcludeOne ? 1 : 4;
    std::size_t have = 0;
    for (std::size_t i : order) {
      std::size_t cls = static_cast<std::size_t>(labeled_y[i]);
      if (!excluded[cls]) {
        excluded[cls] = 1;
        if (++have == want) break;
      }
    }
    std::vector<std::size_t> candidates;
    for (std::size_t k = 0; k < num_classes; ++k)
      if (!excluded[k]) candidates.push_back(k);
    require(!candidates.empty(),
            "neighbour exclusion removed every candidate class");
    require(num_negatives <= candidates.size(),
            "fewer candidate classes than requested negatives");
    for (std::size_t k : sample_distinct(candidates, num_negatives, rng))
      m.set(b, k);
  }
  m.validate();
  return m;
}

NegativeLabelMask furthest_class_mask(const Tensor& unlabeled_x,
                                      const Tensor& labeled_x,
                                      const std::vector<int>& labeled_y,
                                      std::size_t num_classes) {
  check_geometry(unlabeled_x, labeled_x, labeled_y, num_classes);
  std::size_t batch = unlabeled_x.rows();
  NegativeLabelMask m = NegativeLabelMask::empty(batch, num_classes);
  for (std::size_t b = 0; b < batch; ++b) {
    std::vector<double> nearest(num_classes,
                                std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < labeled_x.rows(); ++i) {
      std::size_t cls = static_cast<std::size_t>(labeled_y[i]);
      nearest[cls] = std::min(nearest[cls], sq_distance(unlabeled_x, b, labeled_x, i));
    }
    std::size_t pick = 0;
    bool found = false;
    for (std::size_t k = 0; k < num_classes; ++k) {
      if (!std::isfinite(nearest[k])) continue;  // class absent from labels
      if (!found || nearest[k] > nearest[pick]) {
        pick = k;
        found = true;
      }
    }
    require(found, "no labeled class available for furthest-class selection");
    m.set(b, pick);
  }
  m.validate();
  return m;
}

NegativeLabelMask oracle_mask(const std::vector<int>& true_labels,
                              std::size_t num_classes,
                              std::size_t num_negatives, Rng& rng) {
  require(!true_labels.empty(), "oracle mask needs labels");
  require(num_negatives >= 1 && num_negatives < num_classes,
          "oracle negatives per sample must lie in [1, classes)");
  NegativeLabelMask m = NegativeLabelMask::empty(true_labels.size(), num_classes);
  for (std::size_t b = 0; b < true_labels.size(); ++b) {
    int truth = true_labels[b];
    require(truth >= 0 && static_cast<std::size_t>(truth) < num_classes,
            "true class id out of range");
    std::vector<std::size_t> wrong;
    for (std::size_t k = 0; k < num_classes; ++k)
      if (k != static_cast<std::size_t>(truth)) wrong.push_back(k);
    for (std::size_t k : sample_distinct(wrong, num_negatives, rng)) m.set(b, k);
  }
  m.validate();
  return m;
}

double negative_label_error_rate(const NegativeLabelMask& mask,
                                 const std::vector<int>& true_labels) {
  require(true_labels.size() == mask.batch,
          "label count does not match mask batch");
  std::size_t selected = mask.total();
  if (selected == 0) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t b = 0; b < mask.batch; ++b)
    if (mask.at(b, static_cast<std::size_t>(true_labels[b]))) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(selected);
}

std::string to_string(NegStrategy s) {
  switch (s) {
    case NegStrategy::kThreshold: return "threshold";
    case NegStrategy::kUniform: return "uniform";
    case NegStrategy::kNnExclude1: return "nn_exclude_1";
    case NegStrategy::kNnExclude4: return "nn_exclude_4";
    case NegStrategy::kFurthest: return "furthest_class";
    case NegStrategy::kOracle: return "oracle";
  }
  return "?";
}

NegStrategy neg_strategy_from_string(const std::string& s) {
  if (s == "threshold") return NegStrategy::kThreshold;
  if (s == "uniform") return NegStrategy::kUniform;
  if (s == "nn_exclude_1") return NegStrategy::kNnExclude1;
  if (s == "nn_exclude_4") return NegStrategy::kNnExclude4;
  if (s == "furthest_class") return NegStrategy::kFurthest;
  if (s == "oracle") return NegStrategy::kOracle;
  fail("unknown negative selection strategy: " + s);
}

}  // namespace sslab
