#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sslab/rng.hpp"
#include "sslab/tensor.hpp"

namespace sslab {

/// Per-sample set of classes asserted NOT to be the true label.
/// Invariant: no row selects all classes.
struct NegativeLabelMask {
  std::size_t batch = 0;
  std::size_t num_classes = 0;
  std::vector<char> selected;  // batch * num_classes flags

  static NegativeLabelMask empty(std::size_t batch, std::size_t num_classes);

  bool at(std::size_t b, std::size_t k) const {
    return selected[b * num_classes + k] != 0;
  }
  void set(std::size_t b, std::size_t k, bool v = true) {
    selected[b * num_classes + k] = v ? 1 : 0;
  }
  std::size_t count(std::size_t b) const;
  std::size_t total() const;
  void validate() const;
};

/// Marks classes with predicted probability strictly below the threshold.
/// If a row would select every class, its argmax is deselected so the
/// negative set never covers all of them.
NegativeLabelMask threshold_mask(const Tensor& probs, double threshold);

/// P distinct classes per sample, uniform over all K (may hit the truth).
NegativeLabelMask uniform_mask(std::size_t batch, std::size_t num_classes,
                               std::size_t num_negatives, Rng& rng);

/// Labels copied from each sample's nearest labeled neighbour (Euclidean,
/// ties broken toward the lowest labeled index), then negatives drawn
/// uniformly from the excluded-class complement.
enum class NnVariant {
  kExcludeOne,   // exclude just the neighbour's class
  kExcludeFour,  // exclude the classes of the 4 nearest distinct-class hits
};
NegativeLabelMask nn_exclude_mask(const Tensor& unlabeled_x,
                                  const Tensor& labeled_x,
                                  const std::vector<int>& labeled_y,
                                  std::size_t num_classes,
                                  std::size_t num_negatives, NnVariant variant,
                                  Rng& rng);

/// Single negative per sample: the class whose nearest labeled example is
/// furthest away.
NegativeLabelMask furthest_class_mask(const Tensor& unlabeled_x,
                                      const Tensor& labeled_x,
                                      const std::vector<int>& labeled_y,
                                      std::size_t num_classes);

/// P distinct negatives drawn uniformly from the K-1 non-true classes.
/// A diagnostic upper bound; never wrong by construction.
NegativeLabelMask oracle_mask(const std::vector<int>& true_labels,
                              std::size_t num_classes,
                              std::size_t num_negatives, Rng& rng);

/// Fraction of selected negative labels that are actually the true class.
double negative_label_error_rate(const NegativeLabelMask& mask,
                                 const std::vector<int>& true_labels);

enum class NegStrategy {
  kThreshold,
  kUniform,
  kNnExclude1,
  kNnExclude4,
  kFurthest,
  kOracle,
};

std::string to_string(NegStrategy s);
NegStrategy neg_strategy_from_string(const std::string& s);

}  // namespace sslab
