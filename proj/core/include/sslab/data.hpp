#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sslab/rng.hpp"
#include "sslab/tensor.hpp"

namespace sslab {

/// Fully labeled dataset; semi-supervised experiments hide labels through an
/// SslSplit rather than by erasing them.
struct Dataset {
  Tensor features;  // [n, dim]
  std::vector<int> labels;
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }
  void validate() const;
};

/// Index partition of a dataset: a small labeled set, an unlabeled pool whose
/// labels are hidden from training, and held-out validation/test slices.
struct SslSplit {
  std::vector<std::size_t> labeled;
  std::vector<std::size_t> unlabeled;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;

  void validate(const Dataset& data) const;
};

/// One optimization step's worth of data.  True labels of the unlabeled half
/// ride along for diagnostics only; no training path reads them.
class SslBatch {
 public:
  Tensor x_labeled;               // [B1, dim]
  std::vector<int> y_labeled;     // B1
  Tensor x_unlabeled;             // [B2, dim]
  std::vector<std::size_t> unlabeled_rows;  // positions within the pool

  SslBatch() = default;
  SslBatch(Tensor xl, std::vector<int> yl, Tensor xu,
           std::vector<std::size_t> rows, std::vector<int> hidden);

  std::size_t b1() const { return y_labeled.size(); }
  std::size_t b2() const { return x_unlabeled.rows(); }

  /// For negative-label error-rate reporting and oracle selection only.
  const std::vector<int>& diagnostic_true_labels() const { return hidden_; }

 private:
  std::vector<int> hidden_;
};

struct Toy1dData {
  Dataset data;
  SslSplit split;
  double true_boundary = 0.0;
};

/// One-dimensional two-class problem with the true boundary at x = 0.
/// Class 1 occupies x < 0, class 0 occupies x > 0.  The labeled sample is
/// biased: labeled class-1 points are drawn from U(-1, -bias) so that they
/// sit far from the boundary, while labeled class-0 points cover U(0, 1).
/// The unlabeled pool and the held-out slices are drawn from U(-1, 1).
Toy1dData gen_toy_1d(std::size_t n_labeled, std::size_t n_unlabeled,
                     double bias, Rng& rng);

/// Gaussian blobs with unit pairwise centroid separation.  Centroids sit at
/// the vertices of a regular simplex embedded in the first K-1 feature
/// dimensions; remaining dimensions carry pure noise.
Dataset gen_blobs(std::size_t num_classes, std::size_t per_class,
                  std::size_t dim, double spread, Rng& rng);

/// CSV rows "label,f0,f1,...".  Parse errors report 1-based line numbers.
Dataset load_csv_dataset(const std::string& path);
void save_csv_dataset(const Dataset& data, const std::string& path);

/// Stratified split: ~10% validation and ~10% test (proportional per class),
/// n_labeled labeled examples (also stratified), remainder unlabeled pool.
SslSplit split_labeled_unlabeled(const Dataset& data, std::size_t n_labeled,
                                 std::uint64_t seed);

Tensor gather_rows(const Tensor& features, const std::vector<std::size_t>& rows);
std::vector<int> gather_labels(const std::vector<int>& labels,
                               const std::vector<std::size_t>& rows);

/// Draws labeled and unlabeled minibatches by cycling shuffled epochs over
/// each index list; reshuffles whenever a list is exhausted.
class BatchSampler {
 public:
  BatchSampler(const Dataset& data, const SslSplit& split);

  SslBatch next(std::size_t b1, std::size_t b2, Rng& rng);

 private:
  std::size_t draw(std::vector<std::size_t>& order, std::size_t& cursor,
                   const std::vector<std::size_t>& source, Rng& rng);

  const Dataset* data_;
  const SslSplit* split_;
  std::vector<std::size_t> labeled_order_;
  std::vector<std::size_t> unlabeled_order_;
  std::size_t labeled_cursor_ = 0;
  std::size_t unlabeled_cursor_ = 0;
};

}  // namespace sslab
