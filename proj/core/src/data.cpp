#include "sslab/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sslab/error.hpp"

namespace sslab {

namespace {

void fisher_yates(std::vector<std::size_t>& v, Rng& rng) {
  if (v.size() < 2) return;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    std::size_t j = i + rng.uniform_index(v.size() - i);
    std::swap(v[i], v[j]);
  }
}

std::vector<std::size_t> iota_positions(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

void Dataset::validate() const {
  require(features.rank() == 2, "dataset features must be [n, dim]");
  require(features.rows() == labels.size(),
          "dataset feature/label counts differ");
  require(num_classes >= 2, "dataset needs at least 2 classes");
  for (int y : labels)
    require(y >= 0 && static_cast<std::size_t>(y) < num_classes,
            "dataset label out of range");
}

void SslSplit::validate(const Dataset& data) const {
  require(!labeled.empty(), "split has no labeled examples");
  require(!unlabeled.empty(), "split has no unlabeled examples");
  std::vector<char> seen(data.size(), 0);
  auto mark = [&](const std::vector<std::size_t>& part, const char* name) {
    for (std::size_t i : part) {
      require(i < data.size(), std::string(name) + " index out of range");
      require(!seen[i], "split parts overlap at index " + std::to_string(i));
      seen[i] = 1;
    }
  };
  mark(labeled, "labeled");
  mark(unlabeled, "unlabeled");
  mark(validation, "validation");
  mark(test, "test");
}

SslBatch::SslBatch(Tensor xl, std::vector<int> yl, Tensor xu,
                   std::vector<std::size_t> rows, std::vector<int> hidden)
    : x_labeled(std::move(xl)),
      y_labeled(std::move(yl)),
      x_unlabeled(std::move(xu)),
      unlabeled_rows(std::move(rows)),
      hidden_(std::move(hidden)) {
  require(x_labeled.rows() == y_labeled.size(), "batch labeled sizes differ");
  require(x_unlabeled.rows() == unlabeled_rows.size() &&
              x_unlabeled.rows() == hidden_.size(),
          "batch unlabeled sizes differ");
  require(x_labeled.cols() == x_unlabeled.cols(),
          "batch labeled/unlabeled dims differ");
}

Toy1dData gen_toy_1d(std::size_t n_labeled, std::size_t n_unlabeled,
                     double bias, Rng& rng) {
  require(n_labeled >= 2, "toy problem needs at least 2 labeled points");
  require(n_unlabeled >= 1, "toy problem needs unlabeled points");
  require(bias >= 0.0 && bias < 1.0, "toy bias must lie in [0, 1)");

  std::size_t n_left = n_labeled / 2 + n_labeled % 2;  // class 1, x < 0
  std::size_t n_right = n_labeled / 2;                 // class 0, x > 0
  std::size_t n_eval = std::max<std::size_t>(50, n_unlabeled / 10);
  std::size_t total = n_labeled + n_unlabeled + 2 * n_eval;

  Tensor x = Tensor::zeros(total, 1);
  std::vector<int> y(total);
  std::size_t row = 0;
  for (std::size_t i = 0; i < n_left; ++i, ++row) {
    x.at(row, 0) = rng.uniform(-1.0, -bias);
    y[row] = 1;
  }
  for (std::size_t i = 0; i < n_right; ++i, ++row) {
    x.at(row, 0) = rng.uniform(0.0, 1.0);
    y[row] = 0;
  }
  for (std::size_t i = 0; i < n_unlabeled + 2 * n_eval; ++i, ++row) {
    double v = rng.uniform(-1.0, 1.0);
    x.at(row, 0) = v;
    y[row] = v < 0.0 ? 1 : 0;
  }

  Toy1dData toy;
  toy.data = Dataset{std::move(x), std::move(y), 2};
  toy.true_boundary = 0.0;
  std::size_t at = 0;
  auto take = [&](std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = at++;
    return idx;
  };
  toy.split.labeled = take(n_labeled);
  toy.split.unlabeled = take(n_unlabeled);
  toy.split.validation = take(n_eval);
  toy.split.test = take(n_eval);
  toy.data.validate();
  toy.split.validate(toy.data);
  return toy;
}

Dataset gen_blobs(std::size_t num_classes, std::size_t per_class,
                  std::size_t dim, double spread, Rng& rng) {
  require(num_classes >= 2, "blobs need at least 2 classes");
  require(per_class >= 1, "blobs need at least 1 point per class");
  require(spread > 0.0, "blob spread must be positive");
  require(dim >= num_classes - 1,
          "feature dimension too small to embed " +
              std::to_string(num_classes) + " unit-separated centroids");

  // Regular simplex with unit edge: vertices e_c / sqrt(2) in R^K, centered,
  // then expressed in an orthonormal basis of the sum-zero hyperplane.
  std::size_t k = num_classes;
  std::vector<std::vector<double>> vertex(k, std::vector<double>(k, 0.0));
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (std::size_t c = 0; c < k; ++c) vertex[c][c] = inv_sqrt2;
  for (std::size_t j = 0; j < k; ++j) {
    double mean = inv_sqrt2 / static_cast<double>(k);
    for (std::size_t c = 0; c < k; ++c) vertex[c][j] -= mean;
  }
  // Gram-Schmidt over (e_j - e_{K-1}) spans the hyperplane.
  std::vector<std::vector<double>> basis;
  for (std::size_t j = 0; j + 1 < k; ++j) {
    std::vector<double> v(k, 0.0);
    v[j] = 1.0;
    v[k - 1] = -1.0;
    for (const auto& b : basis) {
      double dot = 0.0;
      for (std::size_t i = 0; i < k; ++i) dot += v[i] * b[i];
      for (std::size_t i = 0; i < k; ++i) v[i] -= dot * b[i];
    }
    double norm = 0.0;
    for (double vi : v) norm += vi * vi;
    norm = std::sqrt(norm);
    require(norm > 1e-12, "degenerate simplex basis");
    for (double& vi : v) vi /= norm;
    basis.push_back(std::move(v));
  }
  std::vector<std::vector<double>> centroid(k, std::vector<double>(k - 1, 0.0));
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j + 1 < k; ++j) {
      double dot = 0.0;
      for (std::size_t i = 0; i < k; ++i) dot += vertex[c][i] * basis[j][i];
      centroid[c][j] = dot;
    }

  std::size_t n = num_classes * per_class;
  Tensor x = Tensor::zeros(n, dim);
  std::vector<int> y(n);
  std::size_t row = 0;
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t i = 0; i < per_class; ++i, ++row) {
      y[row] = static_cast<int>(c);
      for (std::size_t j = 0; j < dim; ++j) {
        double center = j < k - 1 ? centroid[c][j] : 0.0;
        x.at(row, j) = center + rng.normal(0.0, spread);
      }
    }

  Dataset data{std::move(x), std::move(y), num_classes};
  data.validate();
  return data;
}

Dataset load_csv_dataset(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open dataset: " + path);
  std::vector<double> feats;
  std::vector<int> labels;
  std::size_t dim = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    require(fields.size() >= 2, path + ":" + std::to_string(lineno) +
                                    ": expected label and at least 1 feature");
    std::size_t pos = 0;
    int label = 0;
    try {
      label = std::stoi(fields[0], &pos);
    } catch (const std::exception&) {
      fail(path + ":" + std::to_string(lineno) + ": cannot parse label '" +
           fields[0] + "'");
    }
    require(pos == fields[0].size() && label >= 0,
            path + ":" + std::to_string(lineno) + ": cannot parse label '" +
                fields[0] + "'");
    if (dim == 0) dim = fields.size() - 1;
    require(fields.size() - 1 == dim,
            path + ":" + std::to_string(lineno) + ": expected " +
                std::to_string(dim) + " features, got " +
                std::to_string(fields.size() - 1));
    labels.push_back(label);
    for (std::size_t j = 1; j < fields.size(); ++j) {
      std::size_t fpos = 0;
      double v = 0.0;
      try {
        v = std::stod(fields[j], &fpos);
      } catch (const std::exception&) {
        fail(path + ":" + std::to_string(lineno) + ": cannot parse feature '" +
             fields[j] + "'");
      }
      require(fpos == fields[j].size(), path + ":" + std::to_string(lineno) +
                                            ": cannot parse feature '" +
                                            fields[j] + "'");
      feats.push_back(v);
    }
  }
  require(!labels.empty(), path + ": dataset is empty");
  int max_label = *std::max_element(labels.begin(), labels.end());
  Dataset data{Tensor({labels.size(), dim}, std::move(feats)), std::move(labels),
               static_cast<std::size_t>(max_label) + 1};
  require(data.num_classes >= 2, path + ": needs at least 2 distinct classes");
  data.validate();
  return data;
}

void save_csv_dataset(const Dataset& data, const std::string& path) {
  data.validate();
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot open for writing: " + path);
  char buf[64];
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.labels[i];
    for (std::size_t j = 0; j < data.dim(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", data.features.at(i, j));
      out << ',' << buf;
    }
    out << '\n';
  }
  require(static_cast<bool>(out), "dataset write failed: " + path);
}

SslSplit split_labeled_unlabeled(const Dataset& data, std::size_t n_labeled,
                                 std::uint64_t seed) {
  data.validate();
  require(n_labeled >= data.num_classes,
          "need at least one labeled example per class");

  std::vector<std::vector<std::size_t>> by_class(data.num_classes);
  for (std::size_t i = 0; i < data.size(); ++i)
    by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);

  // Per-class labeled quota: equal share, remainder to the lowest class ids.
  std::vector<std::size_t> quota(data.num_classes,
                                 n_labeled / data.num_classes);
  for (std::size_t c = 0; c < n_labeled % data.num_classes; ++c) ++quota[c];

  Rng rng(seed);
  SslSplit split;
  for (std::size_t c = 0; c < data.num_classes; ++c) {
    auto& idx = by_class[c];
    require(!idx.empty(),
            "class " + std::to_string(c) + " has no examples to split");
    fisher_yates(idx, rng);
    std::size_t n_test = idx.size() / 10;
    std::size_t n_val = idx.size() / 10;
    require(idx.size() >= n_test + n_val + quota[c] &&
                idx.size() - n_test - n_val - quota[c] >= 1,
            "class " + std::to_string(c) +
                " is too small for the requested labeled count");
    std::size_t at = 0;
    for (std::size_t i = 0; i < n_test; ++i) split.test.push_back(idx[at++]);
    for (std::size_t i = 0; i < n_val; ++i)
      split.validation.push_back(idx[at++]);
    for (std::size_t i = 0; i < quota[c]; ++i)
      split.labeled.push_back(idx[at++]);
    while (at < idx.size()) split.unlabeled.push_back(idx[at++]);
  }
  split.validate(data);
  return split;
}

Tensor gather_rows(const Tensor& features, const std::vector<std::size_t>& rows) {
  require(!rows.empty(), "gather_rows of empty index list");
  Tensor out = Tensor::zeros(rows.size(), features.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] < features.rows(), "gather_rows index out of range");
    for (std::size_t j = 0; j < features.cols(); ++j)
      out.at(i, j) = features.at(rows[i], j);
  }
  return out;
}

std::vector<int> gather_labels(const std::vector<int>& labels,
                               const std::vector<std::size_t>& rows) {
  std::vector<int> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] < labels.size(), "gather_labels index out of range");
    out[i] = labels[rows[i]];
  }
  return out;
}

BatchSampler::BatchSampler(const Dataset& data, const SslSplit& split)
    : data_(&data), split_(&split) {
  split.validate(data);
}

std::size_t BatchSampler::draw(std::vector<std::size_t>& order,
                               std::size_t& cursor,
                               const std::vector<std::size_t>& source,
                               Rng& rng) {
  if (cursor >= order.size()) {
    order = iota_positions(source.size());
    fisher_yates(order, rng);
    cursor = 0;
  }
  return order[cursor++];
}

SslBatch BatchSampler::next(std::size_t b1, std::size_t b2, Rng& rng) {
  require(b1 >= 1 && b2 >= 1, "batch sizes must be positive");
  std::vector<std::size_t> lab_rows(b1), unlab_pos(b2), unlab_rows(b2);
  for (std::size_t i = 0; i < b1; ++i) {
    std::size_t pos = draw(labeled_order_, labeled_cursor_, split_->labeled, rng);
    lab_rows[i] = split_->labeled[pos];
  }
  for (std::size_t i = 0; i < b2; ++i) {
    std::size_t pos =
        draw(unlabeled_order_, unlabeled_cursor_, split_->unlabeled, rng);
    unlab_pos[i] = pos;
    unlab_rows[i] = split_->unlabeled[pos];
  }
  return SslBatch(gather_rows(data_->features, lab_rows),
                  gather_labels(data_->labels, lab_rows),
                  gather_rows(data_->features, unlab_rows),
                  std::move(unlab_pos),
                  gather_labels(data_->labels, unlab_rows));
}

}  // namespace sslab
