#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <vector>

#include "doctest.h"
#include "sslab/data.hpp"
#include "sslab/error.hpp"

using namespace sslab;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path(name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

std::set<std::size_t> as_set(const std::vector<std::size_t>& v) {
  return {v.begin(), v.end()};
}

}  // namespace

TEST_CASE("one-dimensional toy data geometry") {
  Rng rng(3);
  Toy1dData toy = gen_toy_1d(21, 200, 0.6, rng);
  toy.data.validate();
  toy.split.validate(toy.data);
  CHECK(toy.true_boundary == 0.0);
  CHECK(toy.data.num_classes == 2);
  CHECK(toy.data.dim() == 1);

  CHECK(toy.split.labeled.size() == 21);
  CHECK(toy.split.unlabeled.size() == 200);
  CHECK(toy.split.validation.size() == 50);
  CHECK(toy.split.test.size() == 50);

  std::size_t n_left = 0;
  for (std::size_t idx : toy.split.labeled) {
    double x = toy.data.features.at(idx, 0);
    int y = toy.data.labels[idx];
    if (y == 1) {
      ++n_left;
      CHECK(x >= -1.0);
      CHECK(x <= -0.6);  // labeled negatives sit far from the boundary
    } else {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
  }
  CHECK(n_left == 11);  // odd count rounds toward class 1

  for (std::size_t idx : toy.split.unlabeled) {
    double x = toy.data.features.at(idx, 0);
    CHECK(x >= -1.0);
    CHECK(x <= 1.0);
    CHECK(toy.data.labels[idx] == (x < 0.0 ? 1 : 0));
  }

  Rng rng2(3);
  Toy1dData again = gen_toy_1d(21, 200, 0.6, rng2);
  CHECK(again.data.features.values() == toy.data.features.values());
}

TEST_CASE("blob centroids sit one unit apart") {
  Rng rng(5);
  std::size_t K = 4, per = 200, dim = 6;
  Dataset blobs = gen_blobs(K, per, dim, 0.001, rng);
  CHECK(blobs.size() == K * per);
  CHECK(blobs.num_classes == K);

  // With near-zero spread the class means recover the centroids.
  std::vector<std::vector<double>> mean(K, std::vector<double>(dim, 0.0));
  std::vector<std::size_t> count(K, 0);
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    int c = blobs.labels[i];
    ++count[static_cast<std::size_t>(c)];
    for (std::size_t j = 0; j < dim; ++j)
      mean[static_cast<std::size_t>(c)][j] += blobs.features.at(i, j);
  }
  for (std::size_t c = 0; c < K; ++c) {
    CHECK(count[c] == per);
    for (double& v : mean[c]) v /= static_cast<double>(per);
  }
  for (std::size_t a = 0; a < K; ++a)
    for (std::size_t b = a + 1; b < K; ++b) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        double d = mean[a][j] - mean[b][j];
        d2 += d * d;
      }
      CHECK(std::sqrt(d2) == doctest::Approx(1.0).epsilon(0.01));
    }

  // Dimensions beyond K-1 carry no class signal.
  for (std::size_t c = 0; c < K; ++c)
    for (std::size_t j = K - 1; j < dim; ++j)
      CHECK(std::abs(mean[c][j]) < 0.01);

  Rng rng2(6);
  CHECK_THROWS_WITH_AS(gen_blobs(4, 10, 2, 0.1, rng2),
                       doctest::Contains("dimension"), Error);
}

TEST_CASE("csv round trip preserves every value") {
  Rng rng(7);
  Dataset blobs = gen_blobs(3, 20, 4, 0.5, rng);
  TempFile tmp("test_tmp_roundtrip.csv");
  save_csv_dataset(blobs, tmp.path);
  Dataset back = load_csv_dataset(tmp.path);
  CHECK(back.num_classes == 3);
  CHECK(back.labels == blobs.labels);
  REQUIRE(back.features.same_shape(blobs.features));
  for (std::size_t i = 0; i < back.features.numel(); ++i)
    CHECK(back.features[i] == blobs.features[i]);
}

TEST_CASE("csv parse errors carry line numbers") {
  TempFile tmp("test_tmp_bad.csv");
  {
    std::ofstream out(tmp.path);
    out << "0,1.5,2.5\n";
    out << "x,1.0,2.0\n";
  }
  CHECK_THROWS_WITH_AS(load_csv_dataset(tmp.path), doctest::Contains(":2:"),
                       Error);

  TempFile tmp2("test_tmp_bad2.csv");
  {
    std::ofstream out(tmp2.path);
    out << "0,1.5,2.5\n";
    out << "1,1.0\n";
  }
  CHECK_THROWS_AS(load_csv_dataset(tmp2.path), Error);

  CHECK_THROWS_AS(load_csv_dataset("definitely_missing_file.csv"), Error);
}

TEST_CASE("stratified split with the reference sizes") {
  Rng rng(11);
  Dataset blobs = gen_blobs(4, 631, 8, 0.45, rng);
  SslSplit split = split_labeled_unlabeled(blobs, 20, 17);
  split.validate(blobs);

  CHECK(split.labeled.size() == 20);
  CHECK(split.validation.size() == 252);  // 63 per class
  CHECK(split.test.size() == 252);
  CHECK(split.unlabeled.size() == 2000);

  // Labeled examples are stratified: 5 per class.
  std::vector<std::size_t> per_class(4, 0);
  for (std::size_t idx : split.labeled)
    ++per_class[static_cast<std::size_t>(blobs.labels[idx])];
  for (std::size_t c = 0; c < 4; ++c) CHECK(per_class[c] == 5);

  // The four slices are disjoint and cover the dataset.
  std::set<std::size_t> all;
  for (const auto* part :
       {&split.labeled, &split.unlabeled, &split.validation, &split.test}) {
    std::set<std::size_t> s = as_set(*part);
    CHECK(s.size() == part->size());
    all.insert(s.begin(), s.end());
  }
  CHECK(all.size() == blobs.size());

  // Same seed, same split; different seed, different split.
  SslSplit split2 = split_labeled_unlabeled(blobs, 20, 17);
  CHECK(split2.labeled == split.labeled);
  CHECK(split2.unlabeled == split.unlabeled);
  SslSplit split3 = split_labeled_unlabeled(blobs, 20, 18);
  CHECK(split3.labeled != split.labeled);

  CHECK_THROWS_AS(split_labeled_unlabeled(blobs, 2524, 17), Error);
}

TEST_CASE("gather utilities") {
  Tensor f({3, 2}, {0.0, 1.0, 2.0, 3.0, 4.0, 5.0});
  Tensor g = gather_rows(f, {2, 0});
  CHECK(g.rows() == 2);
  CHECK(g.at(0, 0) == 4.0);
  CHECK(g.at(1, 1) == 1.0);
  std::vector<int> labels{7, 8, 9};
  CHECK(gather_labels(labels, {2, 0}) == std::vector<int>{9, 7});
}

TEST_CASE("batch sampler draws consistent rows and covers epochs") {
  // Unique feature per row so draws can be traced back.
  std::vector<double> feats;
  std::vector<int> labels;
  for (int i = 0; i < 12; ++i) {
    feats.push_back(static_cast<double>(i));
    feats.push_back(static_cast<double>(i * i));
    labels.push_back(i % 2);
  }
  Dataset data{Tensor({12, 2}, feats), labels, 2};
  SslSplit split;
  split.labeled = {0, 1, 2, 3};
  split.unlabeled = {4, 5, 6, 7, 8, 9};
  split.validation = {10};
  split.test = {11};
  split.validate(data);

  BatchSampler sampler(data, split);
  Rng rng(19);
  std::set<double> labeled_seen;
  for (int b = 0; b < 2; ++b) {
    SslBatch batch = sampler.next(2, 3, rng);
    CHECK(batch.b1() == 2);
    CHECK(batch.b2() == 3);
    for (std::size_t i = 0; i < batch.b1(); ++i)
      labeled_seen.insert(batch.x_labeled.at(i, 0));
    for (std::size_t i = 0; i < batch.b2(); ++i) {
      std::size_t pos = batch.unlabeled_rows[i];
      REQUIRE(pos < split.unlabeled.size());
      std::size_t row = split.unlabeled[pos];
      CHECK(batch.x_unlabeled.at(i, 0) == data.features.at(row, 0));
      CHECK(batch.diagnostic_true_labels()[i] == data.labels[row]);
    }
    // Labels ride along with their features.
    for (std::size_t i = 0; i < batch.b1(); ++i) {
      auto row = static_cast<std::size_t>(batch.x_labeled.at(i, 0));
      CHECK(batch.y_labeled[i] == data.labels[row]);
    }
  }
  // Two batches of 2 from 4 labeled rows exhaust one shuffled epoch.
  CHECK(labeled_seen == std::set<double>{0.0, 1.0, 2.0, 3.0});
}

TEST_CASE("dataset and split validation reject corrupt inputs") {
  Dataset bad{Tensor({2, 1}, {0.0, 1.0}), {0, 5}, 2};
  CHECK_THROWS_AS(bad.validate(), Error);

  Dataset ok{Tensor({2, 1}, {0.0, 1.0}), {0, 1}, 2};
  ok.validate();
  SslSplit overlap;
  overlap.labeled = {0};
  overlap.unlabeled = {0};
  overlap.validation = {1};
  overlap.test = {1};
  CHECK_THROWS_AS(overlap.validate(ok), Error);
}
