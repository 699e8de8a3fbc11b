#include "doctest.h"
#include "sslab/error.hpp"
#include "sslab/negative_select.hpp"

using namespace sslab;

TEST_CASE("threshold mask marks strictly-below entries") {
  Tensor probs({2, 4}, {0.50, 0.30, 0.15, 0.05,
                        0.02, 0.90, 0.04, 0.04});
  NegativeLabelMask m = threshold_mask(probs, 0.05);
  CHECK(m.count(0) == 0);  // 0.05 is not strictly below 0.05
  CHECK(m.at(1, 0));
  CHECK(m.at(1, 2));
  CHECK(m.at(1, 3));
  CHECK_FALSE(m.at(1, 1));

  CHECK_THROWS_AS(threshold_mask(probs, 0.0), Error);
  CHECK_THROWS_AS(threshold_mask(probs, 1.0), Error);
}

TEST_CASE("threshold mask never selects every class") {
  // All probabilities below the threshold: the argmax must be released.
  Tensor probs({1, 4}, {0.28, 0.24, 0.24, 0.24});
  NegativeLabelMask m = threshold_mask(probs, 0.9);
  CHECK(m.count(0) == 3);
  CHECK_FALSE(m.at(0, 0));
}

TEST_CASE("mask validation rejects a full row") {
  NegativeLabelMask m = NegativeLabelMask::empty(1, 3);
  m.set(0, 0);
  m.set(0, 1);
  m.set(0, 2);
  CHECK_THROWS_WITH_AS(m.validate(), doctest::Contains("covers all classes"),
                       Error);
}

TEST_CASE("uniform mask selects exactly P distinct classes per row") {
  Rng rng(17);
  NegativeLabelMask m = uniform_mask(200, 6, 3, rng);
  for (std::size_t b = 0; b < m.batch; ++b) CHECK(m.count(b) == 3);

  // Marginal frequency of each class is P/K.
  std::vector<int> hits(6, 0);
  Rng rng2(18);
  NegativeLabelMask big = uniform_mask(3000, 6, 3, rng2);
  for (std::size_t b = 0; b < big.batch; ++b)
    for (std::size_t k = 0; k < 6; ++k)
      if (big.at(b, k)) ++hits[k];
  for (int h : hits) CHECK(h == doctest::Approx(1500).epsilon(0.08));

  Rng rng3(1);
  CHECK_THROWS_AS(uniform_mask(2, 4, 4, rng3), Error);
  CHECK_THROWS_AS(uniform_mask(2, 4, 0, rng3), Error);
}

TEST_CASE("oracle mask avoids the true class and P distinct others") {
  Rng rng(23);
  std::vector<int> truth(300);
  for (std::size_t i = 0; i < truth.size(); ++i)
    truth[i] = static_cast<int>(i % 5);
  NegativeLabelMask m = oracle_mask(truth, 5, 2, rng);
  for (std::size_t b = 0; b < m.batch; ++b) {
    CHECK(m.count(b) == 2);
    CHECK_FALSE(m.at(b, static_cast<std::size_t>(truth[b])));
  }
  CHECK(negative_label_error_rate(m, truth) == 0.0);
}

TEST_CASE("negative label error rate counts wrong selections") {
  NegativeLabelMask m = NegativeLabelMask::empty(2, 3);
  m.set(0, 0);  // true class of row 0
  m.set(0, 1);
  m.set(1, 2);  // not the true class of row 1
  std::vector<int> truth{0, 0};
  CHECK(negative_label_error_rate(m, truth) == doctest::Approx(1.0 / 3.0));
  NegativeLabelMask none = NegativeLabelMask::empty(2, 3);
  CHECK(negative_label_error_rate(none, truth) == 0.0);
}

TEST_CASE("nearest-neighbour exclusion copies the closest label") {
  // Labeled points: class 0 at x=0, class 1 at x=10, class 2 at x=20.
  Tensor lx({3, 1}, {0.0, 10.0, 20.0});
  std::vector<int> ly{0, 1, 2};
  Tensor ux({2, 1}, {1.0, 19.0});
  Rng rng(5);
  NegativeLabelMask m = nn_exclude_mask(ux, lx, ly, 3, 2, NnVariant::kExcludeOne, rng);
  // Sample 0's neighbour is class 0, so its negatives are exactly {1, 2}.
  CHECK_FALSE(m.at(0, 0));
  CHECK(m.at(0, 1));
  CHECK(m.at(0, 2));
  CHECK_FALSE(m.at(1, 2));
  CHECK(m.at(1, 0));
  CHECK(m.at(1, 1));
}

TEST_CASE("nearest-neighbour distance ties resolve to the lowest index") {
  Tensor lx({2, 1}, {1.0, -1.0});  // equidistant from the origin
  std::vector<int> ly{1, 0};
  Tensor ux({1, 1}, {0.0});
  Rng rng(5);
  NegativeLabelMask m =
      nn_exclude_mask(ux, lx, ly, 2, 1, NnVariant::kExcludeOne, rng);
  // Index 0 (class 1) wins the tie, so class 0 is the negative.
  CHECK(m.at(0, 0));
  CHECK_FALSE(m.at(0, 1));
}

TEST_CASE("exclude-four gathers four distinct nearby classes") {
  // Six classes along a line; the sample sits at 0.
  Tensor lx({6, 1}, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
  std::vector<int> ly{0, 1, 2, 3, 4, 5};
  Tensor ux({1, 1}, {0.0});
  Rng rng(9);
  NegativeLabelMask m =
      nn_exclude_mask(ux, lx, ly, 6, 2, NnVariant::kExcludeFour, rng);
  // Classes 0..3 are excluded; both negatives land in {4, 5}.
  CHECK(m.count(0) == 2);
  CHECK(m.at(0, 4));
  CHECK(m.at(0, 5));

  // Asking for more negatives than the complement holds must fail.
  Rng rng2(9);
  CHECK_THROWS_AS(nn_exclude_mask(ux, lx, ly, 6, 3, NnVariant::kExcludeFour, rng2),
                  Error);
}

TEST_CASE("furthest class mask picks the class with the largest min distance") {
  Tensor lx({4, 2}, {0.0, 0.0,
                     1.0, 0.0,
                     5.0, 0.0,
                     5.0, 1.0});
  std::vector<int> ly{0, 0, 1, 1};
  Tensor ux({1, 2}, {0.5, 0.0});
  NegativeLabelMask m = furthest_class_mask(ux, lx, ly, 2);
  CHECK(m.count(0) == 1);
  CHECK(m.at(0, 1));
}

TEST_CASE("strategy names round trip") {
  for (NegStrategy s :
       {NegStrategy::kThreshold, NegStrategy::kUniform, NegStrategy::kNnExclude1,
        NegStrategy::kNnExclude4, NegStrategy::kFurthest, NegStrategy::kOracle})
    CHECK(neg_strategy_from_string(to_string(s)) == s);
  CHECK_THROWS_AS(neg_strategy_from_string("nonsense"), Error);
}
