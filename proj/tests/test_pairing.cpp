#include <doctest.h>

#include <vector>

#include "class2simi/dataset.hpp"
#include "class2simi/pairing.hpp"
#include "class2simi/transition.hpp"

using namespace c2s;

TEST_CASE("similarity label") {
  CHECK(similarity_label(3, 3) == 1);
  CHECK(similarity_label(3, 4) == 0);
}

TEST_CASE("pair enumeration of a small batch") {
  const PairBatch pb = enumerate_pairs({0, 1, 0});
  REQUIRE(pb.pairs.size() == 3);
  CHECK(pb.pairs[0] == std::pair<int, int>{0, 1});
  CHECK(pb.pairs[1] == std::pair<int, int>{0, 2});
  CHECK(pb.pairs[2] == std::pair<int, int>{1, 2});
  CHECK(pb.labels == std::vector<int>{0, 1, 0});
  CHECK(pb.batch_size == 3);
}

TEST_CASE("pair count is n choose 2") {
  std::vector<int> labels(64, 0);
  for (int i = 0; i < 64; ++i) labels[i] = i % 7;
  const PairBatch pb = enumerate_pairs(labels);
  CHECK(pb.pairs.size() == 2016);
  for (std::size_t k = 0; k < pb.pairs.size(); ++k) {
    const auto [i, j] = pb.pairs[k];
    CHECK(i < j);  // no self pairs, upper triangle only
    CHECK(pb.labels[k] == (labels[i] == labels[j] ? 1 : 0));
  }
}

TEST_CASE("pair enumeration rejects tiny batches") {
  CHECK_THROWS_AS(enumerate_pairs({}), std::invalid_argument);
  CHECK_THROWS_AS(enumerate_pairs({1}), std::invalid_argument);
}

TEST_CASE("pair class balance") {
  CHECK(pair_class_balance(enumerate_pairs({2, 2, 2, 2})).similar_fraction == 1.0);
  CHECK(pair_class_balance(enumerate_pairs({0, 1, 2, 3})).similar_fraction == 0.0);

  std::vector<int> balanced;
  for (int k = 0; k < 10; ++k) balanced.insert(balanced.end(), 100, k);
  const double frac = pair_class_balance(enumerate_pairs(balanced)).similar_fraction;
  // 10 * C(100,2) / C(1000,2) = 49500 / 499500
  CHECK(frac == doctest::Approx(49500.0 / 499500.0).epsilon(1e-12));
  CHECK(frac < 0.11);
}

TEST_CASE("pairwise disagreement equals the similarity noise rate") {
  LabeledDataset ds = generate_blobs(6, 30, 3, 5.0, 1.0, 4);
  ds = corrupt_labels(ds, make_symmetric(6, 0.3), 8);

  const PairBatch clean = enumerate_pairs(*ds.clean_labels);
  const PairBatch noisy = enumerate_pairs(*ds.noisy_labels);
  REQUIRE(clean.pairs.size() == noisy.pairs.size());
  int disagreements = 0;
  for (std::size_t k = 0; k < clean.pairs.size(); ++k) {
    CHECK(clean.pairs[k] == noisy.pairs[k]);
    if (clean.labels[k] != noisy.labels[k]) ++disagreements;
  }
  const double direct = static_cast<double>(disagreements) / clean.pairs.size();
  // max_pairs above the pair count forces full enumeration in both paths
  CHECK(empirical_simi_noise_rate(ds, 1 << 20, 0) == direct);
}
