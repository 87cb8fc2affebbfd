#pragma once

#include <utility>
#include <vector>

namespace c2s {

/// All unordered index pairs of a minibatch with their similarity labels.
struct PairBatch {
  std::vector<std::pair<int, int>> pairs;  // i < j, lexicographic order
  std::vector<int> labels;                 // 1 = same class label, 0 = different
  int batch_size = 0;
};

/// 1 when the two class labels coincide, else 0.
int similarity_label(int y_i, int y_j);

/// Enumerates every unordered pair (i, j), i < j, of a batch of class labels
/// and derives their similarity labels. Requires at least 2 labels.
PairBatch enumerate_pairs(const std::vector<int>& labels);

struct PairBalance {
  double similar_fraction = 0.0;
};

/// Fraction of similar pairs in the batch; near 1/c for balanced classes.
PairBalance pair_class_balance(const PairBatch& pb);

}  // namespace c2s
