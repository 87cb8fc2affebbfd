#include "class2simi/pairing.hpp"

#include <stdexcept>

namespace c2s {

int similarity_label(int y_i, int y_j) { return y_i == y_j ? 1 : 0; }

PairBatch enumerate_pairs(const std::vector<int>& labels) {
  const int b = static_cast<int>(labels.size());
  if (b < 2) {
    throw std::invalid_argument("enumerate_pairs: need at least 2 labels, got " +
                                std::to_string(b));
  }
  PairBatch pb;
  pb.batch_size = b;
  const std::size_t count = static_cast<std::size_t>(b) * (b - 1) / 2;
  pb.pairs.reserve(count);
  pb.labels.reserve(count);
  for (int i = 0; i < b; ++i) {
    for (int j = i + 1; j < b; ++j) {
      pb.pairs.emplace_back(i, j);
      pb.labels.push_back(similarity_label(labels[i], labels[j]));
    }
  }
  return pb;
}

PairBalance pair_class_balance(const PairBatch& pb) {
  if (pb.pairs.empty()) {
    throw std::invalid_argument("pair_class_balance: empty pair batch");
  }
  long long similar = 0;
  for (int label : pb.labels) similar += label;
  return PairBalance{static_cast<double>(similar) / static_cast<double>(pb.labels.size())};
}

}  // namespace c2s
