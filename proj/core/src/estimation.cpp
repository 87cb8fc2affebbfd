#include "class2simi/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace c2s {

ClassTransitionMatrix estimate_tc_anchor(const Matrix& posteriors, double percentile,
                                         std::vector<int>* anchor_rows) {
  const int n = static_cast<int>(posteriors.rows());
  const int c = static_cast<int>(posteriors.cols());
  if (n < 1) {
    throw std::invalid_argument("anchor estimation needs at least one posterior row");
  }
  if (c < 2) {
    throw std::invalid_argument("anchor estimation needs at least 2 classes, got " +
                                std::to_string(c));
  }
  if (!(percentile > 0.0) || !(percentile <= 100.0)) {
    throw std::invalid_argument("percentile must lie in (0, 100], got " +
                                std::to_string(percentile));
  }
  if (!posteriors.allFinite() || posteriors.minCoeff() < 0.0) {
    throw std::invalid_argument("posterior matrix has negative or non-finite entries");
  }

  // Nearest-rank index into the ascending order: percentile 100 is the max.
  int rank = static_cast<int>(std::ceil(percentile / 100.0 * n)) - 1;
  rank = std::min(std::max(rank, 0), n - 1);

  if (anchor_rows != nullptr) {
    anchor_rows->assign(c, -1);
  }
  Matrix t(c, c);
  std::vector<int> order(n);
  for (int i = 0; i < c; ++i) {
    if (posteriors.col(i).maxCoeff() <= 0.0) {
      throw std::runtime_error("no anchor candidate for class " + std::to_string(i) +
                               ": every posterior for it is zero");
    }
    std::iota(order.begin(), order.end(), 0);
    // Ties broken by row index so the anchor is deterministic.
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double pa = posteriors(a, i);
      const double pb = posteriors(b, i);
      return pa != pb ? pa < pb : a < b;
    });
    const int anchor = order[rank];
    if (anchor_rows != nullptr) {
      (*anchor_rows)[i] = anchor;
    }
    const double row_sum = posteriors.row(anchor).sum();
    if (row_sum <= 0.0) {
      throw std::runtime_error("anchor row for class " + std::to_string(i) +
                               " sums to zero and cannot be normalized");
    }
    t.row(i) = posteriors.row(anchor) / row_sum;
  }
  return ClassTransitionMatrix(t);
}

ClassTransitionMatrix estimate_tc_anchor(const MlpModel& model, const Matrix& x_pool,
                                         double percentile, std::vector<int>* anchor_rows) {
  return estimate_tc_anchor(forward(model, x_pool), percentile, anchor_rows);
}

SimilarityTransitionMatrix estimate_ts(const ClassTransitionMatrix& tc_hat,
                                       const ClassPrior& prior) {
  return class2simi(tc_hat, prior);
}

}  // namespace c2s
