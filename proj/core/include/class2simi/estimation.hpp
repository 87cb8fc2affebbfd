#pragma once

#include <vector>

#include "class2simi/mlp.hpp"
#include "class2simi/transition.hpp"

namespace c2s {

/// Anchor-point estimate of the class transition matrix. `posteriors` holds
/// one noisy-class posterior per row (n x c, from a model fit to the noisy
/// labels). For each class i the anchor is the instance whose posterior for i
/// sits at the given percentile (nearest rank; 100 picks the maximum), and
/// row i of the estimate is that instance's full posterior. Rows are
/// renormalized before validation. If `anchor_rows` is non-null it receives
/// the chosen row index per class.
ClassTransitionMatrix estimate_tc_anchor(const Matrix& posteriors, double percentile = 97.0,
                                         std::vector<int>* anchor_rows = nullptr);

/// Same, but runs the model over a pool of instances first.
ClassTransitionMatrix estimate_tc_anchor(const MlpModel& model, const Matrix& x_pool,
                                         double percentile = 97.0,
                                         std::vector<int>* anchor_rows = nullptr);

/// Similarity transition matrix implied by an estimated class matrix.
SimilarityTransitionMatrix estimate_ts(const ClassTransitionMatrix& tc_hat,
                                       const ClassPrior& prior);

}  // namespace c2s
