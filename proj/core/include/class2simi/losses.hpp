#pragma once

#include <vector>

#include "class2simi/mlp.hpp"
#include "class2simi/pairing.hpp"
#include "class2simi/transition.hpp"

namespace c2s {

// Clamp bound for importance weights; guards a near-singular similarity
// transition matrix.
inline constexpr double kDefaultWeightClamp = 10.0;

/// Predicted probability that two instances share a class: the inner product
/// of their predicted class distributions.
double pairwise_similarity(const Eigen::Ref<const Vector>& p_i,
                           const Eigen::Ref<const Vector>& p_j);

/// Predicted probability of OBSERVING a similar pair, given the predicted
/// clean similarity: T_s01 * (1 - S) + T_s11 * S.
double noisy_similarity(double s_hat, const SimilarityTransitionMatrix& ts);

// ---------------------------------------------------------------------------
// Loss values. Each takes the softmax outputs of a batch (b x c, rows are
// distributions) and returns the MEAN loss over the batch or pair set. The
// clamp epsilon bounds every log argument away from 0 (and 1 where needed).
// ---------------------------------------------------------------------------

/// Mean categorical cross-entropy against (noisy) class labels.
double loss_ce(const Matrix& probs, const std::vector<int>& labels, double eps);

/// Cross-entropy on the transition-corrected posterior q = Tc^T f(x); fits
/// noisy labels while f estimates the clean posterior.
double loss_forward_pointwise(const Matrix& probs, const std::vector<int>& noisy_labels,
                              const ClassTransitionMatrix& tc, double eps);

/// Importance-reweighted cross-entropy on the clean head: each instance is
/// weighted by P(Y = noisy | x) / P(noisy label | x), clamped to [0, w_max].
double loss_reweight_pointwise(const Matrix& probs, const std::vector<int>& noisy_labels,
                               const ClassTransitionMatrix& tc, double eps,
                               double w_max = kDefaultWeightClamp);

/// Forward-corrected pairwise loss: mean binary cross-entropy between the
/// observed similarity labels and the corrected posterior noisy_similarity(S).
double loss_c2s(const PairBatch& pb, const Matrix& probs,
                const SimilarityTransitionMatrix& ts, double eps);

/// Reweighted pairwise variant: BCE on the CLEAN similarity head, each pair
/// weighted by P(clean sim = observed) / P(observed sim = observed), weights
/// clamped to [0, w_max] and excluded from the gradient. Requires a learnable
/// similarity matrix (T_s00 + T_s11 > 1).
double loss_r_class2simi(const PairBatch& pb, const Matrix& probs,
                         const SimilarityTransitionMatrix& ts, double eps,
                         double w_max = kDefaultWeightClamp);

// Frozen-weight forms of the reweighted losses. The importance weights are
// treated as constants by the gradients, so the differentiable object is the
// loss at fixed weights; these split the weight computation out so that tests
// can difference exactly the function the gradient claims to differentiate.
Vector reweight_pointwise_weights(const Matrix& probs, const std::vector<int>& noisy_labels,
                                  const ClassTransitionMatrix& tc, double eps,
                                  double w_max = kDefaultWeightClamp);
double loss_reweight_pointwise_frozen(const Matrix& probs,
                                      const std::vector<int>& noisy_labels,
                                      const Vector& weights, double eps);
Vector r_class2simi_weights(const PairBatch& pb, const Matrix& probs,
                            const SimilarityTransitionMatrix& ts, double eps,
                            double w_max = kDefaultWeightClamp);
double loss_r_class2simi_frozen(const PairBatch& pb, const Matrix& probs,
                                const Vector& weights, double eps);

// ---------------------------------------------------------------------------
// Gradient twins. Exact analytic gradients of the mean losses above with
// respect to every model parameter; verified against central finite
// differences. The pairwise losses backpropagate pointwise: each instance
// accumulates the contributions of all pairs containing it before the single
// backward pass.
// ---------------------------------------------------------------------------

Gradients grad_ce(const MlpModel& model, const Matrix& x, const std::vector<int>& labels,
                  double eps);
Gradients grad_forward_pointwise(const MlpModel& model, const Matrix& x,
                                 const std::vector<int>& noisy_labels,
                                 const ClassTransitionMatrix& tc, double eps);
Gradients grad_reweight_pointwise(const MlpModel& model, const Matrix& x,
                                  const std::vector<int>& noisy_labels,
                                  const ClassTransitionMatrix& tc, double eps,
                                  double w_max = kDefaultWeightClamp);
Gradients grad_c2s(const PairBatch& pb, const MlpModel& model, const Matrix& x,
                   const SimilarityTransitionMatrix& ts, double eps);
Gradients grad_r_class2simi(const PairBatch& pb, const MlpModel& model, const Matrix& x,
                            const SimilarityTransitionMatrix& ts, double eps,
                            double w_max = kDefaultWeightClamp);

/// One forward + backward pass of any loss kind; the workhorse of the
/// training loop. Pairwise kinds enumerate pairs from the batch labels;
/// pointwise transition-corrected kinds need tc, pairwise ones need ts.
struct LossGrad {
  double loss = 0.0;
  Gradients grads;
};

LossGrad loss_and_grad(LossKind kind, const MlpModel& model, const Matrix& x,
                       const std::vector<int>& noisy_labels,
                       const ClassTransitionMatrix* tc,
                       const SimilarityTransitionMatrix* ts, double eps);

}  // namespace c2s
