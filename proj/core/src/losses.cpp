#include "class2simi/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace c2s {
namespace {

void check_eps(double eps) {
  if (!(eps > 0.0) || !(eps < 0.5)) {
    throw std::invalid_argument("probability clamp must lie in (0, 0.5), got " +
                                std::to_string(eps));
  }
}

void check_labels(const Matrix& probs, const std::vector<int>& labels) {
  if (static_cast<int>(labels.size()) != probs.rows()) {
    throw std::invalid_argument("got " + std::to_string(labels.size()) + " labels for " +
                                std::to_string(probs.rows()) + " probability rows");
  }
  const int c = static_cast<int>(probs.cols());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= c) {
      throw std::invalid_argument("label " + std::to_string(labels[i]) + " at row " +
                                  std::to_string(i) + " is outside [0, " + std::to_string(c) +
                                  ")");
    }
  }
}

void check_pairs(const PairBatch& pb, const Matrix& probs) {
  if (pb.pairs.empty()) {
    throw std::invalid_argument("pair batch is empty");
  }
  if (pb.pairs.size() != pb.labels.size()) {
    throw std::invalid_argument("pair batch has " + std::to_string(pb.pairs.size()) +
                                " pairs but " + std::to_string(pb.labels.size()) + " labels");
  }
  const int b = static_cast<int>(probs.rows());
  for (const auto& [i, j] : pb.pairs) {
    if (i < 0 || j < 0 || i >= b || j >= b) {
      throw std::invalid_argument("pair (" + std::to_string(i) + ", " + std::to_string(j) +
                                  ") indexes outside the batch of " + std::to_string(b));
    }
  }
}

// Value clamped to [eps, 1 - eps] plus whether it was inside the open
// interval; gradients pass through only when inside.
struct Clamped {
  double value;
  bool interior;
};

Clamped clamp_unit(double v, double eps) {
  if (v < eps) return {eps, false};
  if (v > 1.0 - eps) return {1.0 - eps, false};
  return {v, true};
}

// Lower clamp only; categorical probabilities never exceed 1.
Clamped clamp_floor(double v, double eps) {
  if (v < eps) return {eps, false};
  return {v, true};
}

// Each *_core computes the mean loss and, when dprobs is non-null,
// accumulates the gradient with respect to the softmax outputs into it
// (caller provides a zeroed matrix of the same shape as probs).

double ce_core(const Matrix& probs, const std::vector<int>& labels, double eps,
               Matrix* dprobs) {
  const int b = static_cast<int>(probs.rows());
  double total = 0.0;
  for (int i = 0; i < b; ++i) {
    const Clamped p = clamp_floor(probs(i, labels[i]), eps);
    total -= std::log(p.value);
    if (dprobs != nullptr && p.interior) {
      (*dprobs)(i, labels[i]) -= 1.0 / (p.value * b);
    }
  }
  return total / b;
}

double forward_pointwise_core(const Matrix& probs, const std::vector<int>& labels,
                              const ClassTransitionMatrix& tc, double eps, Matrix* dprobs) {
  const int b = static_cast<int>(probs.rows());
  const int c = static_cast<int>(probs.cols());
  // q_i = Tc^T p_i: the model's implied distribution over noisy labels.
  const Matrix q = probs * tc.entries();
  double total = 0.0;
  for (int i = 0; i < b; ++i) {
    const int y = labels[i];
    const Clamped qy = clamp_floor(q(i, y), eps);
    total -= std::log(qy.value);
    if (dprobs != nullptr && qy.interior) {
      const double scale = -1.0 / (qy.value * b);
      for (int k = 0; k < c; ++k) {
        (*dprobs)(i, k) += scale * tc(k, y);
      }
    }
  }
  return total / b;
}

Vector reweight_weights_core(const Matrix& probs, const std::vector<int>& labels,
                             const ClassTransitionMatrix& tc, double eps, double w_max) {
  const int b = static_cast<int>(probs.rows());
  const Matrix q = probs * tc.entries();
  Vector w(b);
  for (int i = 0; i < b; ++i) {
    const int y = labels[i];
    const double beta = probs(i, y) / clamp_floor(q(i, y), eps).value;
    w[i] = std::min(std::max(beta, 0.0), w_max);
  }
  return w;
}

double reweight_frozen_core(const Matrix& probs, const std::vector<int>& labels,
                            const Vector& weights, double eps, Matrix* dprobs) {
  const int b = static_cast<int>(probs.rows());
  if (weights.size() != b) {
    throw std::invalid_argument("got " + std::to_string(weights.size()) + " weights for " +
                                std::to_string(b) + " probability rows");
  }
  double total = 0.0;
  for (int i = 0; i < b; ++i) {
    const Clamped p = clamp_floor(probs(i, labels[i]), eps);
    total -= weights[i] * std::log(p.value);
    if (dprobs != nullptr && p.interior) {
      (*dprobs)(i, labels[i]) -= weights[i] / (p.value * b);
    }
  }
  return total / b;
}

double c2s_core(const PairBatch& pb, const Matrix& probs, const SimilarityTransitionMatrix& ts,
                double eps, Matrix* dprobs) {
  const double t01 = ts(0, 1);
  const double t11 = ts(1, 1);
  const double slope = t11 - t01;  // d noisy / d clean similarity
  const std::size_t m = pb.pairs.size();
  double total = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const auto [i, j] = pb.pairs[k];
    const double s_clean = probs.row(i).dot(probs.row(j));
    const Clamped s = clamp_unit(t01 + slope * s_clean, eps);
    const bool similar = pb.labels[k] == 1;
    total -= similar ? std::log(s.value) : std::log(1.0 - s.value);
    if (dprobs != nullptr && s.interior) {
      const double dloss_ds = similar ? -1.0 / s.value : 1.0 / (1.0 - s.value);
      const double g = dloss_ds * slope / static_cast<double>(m);
      dprobs->row(i) += g * probs.row(j);
      dprobs->row(j) += g * probs.row(i);
    }
  }
  return total / static_cast<double>(m);
}

Vector r_weights_core(const PairBatch& pb, const Matrix& probs,
                      const SimilarityTransitionMatrix& ts, double eps, double w_max) {
  const double t01 = ts(0, 1);
  const double t11 = ts(1, 1);
  const double slope = t11 - t01;
  const std::size_t m = pb.pairs.size();
  Vector w(static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k) {
    const auto [i, j] = pb.pairs[k];
    const double s_clean = clamp_unit(probs.row(i).dot(probs.row(j)), eps).value;
    const double s_noisy = clamp_unit(t01 + slope * s_clean, eps).value;
    const bool similar = pb.labels[k] == 1;
    const double beta = similar ? s_clean / s_noisy : (1.0 - s_clean) / (1.0 - s_noisy);
    w[static_cast<Eigen::Index>(k)] = std::min(std::max(beta, 0.0), w_max);
  }
  return w;
}

double r_frozen_core(const PairBatch& pb, const Matrix& probs, const Vector& weights,
                     double eps, Matrix* dprobs) {
  const std::size_t m = pb.pairs.size();
  if (weights.size() != static_cast<Eigen::Index>(m)) {
    throw std::invalid_argument("got " + std::to_string(weights.size()) + " weights for " +
                                std::to_string(m) + " pairs");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const auto [i, j] = pb.pairs[k];
    const Clamped s = clamp_unit(probs.row(i).dot(probs.row(j)), eps);
    const bool similar = pb.labels[k] == 1;
    const double w = weights[static_cast<Eigen::Index>(k)];
    total -= w * (similar ? std::log(s.value) : std::log(1.0 - s.value));
    if (dprobs != nullptr && s.interior) {
      const double dloss_ds = similar ? -1.0 / s.value : 1.0 / (1.0 - s.value);
      const double g = w * dloss_ds / static_cast<double>(m);
      dprobs->row(i) += g * probs.row(j);
      dprobs->row(j) += g * probs.row(i);
    }
  }
  return total / static_cast<double>(m);
}

void require_learnable(const SimilarityTransitionMatrix& ts) {
  const double diag = ts(0, 0) + ts(1, 1);
  if (!(diag > 1.0)) {
    throw std::invalid_argument(
        "similarity transition matrix is not learnable for reweighting: T00 + T11 = " +
        std::to_string(diag) + " <= 1");
  }
}

void check_tc(const ClassTransitionMatrix& tc, const Matrix& probs) {
  if (tc.num_classes() != static_cast<int>(probs.cols())) {
    throw std::invalid_argument("transition matrix is " + std::to_string(tc.num_classes()) +
                                "x" + std::to_string(tc.num_classes()) + " but model has " +
                                std::to_string(probs.cols()) + " classes");
  }
}

}  // namespace

double pairwise_similarity(const Eigen::Ref<const Vector>& p_i,
                           const Eigen::Ref<const Vector>& p_j) {
  if (p_i.size() != p_j.size()) {
    throw std::invalid_argument("distributions have different sizes: " +
                                std::to_string(p_i.size()) + " vs " +
                                std::to_string(p_j.size()));
  }
  return p_i.dot(p_j);
}

double noisy_similarity(double s_hat, const SimilarityTransitionMatrix& ts) {
  return ts(0, 1) * (1.0 - s_hat) + ts(1, 1) * s_hat;
}

double loss_ce(const Matrix& probs, const std::vector<int>& labels, double eps) {
  check_eps(eps);
  check_labels(probs, labels);
  return ce_core(probs, labels, eps, nullptr);
}

double loss_forward_pointwise(const Matrix& probs, const std::vector<int>& noisy_labels,
                              const ClassTransitionMatrix& tc, double eps) {
  check_eps(eps);
  check_labels(probs, noisy_labels);
  check_tc(tc, probs);
  return forward_pointwise_core(probs, noisy_labels, tc, eps, nullptr);
}

double loss_reweight_pointwise(const Matrix& probs, const std::vector<int>& noisy_labels,
                               const ClassTransitionMatrix& tc, double eps, double w_max) {
  check_eps(eps);
  check_labels(probs, noisy_labels);
  check_tc(tc, probs);
  const Vector w = reweight_weights_core(probs, noisy_labels, tc, eps, w_max);
  return reweight_frozen_core(probs, noisy_labels, w, eps, nullptr);
}

Vector reweight_pointwise_weights(const Matrix& probs, const std::vector<int>& noisy_labels,
                                  const ClassTransitionMatrix& tc, double eps, double w_max) {
  check_eps(eps);
  check_labels(probs, noisy_labels);
  check_tc(tc, probs);
  return reweight_weights_core(probs, noisy_labels, tc, eps, w_max);
}

double loss_reweight_pointwise_frozen(const Matrix& probs, const std::vector<int>& noisy_labels,
                                      const Vector& weights, double eps) {
  check_eps(eps);
  check_labels(probs, noisy_labels);
  return reweight_frozen_core(probs, noisy_labels, weights, eps, nullptr);
}

double loss_c2s(const PairBatch& pb, const Matrix& probs,
                const SimilarityTransitionMatrix& ts, double eps) {
  check_eps(eps);
  check_pairs(pb, probs);
  return c2s_core(pb, probs, ts, eps, nullptr);
}

double loss_r_class2simi(const PairBatch& pb, const Matrix& probs,
                         const SimilarityTransitionMatrix& ts, double eps, double w_max) {
  check_eps(eps);
  check_pairs(pb, probs);
  require_learnable(ts);
  const Vector w = r_weights_core(pb, probs, ts, eps, w_max);
  return r_frozen_core(pb, probs, w, eps, nullptr);
}

Vector r_class2simi_weights(const PairBatch& pb, const Matrix& probs,
                            const SimilarityTransitionMatrix& ts, double eps, double w_max) {
  check_eps(eps);
  check_pairs(pb, probs);
  require_learnable(ts);
  return r_weights_core(pb, probs, ts, eps, w_max);
}

double loss_r_class2simi_frozen(const PairBatch& pb, const Matrix& probs,
                                const Vector& weights, double eps) {
  check_eps(eps);
  check_pairs(pb, probs);
  return r_frozen_core(pb, probs, weights, eps, nullptr);
}

Gradients grad_ce(const MlpModel& model, const Matrix& x, const std::vector<int>& labels,
                  double eps) {
  check_eps(eps);
  ForwardCache cache;
  const Matrix probs = forward(model, x, &cache);
  check_labels(probs, labels);
  Matrix dprobs = Matrix::Zero(probs.rows(), probs.cols());
  ce_core(probs, labels, eps, &dprobs);
  return backward_from_probs(model, cache, dprobs);
}

Gradients grad_forward_pointwise(const MlpModel& model, const Matrix& x,
                                 const std::vector<int>& noisy_labels,
                                 const ClassTransitionMatrix& tc, double eps) {
  check_eps(eps);
  ForwardCache cache;
  const Matrix probs = forward(model, x, &cache);
  check_labels(probs, noisy_labels);
  check_tc(tc, probs);
  Matrix dprobs = Matrix::Zero(probs.rows(), probs.cols());
  forward_pointwise_core(probs, noisy_labels, tc, eps, &dprobs);
  return backward_from_probs(model, cache, dprobs);
}

Gradients grad_reweight_pointwise(const MlpModel& model, const Matrix& x,
                                  const std::vector<int>& noisy_labels,
                                  const ClassTransitionMatrix& tc, double eps, double w_max) {
  check_eps(eps);
  ForwardCache cache;
  const Matrix probs = forward(model, x, &cache);
  check_labels(probs, noisy_labels);
  check_tc(tc, probs);
  const Vector w = reweight_weights_core(probs, noisy_labels, tc, eps, w_max);
  Matrix dprobs = Matrix::Zero(probs.rows(), probs.cols());
  reweight_frozen_core(probs, noisy_labels, w, eps, &dprobs);
  return backward_from_probs(model, cache, dprobs);
}

Gradients grad_c2s(const PairBatch& pb, const MlpModel& model, const Matrix& x,
                   const SimilarityTransitionMatrix& ts, double eps) {
  check_eps(eps);
  ForwardCache cache;
  const Matrix probs = forward(model, x, &cache);
  check_pairs(pb, probs);
  Matrix dprobs = Matrix::Zero(probs.rows(), probs.cols());
  c2s_core(pb, probs, ts, eps, &dprobs);
  return backward_from_probs(model, cache, dprobs);
}

Gradients grad_r_class2simi(const PairBatch& pb, const MlpModel& model, const Matrix& x,
                            const SimilarityTransitionMatrix& ts, double eps, double w_max) {
  check_eps(eps);
  ForwardCache cache;
  const Matrix probs = forward(model, x, &cache);
  check_pairs(pb, probs);
  require_learnable(ts);
  const Vector w = r_weights_core(pb, probs, ts, eps, w_max);
  Matrix dprobs = Matrix::Zero(probs.rows(), probs.cols());
  r_frozen_core(pb, probs, w, eps, &dprobs);
  return backward_from_probs(model, cache, dprobs);
}

LossGrad loss_and_grad(LossKind kind, const MlpModel& model, const Matrix& x,
                       const std::vector<int>& noisy_labels,
                       const ClassTransitionMatrix* tc,
                       const SimilarityTransitionMatrix* ts, double eps) {
  check_eps(eps);
  ForwardCache cache;
  const Matrix probs = forward(model, x, &cache);
  check_labels(probs, noisy_labels);
  Matrix dprobs = Matrix::Zero(probs.rows(), probs.cols());
  LossGrad out;
  switch (kind) {
    case LossKind::ce:
      out.loss = ce_core(probs, noisy_labels, eps, &dprobs);
      break;
    case LossKind::forward_pointwise: {
      if (tc == nullptr) {
        throw std::invalid_argument("forward_pointwise needs a class transition matrix");
      }
      check_tc(*tc, probs);
      out.loss = forward_pointwise_core(probs, noisy_labels, *tc, eps, &dprobs);
      break;
    }
    case LossKind::reweight_pointwise: {
      if (tc == nullptr) {
        throw std::invalid_argument("reweight_pointwise needs a class transition matrix");
      }
      check_tc(*tc, probs);
      const Vector w = reweight_weights_core(probs, noisy_labels, *tc, eps,
                                             kDefaultWeightClamp);
      out.loss = reweight_frozen_core(probs, noisy_labels, w, eps, &dprobs);
      break;
    }
    case LossKind::f_class2simi: {
      if (ts == nullptr) {
        throw std::invalid_argument("f_class2simi needs a similarity transition matrix");
      }
      const PairBatch pb = enumerate_pairs(noisy_labels);
      out.loss = c2s_core(pb, probs, *ts, eps, &dprobs);
      break;
    }
    case LossKind::r_class2simi: {
      if (ts == nullptr) {
        throw std::invalid_argument("r_class2simi needs a similarity transition matrix");
      }
      require_learnable(*ts);
      const PairBatch pb = enumerate_pairs(noisy_labels);
      const Vector w = r_weights_core(pb, probs, *ts, eps, kDefaultWeightClamp);
      out.loss = r_frozen_core(pb, probs, w, eps, &dprobs);
      break;
    }
  }
  out.grads = backward_from_probs(model, cache, dprobs);
  return out;
}

}  // namespace c2s
