#include <doctest.h>

#include <cmath>
#include <vector>

#include "class2simi/losses.hpp"
#include "class2simi/mlp.hpp"
#include "class2simi/pairing.hpp"
#include "class2simi/rng.hpp"
#include "class2simi/transition.hpp"

using namespace c2s;

namespace {

constexpr double kEps = 1e-7;

Matrix random_input(int n, int d, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Matrix x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = rng.next_normal();
  return x;
}

// Central finite differences over every parameter of the model against the
// analytic gradient. Relative error uses a small floor so that parameters
// with a genuinely zero gradient do not divide by zero.
template <typename LossFn>
double max_fd_rel_err(const MlpModel& base, const Gradients& analytic, LossFn&& loss_of) {
  MlpModel m = base;
  double worst = 0.0;
  auto probe = [&](double& param, double grad) {
    const double keep = param;
    const double h = 1e-5 * std::max(1.0, std::abs(keep));
    param = keep + h;
    const double up = loss_of(m);
    param = keep - h;
    const double down = loss_of(m);
    param = keep;
    const double fd = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(fd), std::abs(grad), 1e-6});
    worst = std::max(worst, std::abs(fd - grad) / scale);
  };
  for (int l = 0; l < m.num_layers(); ++l) {
    Matrix& w = m.layers()[l].weight;
    for (int r = 0; r < w.rows(); ++r)
      for (int c = 0; c < w.cols(); ++c) probe(w(r, c), analytic.weight[l](r, c));
    Vector& b = m.layers()[l].bias;
    for (int r = 0; r < b.size(); ++r) probe(b(r), analytic.bias[l](r));
  }
  return worst;
}

Matrix one_pair_probs(const Vector& p_i, const Vector& p_j) {
  Matrix probs(2, p_i.size());
  probs.row(0) = p_i.transpose();
  probs.row(1) = p_j.transpose();
  return probs;
}

}  // namespace

TEST_CASE("pairwise similarity is the distribution inner product") {
  Vector a(3), b(3);
  a << 1.0, 0.0, 0.0;
  b << 0.0, 1.0, 0.0;
  CHECK(pairwise_similarity(a, a) == 1.0);
  CHECK(pairwise_similarity(a, b) == 0.0);
  Vector u = Vector::Constant(10, 0.1);
  CHECK(pairwise_similarity(u, u) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("noisy similarity mixes the two transition rows") {
  const SimilarityTransitionMatrix ts =
      class2simi(make_symmetric(10, 0.4), ClassPrior::uniform(10));
  const double mixed = noisy_similarity(0.3, ts);
  CHECK(mixed == 0.3 * ts(1, 1) + 0.7 * ts(0, 1));
  CHECK(std::abs(mixed - 0.161729) < 1e-6);
  CHECK(noisy_similarity(0.25, SimilarityTransitionMatrix::identity()) == 0.25);
}

TEST_CASE("cross entropy of the uniform prediction") {
  const Matrix probs = Matrix::Constant(4, 10, 0.1);
  const double loss = loss_ce(probs, {0, 3, 7, 9}, kEps);
  CHECK(std::abs(loss - std::log(10.0)) < 1e-12);
  CHECK(std::abs(loss - 2.302585) < 1e-6);
}

TEST_CASE("cross entropy clamps vanishing probabilities") {
  Matrix probs(1, 2);
  probs << 1.0, 0.0;
  CHECK(loss_ce(probs, {1}, kEps) == -std::log(kEps));
}

TEST_CASE("forward corrected loss on a one-hot prediction") {
  const ClassTransitionMatrix tc = make_symmetric(3, 0.4);
  Matrix probs(1, 3);
  probs << 1.0, 0.0, 0.0;
  // corrected posterior equals the first transition row
  CHECK(std::abs(loss_forward_pointwise(probs, {1}, tc, kEps) - (-std::log(tc(0, 1)))) <
        1e-12);
  CHECK(std::abs(loss_forward_pointwise(probs, {0}, tc, kEps) - (-std::log(0.6))) < 1e-12);
}

TEST_CASE("forward corrected loss with the identity is plain cross entropy") {
  SplitMix64 rng(5);
  Matrix probs(6, 4);
  for (int i = 0; i < 6; ++i) {
    double sum = 0.0;
    for (int j = 0; j < 4; ++j) {
      probs(i, j) = -std::log(rng.next_open());
      sum += probs(i, j);
    }
    probs.row(i) /= sum;
  }
  const std::vector<int> labels = {0, 1, 2, 3, 1, 2};
  const ClassTransitionMatrix id = ClassTransitionMatrix::identity(4);
  CHECK(loss_forward_pointwise(probs, labels, id, kEps) == loss_ce(probs, labels, kEps));
}

TEST_CASE("pairwise corrected loss on one pair") {
  const SimilarityTransitionMatrix id = SimilarityTransitionMatrix::identity();
  Vector p_i(2), p_j(2);
  p_i << 1.0, 0.0;
  p_j << 0.5, 0.5;
  const PairBatch pb = enumerate_pairs({0, 0});  // one observed-similar pair
  const double loss = loss_c2s(pb, one_pair_probs(p_i, p_j), id, kEps);
  CHECK(std::abs(loss - std::log(2.0)) < 1e-12);
  CHECK(std::abs(loss - 0.693147) < 1e-6);
}

TEST_CASE("pairwise corrected loss through a noisy transition") {
  const SimilarityTransitionMatrix ts =
      class2simi(make_symmetric(10, 0.4), ClassPrior::uniform(10));
  Vector p_i = Vector::Zero(10), p_j = Vector::Zero(10);
  p_i(0) = 1.0;
  p_j(0) = 0.3;
  p_j(1) = 0.7;
  const PairBatch pb = enumerate_pairs({0, 0});
  const double loss = loss_c2s(pb, one_pair_probs(p_i, p_j), ts, kEps);
  CHECK(loss == doctest::Approx(-std::log(noisy_similarity(0.3, ts))).epsilon(1e-12));
  CHECK(std::abs(loss - 1.82184) < 1e-4);
}

TEST_CASE("pairwise corrected loss slope at one half") {
  const SimilarityTransitionMatrix id = SimilarityTransitionMatrix::identity();
  const PairBatch pb = enumerate_pairs({0, 0});
  auto loss_at = [&](double s) {
    Vector p_i(2), p_j(2);
    p_i << 1.0, 0.0;
    p_j << s, 1.0 - s;
    return loss_c2s(pb, one_pair_probs(p_i, p_j), id, kEps);
  };
  const double h = 1e-6;
  const double slope = (loss_at(0.5 + h) - loss_at(0.5 - h)) / (2.0 * h);
  CHECK(std::abs(slope - (-2.0)) < 1e-6);
}

TEST_CASE("pairwise corrected loss with identity transition is plain bce") {
  SplitMix64 rng(6);
  const int b = 7, c = 3;
  Matrix probs(b, c);
  for (int i = 0; i < b; ++i) {
    double sum = 0.0;
    for (int j = 0; j < c; ++j) {
      probs(i, j) = -std::log(rng.next_open());
      sum += probs(i, j);
    }
    probs.row(i) /= sum;
  }
  const std::vector<int> labels = {0, 1, 2, 0, 1, 2, 0};
  const PairBatch pb = enumerate_pairs(labels);

  double manual = 0.0;
  for (std::size_t k = 0; k < pb.pairs.size(); ++k) {
    const auto [i, j] = pb.pairs[k];
    double s = probs.row(i).dot(probs.row(j));
    s = std::min(std::max(s, kEps), 1.0 - kEps);
    manual += pb.labels[k] ? -std::log(s) : -std::log(1.0 - s);
  }
  manual /= static_cast<double>(pb.pairs.size());

  CHECK(loss_c2s(pb, probs, SimilarityTransitionMatrix::identity(), kEps) == manual);
}

TEST_CASE("reweighting matches the importance ratio") {
  const SimilarityTransitionMatrix ts =
      class2simi(make_symmetric(10, 0.4), ClassPrior::uniform(10));
  Vector p_i = Vector::Zero(10), p_j = Vector::Zero(10);
  p_i(0) = 1.0;
  p_j(0) = 0.3;
  p_j(1) = 0.7;
  const PairBatch pb = enumerate_pairs({0, 0});
  const Vector w = r_class2simi_weights(pb, one_pair_probs(p_i, p_j), ts, kEps);
  REQUIRE(w.size() == 1);
  CHECK(w(0) == doctest::Approx(0.3 / noisy_similarity(0.3, ts)).epsilon(1e-12));
  CHECK(std::abs(w(0) - 1.85496) < 1e-4);
}

TEST_CASE("importance weights are clamped") {
  const SimilarityTransitionMatrix ts =
      class2simi(make_symmetric(10, 0.4), ClassPrior::uniform(10));
  // observed similar but predicted wildly dissimilar: S near 0 pushes the
  // dissimilar-branch weight (1 - S) / (1 - s_bar) nowhere, but the similar
  // branch S / s_bar with S clamped to eps gives a tiny weight, never < 0
  Vector p_i = Vector::Zero(10), p_j = Vector::Zero(10);
  p_i(0) = 1.0;
  p_j(1) = 1.0;
  const PairBatch pb = enumerate_pairs({0, 0});
  const Vector w = r_class2simi_weights(pb, one_pair_probs(p_i, p_j), ts, kEps);
  CHECK(w(0) >= 0.0);
  CHECK(w(0) <= kDefaultWeightClamp);

  // a barely-learnable matrix drives 1 / s_bar large; the clamp must bite
  Eigen::Matrix2d m;
  m << 0.999, 0.001, 0.9985, 0.0015;
  const SimilarityTransitionMatrix skew{m};
  const Vector w2 = r_class2simi_weights(pb, one_pair_probs(p_j, p_j), skew, kEps);
  CHECK(w2(0) == kDefaultWeightClamp);
}

TEST_CASE("reweighted pairwise loss refuses an unlearnable transition") {
  const ClassPrior u2 = ClassPrior::uniform(2);
  const SimilarityTransitionMatrix flat = class2simi(make_asymmetric(2, 0.5), u2);
  const PairBatch pb = enumerate_pairs({0, 1});
  const Matrix probs = Matrix::Constant(2, 2, 0.5);
  CHECK_THROWS_WITH_AS(loss_r_class2simi(pb, probs, flat, kEps),
                       doctest::Contains("not learnable"), std::invalid_argument);
  CHECK_THROWS_AS(r_class2simi_weights(pb, probs, flat, kEps), std::invalid_argument);
}

TEST_CASE("frozen-weight forms agree with the full losses") {
  SplitMix64 rng(9);
  const int b = 8, c = 3;
  Matrix probs(b, c);
  for (int i = 0; i < b; ++i) {
    double sum = 0.0;
    for (int j = 0; j < c; ++j) {
      probs(i, j) = -std::log(rng.next_open());
      sum += probs(i, j);
    }
    probs.row(i) /= sum;
  }
  const std::vector<int> labels = {0, 1, 2, 0, 1, 2, 0, 1};
  const ClassTransitionMatrix tc = make_symmetric(3, 0.3);
  const SimilarityTransitionMatrix ts = class2simi(tc, ClassPrior::uniform(3));
  const PairBatch pb = enumerate_pairs(labels);

  const Vector wp = reweight_pointwise_weights(probs, labels, tc, kEps);
  CHECK(loss_reweight_pointwise_frozen(probs, labels, wp, kEps) ==
        loss_reweight_pointwise(probs, labels, tc, kEps));

  const Vector ws = r_class2simi_weights(pb, probs, ts, kEps);
  CHECK(loss_r_class2simi_frozen(pb, probs, ws, kEps) ==
        loss_r_class2simi(pb, probs, ts, kEps));
}

TEST_CASE("analytic gradients match finite differences for every loss") {
  const int b = 8, c = 3, d = 5;
  const MlpModel model = MlpModel::init({d, 16, c}, 31);
  const Matrix x = random_input(b, d, 32);
  const std::vector<int> labels = {0, 1, 2, 0, 1, 2, 0, 1};
  const ClassTransitionMatrix tc = make_symmetric(3, 0.3);
  const SimilarityTransitionMatrix ts = class2simi(tc, ClassPrior::uniform(3));
  const PairBatch pb = enumerate_pairs(labels);
  const Matrix base_probs = forward(model, x);

  SUBCASE("ce") {
    const Gradients g = grad_ce(model, x, labels, kEps);
    const double err = max_fd_rel_err(
        model, g, [&](const MlpModel& m) { return loss_ce(forward(m, x), labels, kEps); });
    CHECK(err < 1e-4);
  }
  SUBCASE("forward_pointwise") {
    const Gradients g = grad_forward_pointwise(model, x, labels, tc, kEps);
    const double err = max_fd_rel_err(model, g, [&](const MlpModel& m) {
      return loss_forward_pointwise(forward(m, x), labels, tc, kEps);
    });
    CHECK(err < 1e-4);
  }
  SUBCASE("reweight_pointwise") {
    // weights are excluded from the gradient, so freeze them at the base
    // point and difference the frozen loss
    const Vector w = reweight_pointwise_weights(base_probs, labels, tc, kEps);
    const Gradients g = grad_reweight_pointwise(model, x, labels, tc, kEps);
    const double err = max_fd_rel_err(model, g, [&](const MlpModel& m) {
      return loss_reweight_pointwise_frozen(forward(m, x), labels, w, kEps);
    });
    CHECK(err < 1e-4);
  }
  SUBCASE("f_class2simi") {
    const Gradients g = grad_c2s(pb, model, x, ts, kEps);
    const double err = max_fd_rel_err(model, g, [&](const MlpModel& m) {
      return loss_c2s(pb, forward(m, x), ts, kEps);
    });
    CHECK(err < 1e-4);
  }
  SUBCASE("r_class2simi") {
    const Vector w = r_class2simi_weights(pb, base_probs, ts, kEps);
    const Gradients g = grad_r_class2simi(pb, model, x, ts, kEps);
    const double err = max_fd_rel_err(model, g, [&](const MlpModel& m) {
      return loss_r_class2simi_frozen(pb, forward(m, x), w, kEps);
    });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("the dispatcher reproduces the standalone losses") {
  const int b = 6, c = 3, d = 4;
  const MlpModel model = MlpModel::init({d, 12, c}, 41);
  const Matrix x = random_input(b, d, 42);
  const std::vector<int> labels = {0, 1, 2, 2, 1, 0};
  const ClassTransitionMatrix tc = make_symmetric(3, 0.3);
  const SimilarityTransitionMatrix ts = class2simi(tc, ClassPrior::uniform(3));
  const Matrix probs = forward(model, x);
  const PairBatch pb = enumerate_pairs(labels);

  CHECK(loss_and_grad(LossKind::ce, model, x, labels, nullptr, nullptr, kEps).loss ==
        loss_ce(probs, labels, kEps));
  CHECK(loss_and_grad(LossKind::forward_pointwise, model, x, labels, &tc, nullptr, kEps)
            .loss == loss_forward_pointwise(probs, labels, tc, kEps));
  CHECK(loss_and_grad(LossKind::reweight_pointwise, model, x, labels, &tc, nullptr, kEps)
            .loss == loss_reweight_pointwise(probs, labels, tc, kEps));
  CHECK(loss_and_grad(LossKind::f_class2simi, model, x, labels, nullptr, &ts, kEps).loss ==
        loss_c2s(pb, probs, ts, kEps));
  CHECK(loss_and_grad(LossKind::r_class2simi, model, x, labels, nullptr, &ts, kEps).loss ==
        loss_r_class2simi(pb, probs, ts, kEps));

  // missing matrices are argument errors, not crashes
  CHECK_THROWS_AS(loss_and_grad(LossKind::forward_pointwise, model, x, labels, nullptr,
                                nullptr, kEps),
                  std::invalid_argument);
  CHECK_THROWS_AS(loss_and_grad(LossKind::f_class2simi, model, x, labels, nullptr, nullptr,
                                kEps),
                  std::invalid_argument);
}
