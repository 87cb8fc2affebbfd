#include <doctest.h>

#include <cmath>
#include <sstream>

#include "class2simi/rng.hpp"
#include "class2simi/transition.hpp"

using namespace c2s;

namespace {

Matrix random_row_stochastic(int c, SplitMix64& rng) {
  Matrix m(c, c);
  for (int i = 0; i < c; ++i) {
    double sum = 0.0;
    for (int j = 0; j < c; ++j) {
      m(i, j) = -std::log(rng.next_open());
      sum += m(i, j);
    }
    m.row(i) /= sum;
  }
  return m;
}

double max_abs_diff(const Eigen::Matrix2d& a, const Eigen::Matrix2d& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("symmetric matrix layout") {
  const ClassTransitionMatrix t = make_symmetric(10, 0.4);
  for (int i = 0; i < 10; ++i) {
    CHECK(t(i, i) == doctest::Approx(0.6).epsilon(1e-14));
    for (int j = 0; j < 10; ++j) {
      if (j != i) CHECK(t(i, j) == doctest::Approx(0.4 / 9.0).epsilon(1e-14));
    }
    CHECK(std::abs(t.entries().row(i).sum() - 1.0) < 1e-12);
  }
  const ClassTransitionMatrix t2 = make_symmetric(2, 0.4);
  CHECK(t2(0, 0) == doctest::Approx(0.6));
  CHECK(t2(0, 1) == doctest::Approx(0.4));
  CHECK(t2(1, 0) == doctest::Approx(0.4));
  CHECK(t2(1, 1) == doctest::Approx(0.6));
}

TEST_CASE("symmetric with zero rate is the identity") {
  const ClassTransitionMatrix t = make_symmetric(5, 0.0);
  CHECK((t.entries() - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("symmetric rejects bad arguments") {
  CHECK_THROWS_AS(make_symmetric(1, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(make_symmetric(5, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(make_symmetric(5, 1.0), std::invalid_argument);
}

TEST_CASE("asymmetric pair-flip layout") {
  const ClassTransitionMatrix t = make_asymmetric(3, 0.4);
  Matrix want(3, 3);
  want << 0.6, 0.4, 0.0,
          0.0, 0.6, 0.4,
          0.4, 0.0, 0.6;
  CHECK((t.entries() - want).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((make_asymmetric(4, 0.0).entries() - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("asymmetric at one half is accepted but singular") {
  const ClassTransitionMatrix t = make_asymmetric(2, 0.5);
  const SimilarityTransitionMatrix ts = class2simi(t, ClassPrior::uniform(2));
  const LearnabilityReport rep = learnability_check(t, ts);
  CHECK_FALSE(rep.tc_invertible);
}

TEST_CASE("transition matrix constructor validates rows") {
  Matrix bad(2, 2);
  bad << 0.7, 0.4, 0.5, 0.5;  // first row sums to 1.1
  CHECK_THROWS_AS(ClassTransitionMatrix{bad}, std::invalid_argument);
  bad << -0.1, 1.1, 0.5, 0.5;
  CHECK_THROWS_AS(ClassTransitionMatrix{bad}, std::invalid_argument);
}

TEST_CASE("identity transform is exact") {
  for (int c : {2, 3, 10}) {
    const SimilarityTransitionMatrix ts =
        class2simi(ClassTransitionMatrix::identity(c), ClassPrior::uniform(c));
    CHECK(ts(0, 0) == 1.0);
    CHECK(ts(0, 1) == 0.0);
    CHECK(ts(1, 0) == 0.0);
    CHECK(ts(1, 1) == 1.0);
  }
}

TEST_CASE("transform of symmetric noise matches the closed form") {
  const SimilarityTransitionMatrix ts = class2simi(make_symmetric(10, 0.4), ClassPrior::uniform(10));
  // ||Tc||_F^2 = 10 * (0.36 + 9 * (0.4/9)^2) = 17/4.5, column sums are all 1
  const double t11 = (17.0 / 45.0);
  const double t01 = 28.0 / 405.0;
  CHECK(std::abs(ts(1, 1) - t11) < 1e-12);
  CHECK(std::abs(ts(0, 1) - t01) < 1e-12);
  CHECK(std::abs(ts(1, 1) - 0.377778) < 1e-6);
  CHECK(std::abs(ts(0, 1) - 0.069136) < 1e-6);
  CHECK(std::abs(ts(1, 0) - 0.622222) < 1e-6);
  CHECK(std::abs(ts(0, 0) - 0.930864) < 1e-6);

  const SimilarityTransitionMatrix ts2 = class2simi(make_symmetric(2, 0.4), ClassPrior::uniform(2));
  CHECK(std::abs(ts2(1, 1) - 0.52) < 1e-12);
  CHECK(std::abs(ts2(0, 1) - 0.48) < 1e-12);
}

TEST_CASE("transform rows are exact complements") {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int c = 2 + rng.next_index(15);
    const ClassTransitionMatrix tc{random_row_stochastic(c, rng)};
    const SimilarityTransitionMatrix ts = class2simi(tc, ClassPrior::uniform(c));
    CHECK(ts(0, 0) + ts(0, 1) == 1.0);
    CHECK(ts(1, 0) + ts(1, 1) == 1.0);
  }
}

TEST_CASE("transform agrees with the enumeration oracle") {
  const ClassPrior u10 = ClassPrior::uniform(10);
  const ClassTransitionMatrix sym = make_symmetric(10, 0.4);
  CHECK(max_abs_diff(class2simi(sym, u10).entries(), simi_transition_oracle(sym, u10).entries()) <
        1e-12);

  SplitMix64 rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    const int c = 2 + rng.next_index(19);
    const ClassTransitionMatrix tc{random_row_stochastic(c, rng)};
    ClassPrior prior = ClassPrior::uniform(c);
    if (trial % 2 == 1) {
      Vector w(c);
      for (int i = 0; i < c; ++i) w(i) = rng.next_uniform(0.2, 1.0);
      prior = ClassPrior{w / w.sum()};
    }
    worst = std::max(worst, max_abs_diff(class2simi(tc, prior).entries(),
                                         simi_transition_oracle(tc, prior).entries()));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("transform with a non-uniform prior") {
  Vector w(3);
  w << 0.5, 0.25, 0.25;
  const ClassPrior prior{w};
  const ClassTransitionMatrix tc = make_asymmetric(3, 0.4);
  const SimilarityTransitionMatrix ts = class2simi(tc, prior);
  const SimilarityTransitionMatrix want = simi_transition_oracle(tc, prior);
  CHECK(max_abs_diff(ts.entries(), want.entries()) < 1e-12);
}

TEST_CASE("class noise rate") {
  CHECK(class_noise_rate(ClassTransitionMatrix::identity(4), ClassPrior::uniform(4)) == 0.0);
  CHECK(std::abs(class_noise_rate(make_symmetric(10, 0.4), ClassPrior::uniform(10)) - 0.4) <
        1e-12);
  Vector w(3);
  w << 0.5, 0.25, 0.25;
  CHECK(std::abs(class_noise_rate(make_asymmetric(3, 0.4), ClassPrior{w}) - 0.4) < 1e-12);
}

TEST_CASE("similarity noise rate") {
  const ClassPrior u10 = ClassPrior::uniform(10);
  const SimilarityTransitionMatrix ts = class2simi(make_symmetric(10, 0.4), u10);
  CHECK(simi_noise_rate(SimilarityTransitionMatrix::identity(), 0.3) == 0.0);
  CHECK(std::abs(simi_noise_rate(ts, u10.pair_similar_prior()) - 0.124444) < 1e-6);

  const ClassPrior u2 = ClassPrior::uniform(2);
  const SimilarityTransitionMatrix ts2 = class2simi(make_symmetric(2, 0.4), u2);
  CHECK(std::abs(simi_noise_rate(ts2, u2.pair_similar_prior()) - 0.48) < 1e-12);
}

TEST_CASE("similarity noise beats class noise once classes are plentiful") {
  for (int c : {8, 12, 20, 50}) {
    const ClassPrior prior = ClassPrior::uniform(c);
    for (double rho : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}) {
      const ClassTransitionMatrix tc = make_symmetric(c, rho);
      const double class_rate = class_noise_rate(tc, prior);
      const double simi_rate = simi_noise_rate(class2simi(tc, prior), prior.pair_similar_prior());
      CHECK(simi_rate < class_rate);
    }
  }
  // and the two-class counterexample where the reduction makes noise worse
  const ClassPrior u2 = ClassPrior::uniform(2);
  const double simi2 = simi_noise_rate(class2simi(make_symmetric(2, 0.4), u2), u2.pair_similar_prior());
  CHECK(std::abs(simi2 - 0.48) < 1e-12);
  CHECK(simi2 > 0.4);
}

TEST_CASE("learnability report") {
  const ClassPrior u10 = ClassPrior::uniform(10);
  const ClassTransitionMatrix id = ClassTransitionMatrix::identity(10);
  const LearnabilityReport clean = learnability_check(id, class2simi(id, u10));
  CHECK(clean.tc_invertible);
  CHECK(clean.ts_learnable);
  CHECK(clean.tc_condition_estimate == doctest::Approx(1.0));

  const ClassTransitionMatrix sym = make_symmetric(10, 0.4);
  const LearnabilityReport noisy = learnability_check(sym, class2simi(sym, u10));
  CHECK(noisy.tc_invertible);
  CHECK(noisy.ts_learnable);  // 0.930864 + 0.377778 > 1

  const ClassPrior u2 = ClassPrior::uniform(2);
  const ClassTransitionMatrix flat = make_asymmetric(2, 0.5);
  const LearnabilityReport broken = learnability_check(flat, class2simi(flat, u2));
  CHECK_FALSE(broken.tc_invertible);
  CHECK_FALSE(broken.ts_learnable);  // T00 + T11 == 1 exactly
}

TEST_CASE("diagonally dominant matrices stay learnable") {
  SplitMix64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const int c = 2 + rng.next_index(19);
    Matrix m(c, c);
    for (int i = 0; i < c; ++i) {
      const double diag = rng.next_uniform(0.51, 0.99);
      double sum = 0.0;
      for (int j = 0; j < c; ++j) {
        if (j == i) continue;
        m(i, j) = -std::log(rng.next_open());
        sum += m(i, j);
      }
      for (int j = 0; j < c; ++j) {
        if (j != i) m(i, j) *= (1.0 - diag) / sum;
      }
      m(i, i) = diag;
      m.row(i) /= m.row(i).sum();
    }
    const ClassTransitionMatrix tc{m};
    const SimilarityTransitionMatrix ts = class2simi(tc, ClassPrior::uniform(c));
    CHECK(ts(0, 0) + ts(1, 1) > 1.0);
  }
}

TEST_CASE("perturbation keeps rows stochastic") {
  const ClassTransitionMatrix tc = make_symmetric(10, 0.4);
  const ClassTransitionMatrix p = perturb_tc(tc, 0.1, 7);
  for (int i = 0; i < 10; ++i) {
    CHECK(std::abs(p.entries().row(i).sum() - 1.0) < 1e-9);
    CHECK(p.entries().row(i).minCoeff() >= 0.0);
  }
  CHECK((p.entries() - tc.entries()).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("perturbation is deterministic in the seed") {
  const ClassTransitionMatrix tc = make_symmetric(6, 0.3);
  const ClassTransitionMatrix a = perturb_tc(tc, 0.2, 5);
  const ClassTransitionMatrix b = perturb_tc(tc, 0.2, 5);
  const ClassTransitionMatrix c = perturb_tc(tc, 0.2, 6);
  CHECK((a.entries() - b.entries()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.entries() - c.entries()).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("perturbation no-op flag returns the input unchanged") {
  const ClassTransitionMatrix tc = make_symmetric(5, 0.2);
  const ClassTransitionMatrix p = perturb_tc(tc, 0.3, 123, /*no_op=*/true);
  CHECK((p.entries() - tc.entries()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("perturbation of a sparse matrix can zero a row") {
  // a single-entry row survives only when its sign flip comes up positive
  const ClassTransitionMatrix id = ClassTransitionMatrix::identity(10);
  CHECK_THROWS_WITH_AS(perturb_tc(id, 0.1, 0), doctest::Contains("row"),
                       std::runtime_error);
  const ClassTransitionMatrix lucky = perturb_tc(id, 0.1, 2940);
  for (int i = 0; i < 10; ++i) {
    CHECK(std::abs(lucky.entries().row(i).sum() - 1.0) < 1e-9);
  }
}

TEST_CASE("matrix file round trip") {
  const ClassTransitionMatrix tc = make_symmetric(7, 0.35);
  std::ostringstream os;
  write_matrix(os, tc.entries());
  std::istringstream is(os.str());
  const Matrix back = read_matrix(is);
  CHECK((back - tc.entries()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("matrix reader rejects malformed input") {
  std::istringstream short_data("2 2\n0.5 0.5\n");
  CHECK_THROWS_AS(read_matrix(short_data), std::runtime_error);
  std::istringstream garbage("2 2\n0.5 x\n0.5 0.5\n");
  CHECK_THROWS_AS(read_matrix(garbage), std::runtime_error);
}
