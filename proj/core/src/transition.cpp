#include "class2simi/transition.hpp"

#include <Eigen/SVD>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "class2simi/rng.hpp"

namespace c2s {

namespace {

void check_row_stochastic(const Matrix& m, const char* what) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double row_sum = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw std::invalid_argument(std::string(what) + ": entry (" +
                                    std::to_string(i) + "," + std::to_string(j) +
                                    ") = " + std::to_string(v) +
                                    " outside [0,1]");
      }
      row_sum += v;
    }
    if (std::abs(row_sum - 1.0) > kRowSumTolerance) {
      throw std::invalid_argument(std::string(what) + ": row " +
                                  std::to_string(i) + " sums to " +
                                  std::to_string(row_sum) + ", expected 1");
    }
  }
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw std::runtime_error("double formatting failed");
  return std::string(buf.data(), ptr);
}

}  // namespace

ClassTransitionMatrix::ClassTransitionMatrix(Matrix entries)
    : entries_(std::move(entries)) {
  if (entries_.rows() < 2 || entries_.rows() != entries_.cols()) {
    throw std::invalid_argument(
        "class transition matrix must be square with at least 2 classes, got " +
        std::to_string(entries_.rows()) + "x" + std::to_string(entries_.cols()));
  }
  check_row_stochastic(entries_, "class transition matrix");
}

ClassTransitionMatrix ClassTransitionMatrix::identity(int c) {
  return ClassTransitionMatrix(Matrix::Identity(c, c));
}

SimilarityTransitionMatrix::SimilarityTransitionMatrix(Eigen::Matrix2d entries)
    : entries_(std::move(entries)) {
  check_row_stochastic(entries_, "similarity transition matrix");
}

SimilarityTransitionMatrix SimilarityTransitionMatrix::identity() {
  return SimilarityTransitionMatrix(Eigen::Matrix2d::Identity());
}

ClassPrior::ClassPrior(Vector weights) : p_(std::move(weights)) {
  if (p_.size() < 2) {
    throw std::invalid_argument("class prior needs at least 2 classes");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p_.size(); ++i) {
    if (!std::isfinite(p_(i)) || p_(i) < 0.0) {
      throw std::invalid_argument("class prior entry " + std::to_string(i) +
                                  " is negative or non-finite");
    }
    sum += p_(i);
  }
  if (sum <= 0.0) throw std::invalid_argument("class prior sums to zero");
  p_ /= sum;
}

ClassPrior ClassPrior::uniform(int c) {
  if (c < 2) throw std::invalid_argument("class prior needs at least 2 classes");
  return ClassPrior(Vector::Constant(c, 1.0 / c));
}

bool ClassPrior::is_uniform(double tol) const {
  const double u = 1.0 / static_cast<double>(p_.size());
  return (p_.array() - u).abs().maxCoeff() <= tol;
}

ClassTransitionMatrix make_symmetric(int c, double rho) {
  if (c < 2) throw std::invalid_argument("make_symmetric: c must be >= 2");
  if (rho < 0.0 || rho >= static_cast<double>(c - 1) / c) {
    throw std::invalid_argument("make_symmetric: rho must lie in [0, (c-1)/c)");
  }
  Matrix m = Matrix::Constant(c, c, rho / (c - 1));
  m.diagonal().setConstant(1.0 - rho);
  return ClassTransitionMatrix(std::move(m));
}

ClassTransitionMatrix make_asymmetric(int c, double rho) {
  if (c < 2) throw std::invalid_argument("make_asymmetric: c must be >= 2");
  if (rho < 0.0 || rho >= 1.0) {
    throw std::invalid_argument("make_asymmetric: rho must lie in [0, 1)");
  }
  Matrix m = Matrix::Zero(c, c);
  for (int i = 0; i < c; ++i) {
    m(i, i) = 1.0 - rho;
    m(i, (i + 1) % c) = rho;
  }
  return ClassTransitionMatrix(std::move(m));
}

namespace {

void check_prior_match(const ClassTransitionMatrix& tc, const ClassPrior& prior) {
  if (tc.num_classes() != prior.num_classes()) {
    throw std::invalid_argument("class count mismatch: matrix has " +
                                std::to_string(tc.num_classes()) +
                                " classes, prior has " +
                                std::to_string(prior.num_classes()));
  }
}

SimilarityTransitionMatrix make_ts(double t01, double t11) {
  // The probabilities are nonnegative by construction; only round-off can
  // push them a hair outside [0,1].
  t01 = std::min(std::max(t01, 0.0), 1.0);
  t11 = std::min(std::max(t11, 0.0), 1.0);
  Eigen::Matrix2d e;
  e << 1.0 - t01, t01, 1.0 - t11, t11;
  return SimilarityTransitionMatrix(e);
}

}  // namespace

SimilarityTransitionMatrix class2simi(const ClassTransitionMatrix& tc,
                                      const ClassPrior& prior) {
  check_prior_match(tc, prior);
  const Matrix& t = tc.entries();
  const int c = tc.num_classes();

  if (prior.is_uniform()) {
    const double fro2 = t.squaredNorm();
    const double col_sq = t.colwise().sum().array().square().sum();
    const double t11 = fro2 / c;
    const double t01 = (col_sq - fro2) / (static_cast<double>(c) * c - c);
    return make_ts(t01, t11);
  }

  const Vector& p = prior.probabilities();
  const double similar_mass = p.squaredNorm();          // sum_i p_i^2
  const double dissimilar_mass = 1.0 - similar_mass;    // sum_{i != i'} p_i p_i'
  if (dissimilar_mass < 1e-12) {
    throw std::invalid_argument(
        "class2simi: prior puts (nearly) all mass on one class; "
        "P(observed similar | dissimilar) is undefined");
  }

  const Matrix gram = t * t.transpose();  // gram(i,i') = sum_j Tc_ij Tc_i'j
  double num11 = 0.0;
  for (int i = 0; i < c; ++i) num11 += p(i) * p(i) * gram(i, i);
  const double num01 = p.dot(gram * p) - num11;

  return make_ts(std::max(num01, 0.0) / dissimilar_mass, num11 / similar_mass);
}

SimilarityTransitionMatrix simi_transition_oracle(const ClassTransitionMatrix& tc,
                                                  const ClassPrior& prior) {
  check_prior_match(tc, prior);
  const int c = tc.num_classes();

  // joint[h][hbar] = P(clean similarity h, observed similarity hbar)
  double joint[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  for (int i = 0; i < c; ++i) {
    for (int k = 0; k < c; ++k) {
      const double pair_weight = prior(i) * prior(k);
      if (pair_weight == 0.0) continue;
      const int h = (i == k) ? 1 : 0;
      for (int j = 0; j < c; ++j) {
        for (int l = 0; l < c; ++l) {
          joint[h][(j == l) ? 1 : 0] += pair_weight * tc(i, j) * tc(k, l);
        }
      }
    }
  }

  Eigen::Matrix2d e;
  for (int h = 0; h < 2; ++h) {
    const double mass = joint[h][0] + joint[h][1];
    if (mass < 1e-12) {
      throw std::invalid_argument(
          "simi_transition_oracle: clean similarity " + std::to_string(h) +
          " has (nearly) zero probability under this prior");
    }
    e(h, 0) = joint[h][0] / mass;
    e(h, 1) = joint[h][1] / mass;
  }
  return SimilarityTransitionMatrix(e);
}

double class_noise_rate(const ClassTransitionMatrix& tc, const ClassPrior& prior) {
  check_prior_match(tc, prior);
  double rate = 0.0;
  for (int i = 0; i < tc.num_classes(); ++i) rate += prior(i) * (1.0 - tc(i, i));
  return rate;
}

double simi_noise_rate(const SimilarityTransitionMatrix& ts, double pair_similar_prior) {
  if (!(pair_similar_prior >= 0.0 && pair_similar_prior <= 1.0)) {
    throw std::invalid_argument("simi_noise_rate: pair_similar_prior must lie in [0,1]");
  }
  return pair_similar_prior * ts(1, 0) + (1.0 - pair_similar_prior) * ts(0, 1);
}

LearnabilityReport learnability_check(const ClassTransitionMatrix& tc,
                                      const SimilarityTransitionMatrix& ts) {
  LearnabilityReport report;
  Eigen::JacobiSVD<Matrix> svd(tc.entries());
  const auto& sigma = svd.singularValues();
  const double smin = sigma(sigma.size() - 1);
  const double smax = sigma(0);
  report.tc_invertible = smin > kSingularThreshold;
  report.tc_condition_estimate =
      smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  report.ts_learnable = ts(0, 0) + ts(1, 1) > 1.0;
  return report;
}

ClassTransitionMatrix perturb_tc(const ClassTransitionMatrix& tc, double level,
                                 std::uint64_t seed, bool no_op) {
  if (level < 0.0) throw std::invalid_argument("perturb_tc: level must be >= 0");
  if (no_op) return tc;

  const int c = tc.num_classes();
  SplitMix64 rng(seed);
  Matrix m(c, c);
  for (int i = 0; i < c; ++i) {
    for (int j = 0; j < c; ++j) {
      const double magnitude = rng.next_uniform(1.0 + level, 1.0 + level + 0.1);
      const double alpha = rng.next_bool() ? magnitude : -magnitude;
      m(i, j) = std::max(tc(i, j) * alpha, 0.0);
    }
  }
  for (int i = 0; i < c; ++i) {
    const double row_sum = m.row(i).sum();
    if (row_sum <= 0.0) {
      throw std::runtime_error("perturb_tc: perturbation zeroed out every entry in row " +
                               std::to_string(i));
    }
    m.row(i) /= row_sum;
  }
  return ClassTransitionMatrix(std::move(m));
}

void write_matrix(std::ostream& os, const Matrix& m) {
  os << m.rows() << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) os << ' ';
      os << format_double(m(i, j));
    }
    os << "\n";
  }
}

Matrix read_matrix(std::istream& is) {
  int n = 0;
  if (!(is >> n) || n < 1) {
    throw std::runtime_error("matrix file: first line must be the dimension count");
  }
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!(is >> m(i, j))) {
        throw std::runtime_error("matrix file: truncated at row " + std::to_string(i));
      }
    }
  }
  return m;
}

namespace {

Matrix read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix file: " + path);
  return read_matrix(in);
}

void write_matrix_file(const Matrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write matrix file: " + path);
  write_matrix(out, m);
}

}  // namespace

void save_class_transition_matrix(const ClassTransitionMatrix& tc, const std::string& path) {
  write_matrix_file(tc.entries(), path);
}

ClassTransitionMatrix load_class_transition_matrix(const std::string& path) {
  return ClassTransitionMatrix(read_matrix_file(path));
}

void save_similarity_transition_matrix(const SimilarityTransitionMatrix& ts,
                                       const std::string& path) {
  write_matrix_file(ts.entries(), path);
}

SimilarityTransitionMatrix load_similarity_transition_matrix(const std::string& path) {
  Matrix m = read_matrix_file(path);
  if (m.rows() != 2) {
    throw std::runtime_error("similarity transition matrix file must be 2x2");
  }
  return SimilarityTransitionMatrix(Eigen::Matrix2d(m));
}

}  // namespace c2s
