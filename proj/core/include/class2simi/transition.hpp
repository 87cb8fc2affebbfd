#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <string>

namespace c2s {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Absolute tolerance for row-stochastic validation. Matrices outside it are
// rejected, not repaired.
inline constexpr double kRowSumTolerance = 1e-9;

// Smallest singular value above which a class transition matrix counts as
// invertible.
inline constexpr double kSingularThreshold = 1e-9;

/// Row-stochastic c x c matrix of label flip probabilities:
/// entries(i, j) = P(observed class j | clean class i).
class ClassTransitionMatrix {
 public:
  /// Validates shape, entry range and row sums; throws std::invalid_argument.
  explicit ClassTransitionMatrix(Matrix entries);

  static ClassTransitionMatrix identity(int c);

  int num_classes() const { return static_cast<int>(entries_.rows()); }
  double operator()(int i, int j) const { return entries_(i, j); }
  const Matrix& entries() const { return entries_; }

 private:
  Matrix entries_;
};

/// Row-stochastic 2x2 matrix of similarity-label flip probabilities:
/// entries(m, n) = P(observed similarity n | clean similarity m),
/// with 0 = dissimilar and 1 = similar.
class SimilarityTransitionMatrix {
 public:
  explicit SimilarityTransitionMatrix(Eigen::Matrix2d entries);

  static SimilarityTransitionMatrix identity();

  double operator()(int m, int n) const { return entries_(m, n); }
  const Eigen::Matrix2d& entries() const { return entries_; }

 private:
  Eigen::Matrix2d entries_;
};

/// Class marginal p_i. Accepts raw counts or probabilities and normalizes;
/// entries must be nonnegative with a positive sum.
class ClassPrior {
 public:
  explicit ClassPrior(Vector weights);

  static ClassPrior uniform(int c);

  int num_classes() const { return static_cast<int>(p_.size()); }
  double operator()(int i) const { return p_(i); }
  const Vector& probabilities() const { return p_; }

  /// Probability that two classes drawn i.i.d. from this prior coincide,
  /// sum_i p_i^2; the asymptotic prior of similar pairs (1/c when balanced).
  double pair_similar_prior() const { return p_.squaredNorm(); }

  bool is_uniform(double tol = 1e-12) const;

 private:
  Vector p_;
};

/// Symmetric noise: diagonal 1-rho, all off-diagonals rho/(c-1).
/// Requires rho < (c-1)/c so the diagonal stays dominant.
ClassTransitionMatrix make_symmetric(int c, double rho);

/// Pair-flip noise: class i flips to (i+1) mod c with probability rho.
ClassTransitionMatrix make_asymmetric(int c, double rho);

/// The induced similarity transition matrix for pairs whose two clean labels
/// are drawn i.i.d. from `prior` and corrupted independently through `tc`.
///
/// Uniform prior:
///   T_s11 = ||Tc||_F^2 / c,
///   T_s01 = (sum_j (sum_i Tc_ij)^2 - ||Tc||_F^2) / (c^2 - c),
/// with T_s10 and T_s00 the row complements. A general prior replaces the
/// uniform pair weights with p_i p_i':
///   T_s11 = sum_i p_i^2 sum_j Tc_ij^2 / sum_i p_i^2,
///   T_s01 = sum_{i != i'} p_i p_i' sum_j Tc_ij Tc_i'j / sum_{i != i'} p_i p_i'.
/// Rejects a degenerate prior (all mass on one class leaves T_s01 undefined).
SimilarityTransitionMatrix class2simi(const ClassTransitionMatrix& tc,
                                      const ClassPrior& prior);

/// Independent check of class2simi: accumulates P(observed similarity,
/// clean similarity) by brute-force summation over all ordered clean class
/// pairs (i, i') and noisy outcomes (j, j'), then conditions on the clean
/// similarity. Shares no algebra with class2simi.
SimilarityTransitionMatrix simi_transition_oracle(const ClassTransitionMatrix& tc,
                                                  const ClassPrior& prior);

/// Expected fraction of flipped class labels, sum_i p_i (1 - Tc_ii).
double class_noise_rate(const ClassTransitionMatrix& tc, const ClassPrior& prior);

/// Expected fraction of flipped similarity labels given the prior probability
/// that a pair is similar: q * T_s10 + (1-q) * T_s01.
double simi_noise_rate(const SimilarityTransitionMatrix& ts, double pair_similar_prior);

struct LearnabilityReport {
  bool tc_invertible = false;
  double tc_condition_estimate = 0.0;  // sigma_max / sigma_min
  bool ts_learnable = false;           // T_s00 + T_s11 > 1
};

LearnabilityReport learnability_check(const ClassTransitionMatrix& tc,
                                      const SimilarityTransitionMatrix& ts);

/// Multiplies every entry by a random factor whose magnitude is uniform in
/// [1+level, 1+level+0.1] and whose sign is a fair coin flip, clamps negative
/// results to zero, and renormalizes each row. A row whose entries all clamp
/// to zero is an error. With no_op set the matrix is returned unchanged
/// (explicit replacement for a sentinel "level that means identity").
ClassTransitionMatrix perturb_tc(const ClassTransitionMatrix& tc, double level,
                                 std::uint64_t seed, bool no_op = false);

// Plain-text matrix format: first line the dimension count, then that many
// rows of space-separated decimals. Used for both c x c and 2 x 2 matrices.
void write_matrix(std::ostream& os, const Matrix& m);
Matrix read_matrix(std::istream& is);
void save_class_transition_matrix(const ClassTransitionMatrix& tc, const std::string& path);
ClassTransitionMatrix load_class_transition_matrix(const std::string& path);
void save_similarity_transition_matrix(const SimilarityTransitionMatrix& ts, const std::string& path);
SimilarityTransitionMatrix load_similarity_transition_matrix(const std::string& path);

}  // namespace c2s
