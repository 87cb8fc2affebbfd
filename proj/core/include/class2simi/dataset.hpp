#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "class2simi/transition.hpp"

namespace c2s {

/// Feature matrix with clean and/or noisy integer class labels.
struct LabeledDataset {
  Matrix features;  // n x d
  std::optional<std::vector<int>> clean_labels;
  std::optional<std::vector<int>> noisy_labels;
  int num_classes = 0;

  int n() const { return static_cast<int>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }

  /// Throws std::invalid_argument on a violated invariant: at least one label
  /// vector present, labels in [0, num_classes), label lengths matching n.
  void validate() const;
};

/// c Gaussian clusters, per_class points each, labeled 0..c-1 in block order.
/// Cluster means lie on a circle of radius `separation` for d == 2 and on
/// signed scaled standard-basis directions for d > 2; `spread` is the
/// isotropic standard deviation. Deterministic given the seed.
LabeledDataset generate_blobs(int c, int per_class, int d, double separation,
                              double spread, std::uint64_t seed);

/// Draws a noisy label for every instance from the transition-matrix row of
/// its clean label. Clean labels are retained for evaluation.
LabeledDataset corrupt_labels(const LabeledDataset& ds, const ClassTransitionMatrix& tc,
                              std::uint64_t seed);

/// Fraction of instances whose noisy label differs from the clean one.
double empirical_class_noise_rate(const LabeledDataset& ds);

/// Fraction of pairs whose observed similarity 1[noisy_i == noisy_j] differs
/// from the clean similarity 1[clean_i == clean_j]. Enumerates all unordered
/// pairs when there are at most max_pairs of them, otherwise samples
/// max_pairs pairs uniformly (with replacement over pairs).
double empirical_simi_noise_rate(const LabeledDataset& ds, long long max_pairs,
                                 std::uint64_t seed);

struct CsvSchema {
  int label_column = -1;  // -1 selects the last column
  bool has_header = true;
};

/// Loads a comma-separated file into a dataset. All non-label columns become
/// features; the label column must hold nonnegative integers. The class count
/// is inferred as max label + 1. Malformed rows are reported with their
/// 1-based line number.
LabeledDataset load_csv(const std::string& path, const CsvSchema& schema = {});

/// Writes features plus the clean label column (header f0..f{d-1},label) and,
/// when present, a trailing noisy_label column.
void save_csv(const LabeledDataset& ds, const std::string& path);

}  // namespace c2s
