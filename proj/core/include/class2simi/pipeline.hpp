#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "class2simi/dataset.hpp"
#include "class2simi/estimation.hpp"
#include "class2simi/losses.hpp"
#include "class2simi/mlp.hpp"
#include "class2simi/transition.hpp"

namespace c2s {

/// Training method. The two class2simi variants run a cross-entropy warm-up
/// stage and then optimize the corrected pairwise loss; the pointwise
/// baselines train a single stage unless the transition matrix has to be
/// estimated first.
enum class Method { ce, forward, reweight, f_class2simi, r_class2simi };
std::string to_string(Method m);
Method method_from_string(const std::string& s);

enum class NoiseType { none, symmetric, asymmetric, matrix_file };
std::string to_string(NoiseType t);
NoiseType noise_type_from_string(const std::string& s);

/// Where the class transition matrix used for loss correction comes from:
/// the matrix that generated the noise, an anchor-point estimate, or the true
/// matrix deliberately perturbed to probe robustness.
enum class TcSource { true_matrix, estimated, perturbed };
std::string to_string(TcSource s);
TcSource tc_source_from_string(const std::string& s);

struct DatasetSpec {
  std::string source = "blobs";  // "blobs" or "csv"

  // blobs
  int classes = 10;
  int per_class = 200;
  int dim = 8;
  double separation = 5.0;
  double spread = 1.5;
  int test_per_class = -1;  // -1: per_class / 5, at least 1

  // csv
  std::string train_csv;
  std::string test_csv;  // optional; without it test metrics are absent
  int label_column = -1;
  bool has_header = true;

  void validate() const;
};

struct NoiseSpec {
  NoiseType type = NoiseType::symmetric;
  double rate = 0.4;        // symmetric / asymmetric level
  std::string matrix_path;  // for matrix_file
  // CSV labels are already noisy; nothing is corrupted and clean train
  // accuracy is unavailable.
  bool labels_already_noisy = false;

  void validate() const;
};

/// Per-field overrides applied on top of the stage-1 hyperparameters for the
/// second stage. Anything unset falls back to stage 1 except the learning
/// rate, which defaults to a fifth of stage 1's (the second stage fine-tunes
/// a warm start).
struct Stage2Overrides {
  std::optional<double> learning_rate;
  std::optional<double> momentum;
  std::optional<double> weight_decay;
  std::optional<int> batch_size;
  std::optional<int> epochs;
  std::optional<double> probability_clamp;
};

struct ExperimentConfig {
  Method method = Method::f_class2simi;
  DatasetSpec dataset;
  NoiseSpec noise;
  TrainConfig train;  // stage-1 (and single-stage) hyperparameters
  Stage2Overrides stage2;
  TcSource tc_source = TcSource::true_matrix;
  double perturb_level = 0.0;       // only with TcSource::perturbed
  double anchor_percentile = 97.0;  // only with TcSource::estimated
  std::string prior_mode = "uniform";  // or "empirical" (noisy label frequencies)
  double validation_fraction = 0.1;
  bool cold_start = false;  // stage 2 from fresh weights instead of stage 1's
  std::uint64_t seed = 0;

  void validate() const;
  TrainConfig stage2_train() const;
};

/// Train/validation/test split with the matrices actually in play.
struct DataBundle {
  Matrix x_train;
  std::vector<int> noisy_train;
  std::optional<std::vector<int>> clean_train;
  Matrix x_val;
  std::vector<int> noisy_val;
  Matrix x_test;
  std::optional<std::vector<int>> clean_test;
  int num_classes = 0;
  std::optional<ClassTransitionMatrix> true_tc;  // absent when noise is external
  ClassPrior prior = ClassPrior::uniform(2);
  // Measured over the full corrupted pool before splitting; NaN when clean
  // labels are unknown.
  double empirical_class_noise = std::numeric_limits<double>::quiet_NaN();
  double empirical_simi_noise = std::numeric_limits<double>::quiet_NaN();
};

/// Deterministic dataset materialization: generate or load, corrupt, split.
DataBundle materialize(const ExperimentConfig& cfg);

struct EpochStats {
  int epoch = 0;  // 1-based; the selected_epoch value 0 means initial weights
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;  // NaN without a clean test set
};

struct StageReport {
  std::string name;
  LossKind loss_kind = LossKind::ce;
  std::vector<EpochStats> epochs;
  int selected_epoch = 0;  // epoch with the best noisy-validation accuracy
  double best_val_accuracy = 0.0;
  double test_accuracy = 0.0;  // of the selected model; NaN without clean test
  double pair_accuracy = 0.0;  // similarity prediction accuracy; NaN likewise
};

struct RunReport {
  ExperimentConfig config;
  int num_classes = 0;
  std::optional<Matrix> tc_used;
  std::optional<Matrix> ts_used;
  std::optional<LearnabilityReport> learnability;
  double analytic_class_noise = 0.0;   // NaN when no matrix applies
  double analytic_simi_noise = 0.0;
  double empirical_class_noise = 0.0;  // NaN when clean labels are unknown
  double empirical_simi_noise = 0.0;
  std::vector<StageReport> stages;
  double final_test_accuracy = 0.0;
  double final_pair_accuracy = 0.0;
  double wall_seconds = 0.0;
  std::optional<MlpModel> final_model;
};

/// Fraction of rows whose argmax matches the label (ties to the lower index).
double classification_accuracy(const MlpModel& model, const Matrix& x,
                               const std::vector<int>& labels);

/// Fraction of pairs where thresholding the predicted similarity at 1/2
/// recovers 1[same label]. All pairs when at most max_pairs, else sampled.
double pair_prediction_accuracy(const MlpModel& model, const Matrix& x,
                                const std::vector<int>& labels, long long max_pairs,
                                std::uint64_t seed);

/// One SGD run over the training split: per-epoch shuffling, mini-batches,
/// epoch metrics, model selection by noisy-validation accuracy (the initial
/// weights count as epoch 0). On return the model holds the selected weights.
StageReport train_loop(MlpModel& model, const DataBundle& data, const TrainConfig& config,
                       const ClassTransitionMatrix* tc, const SimilarityTransitionMatrix* ts,
                       const std::string& stage_name);

/// Full experiment: materialize data, resolve the transition matrices, run
/// the stage plan for the method, evaluate.
RunReport run_experiment(const ExperimentConfig& cfg);

struct RobustnessPoint {
  double level = 0.0;
  Method method = Method::forward;
  double accuracy = 0.0;
};

/// Accuracy of each method under increasingly perturbed transition matrices.
/// Level 0 uses the unperturbed matrix. The class2simi warm-up stage is
/// shared across levels since it does not depend on the perturbation.
std::vector<RobustnessPoint> run_matrix_robustness(const ExperimentConfig& base,
                                                   const std::vector<double>& levels,
                                                   const std::vector<Method>& methods);

}  // namespace c2s
