#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "class2simi/transition.hpp"

namespace c2s {

// Floor applied to softmax outputs so they stay strictly positive even when
// the exponentials underflow. Distinct from the loss-level log clamp.
inline constexpr double kProbFloor = 1e-12;

struct Layer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

/// Feedforward net with ReLU hidden layers and a softmax output head.
class MlpModel {
 public:
  MlpModel() = default;
  explicit MlpModel(std::vector<Layer> layers);

  /// He-initialized weights (std = sqrt(2 / fan_in)), zero biases.
  /// dims = {input, hidden..., classes}.
  static MlpModel init(const std::vector<int>& dims, std::uint64_t seed);

  int input_dim() const;
  int output_dim() const;
  std::vector<int> dims() const;
  int num_layers() const { return static_cast<int>(layers_.size()); }

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

 private:
  std::vector<Layer> layers_;
};

/// Intermediate values of one forward pass, kept for backpropagation.
struct ForwardCache {
  std::vector<Matrix> inputs;    // inputs[l] = activation entering layer l (b x in_l)
  std::vector<Matrix> pre_acts;  // pre_acts[l] = affine output of layer l (b x out_l)
  Matrix probs;                  // b x c softmax rows
};

/// Runs the network on a batch (rows = instances). Rows of the result are
/// softmax distributions. Throws std::runtime_error naming the layer if a
/// non-finite intermediate appears; throws std::invalid_argument for a
/// non-finite or mis-sized input.
Matrix forward(const MlpModel& model, const Matrix& x, ForwardCache* cache = nullptr);

/// Per-parameter gradient arrays, congruent in shape to the model.
struct Gradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;

  static Gradients zeros_like(const MlpModel& model);
  void check_congruent(const MlpModel& model) const;
};

/// Backpropagates dL/dprobs (already scaled by any batch averaging) through
/// the softmax head and all layers.
Gradients backward_from_probs(const MlpModel& model, const ForwardCache& cache,
                              const Matrix& dprobs);

enum class LossKind { ce, forward_pointwise, reweight_pointwise, f_class2simi, r_class2simi };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

struct TrainConfig {
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int batch_size = 64;
  int epochs = 40;
  std::uint64_t seed = 0;
  LossKind loss_kind = LossKind::ce;
  double probability_clamp = 1e-7;  // log-argument clamp epsilon
  std::vector<int> hidden_dims = {32};

  void validate() const;
};

/// Classical momentum SGD with decoupled weight decay (applied to weights
/// only). Velocity state lives in the optimizer; updates are deterministic.
class SgdOptimizer {
 public:
  explicit SgdOptimizer(const MlpModel& model);

  /// v <- momentum * v + g;  w <- w - lr * v - lr * weight_decay * w.
  void step(MlpModel& model, const Gradients& grads, const TrainConfig& config);

 private:
  Gradients velocity_;
};

/// Versioned JSON checkpoint with layer shapes and row-major parameter
/// arrays; round-trips bit-exactly.
void save_checkpoint(const MlpModel& model, const std::string& path);
MlpModel load_checkpoint(const std::string& path);

}  // namespace c2s
