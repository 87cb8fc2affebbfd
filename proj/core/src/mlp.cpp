#include "class2simi/mlp.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "class2simi/rng.hpp"

namespace c2s {

namespace {

using json = nlohmann::json;

void check_finite(const Matrix& m, int layer, const char* stage) {
  if (!m.allFinite()) {
    throw std::runtime_error("layer " + std::to_string(layer) + ": non-finite " + stage);
  }
}

}  // namespace

MlpModel::MlpModel(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw std::invalid_argument("model needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    if (layer.weight.rows() != layer.bias.size()) {
      throw std::invalid_argument("layer " + std::to_string(l) +
                                  ": bias length does not match weight rows");
    }
    if (l > 0 && layers_[l - 1].weight.rows() != layer.weight.cols()) {
      throw std::invalid_argument("layer " + std::to_string(l) +
                                  ": input dim does not compose with previous layer");
    }
  }
}

MlpModel MlpModel::init(const std::vector<int>& dims, std::uint64_t seed) {
  if (dims.size() < 2) throw std::invalid_argument("model needs at least input and output dims");
  for (int d : dims) {
    if (d < 1) throw std::invalid_argument("model dims must be positive");
  }
  SplitMix64 rng(seed);
  std::vector<Layer> layers;
  layers.reserve(dims.size() - 1);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    Layer layer;
    layer.weight.resize(fan_out, fan_in);
    const double std_dev = std::sqrt(2.0 / fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) {
        layer.weight(r, c) = std_dev * rng.next_normal();
      }
    }
    layer.bias = Vector::Zero(fan_out);
    layers.push_back(std::move(layer));
  }
  return MlpModel(std::move(layers));
}

int MlpModel::input_dim() const { return static_cast<int>(layers_.front().weight.cols()); }
int MlpModel::output_dim() const { return static_cast<int>(layers_.back().weight.rows()); }

std::vector<int> MlpModel::dims() const {
  std::vector<int> d;
  d.push_back(input_dim());
  for (const Layer& layer : layers_) d.push_back(static_cast<int>(layer.weight.rows()));
  return d;
}

Matrix forward(const MlpModel& model, const Matrix& x, ForwardCache* cache) {
  if (x.cols() != model.input_dim()) {
    throw std::invalid_argument("forward: input has " + std::to_string(x.cols()) +
                                " features, model expects " +
                                std::to_string(model.input_dim()));
  }
  if (!x.allFinite()) throw std::invalid_argument("forward: non-finite input");

  const int num_layers = model.num_layers();
  if (cache) {
    cache->inputs.assign(static_cast<std::size_t>(num_layers), Matrix());
    cache->pre_acts.assign(static_cast<std::size_t>(num_layers), Matrix());
  }

  Matrix activation = x;
  for (int l = 0; l < num_layers; ++l) {
    const Layer& layer = model.layers()[static_cast<std::size_t>(l)];
    if (cache) cache->inputs[static_cast<std::size_t>(l)] = activation;
    Matrix z = activation * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    check_finite(z, l, "pre-activation");
    if (cache) cache->pre_acts[static_cast<std::size_t>(l)] = z;
    if (l + 1 < num_layers) {
      activation = z.cwiseMax(0.0);  // ReLU
    } else {
      activation = std::move(z);
    }
  }

  // Softmax rows with max subtraction; floor keeps outputs strictly positive.
  Matrix probs(activation.rows(), activation.cols());
  for (Eigen::Index r = 0; r < activation.rows(); ++r) {
    const double row_max = activation.row(r).maxCoeff();
    Eigen::RowVectorXd e = (activation.row(r).array() - row_max).exp();
    probs.row(r) = (e / e.sum()).cwiseMax(kProbFloor);
  }
  check_finite(probs, num_layers - 1, "softmax output");
  if (cache) cache->probs = probs;
  return probs;
}

Gradients Gradients::zeros_like(const MlpModel& model) {
  Gradients g;
  for (const Layer& layer : model.layers()) {
    g.weight.push_back(Matrix::Zero(layer.weight.rows(), layer.weight.cols()));
    g.bias.push_back(Vector::Zero(layer.bias.size()));
  }
  return g;
}

void Gradients::check_congruent(const MlpModel& model) const {
  if (weight.size() != model.layers().size() || bias.size() != model.layers().size()) {
    throw std::invalid_argument("gradient layer count does not match model");
  }
  for (std::size_t l = 0; l < weight.size(); ++l) {
    const Layer& layer = model.layers()[l];
    if (weight[l].rows() != layer.weight.rows() || weight[l].cols() != layer.weight.cols() ||
        bias[l].size() != layer.bias.size()) {
      throw std::invalid_argument("gradient shape mismatch at layer " + std::to_string(l));
    }
  }
}

Gradients backward_from_probs(const MlpModel& model, const ForwardCache& cache,
                              const Matrix& dprobs) {
  const int num_layers = model.num_layers();
  if (dprobs.rows() != cache.probs.rows() || dprobs.cols() != cache.probs.cols()) {
    throw std::invalid_argument("backward: dprobs shape does not match cached probs");
  }

  // Softmax Jacobian-vector product per row: dz = p .* (g - <g, p>).
  const Vector row_dot = (dprobs.array() * cache.probs.array()).rowwise().sum();
  Matrix delta =
      cache.probs.array() * (dprobs.array().colwise() - row_dot.array());

  Gradients grads = Gradients::zeros_like(model);
  for (int l = num_layers - 1; l >= 0; --l) {
    const std::size_t ul = static_cast<std::size_t>(l);
    check_finite(delta, l, "gradient");
    grads.weight[ul] = delta.transpose() * cache.inputs[ul];
    grads.bias[ul] = delta.colwise().sum();
    if (l > 0) {
      Matrix upstream = delta * model.layers()[ul].weight;
      // ReLU mask from the previous layer's pre-activation.
      delta = (cache.pre_acts[ul - 1].array() > 0.0).cast<double>() * upstream.array();
    }
  }
  return grads;
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::ce: return "ce";
    case LossKind::forward_pointwise: return "forward_pointwise";
    case LossKind::reweight_pointwise: return "reweight_pointwise";
    case LossKind::f_class2simi: return "f_class2simi";
    case LossKind::r_class2simi: return "r_class2simi";
  }
  throw std::logic_error("unknown loss kind");
}

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "ce") return LossKind::ce;
  if (name == "forward_pointwise") return LossKind::forward_pointwise;
  if (name == "reweight_pointwise") return LossKind::reweight_pointwise;
  if (name == "f_class2simi") return LossKind::f_class2simi;
  if (name == "r_class2simi") return LossKind::r_class2simi;
  throw std::invalid_argument("unknown loss kind: " + name);
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("momentum must lie in [0,1)");
  if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be >= 0");
  if (batch_size < 2) throw std::invalid_argument("batch_size must be >= 2");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(probability_clamp > 0.0 && probability_clamp < 0.1)) {
    throw std::invalid_argument("probability_clamp must lie in (0, 0.1)");
  }
  for (int h : hidden_dims) {
    if (h < 1) throw std::invalid_argument("hidden_dims must be positive");
  }
}

SgdOptimizer::SgdOptimizer(const MlpModel& model)
    : velocity_(Gradients::zeros_like(model)) {}

void SgdOptimizer::step(MlpModel& model, const Gradients& grads, const TrainConfig& config) {
  grads.check_congruent(model);
  velocity_.check_congruent(model);
  const double lr = config.learning_rate;
  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    Layer& layer = model.layers()[l];
    velocity_.weight[l] = config.momentum * velocity_.weight[l] + grads.weight[l];
    velocity_.bias[l] = config.momentum * velocity_.bias[l] + grads.bias[l];
    layer.weight -= lr * velocity_.weight[l] + lr * config.weight_decay * layer.weight;
    layer.bias -= lr * velocity_.bias[l];
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      throw std::runtime_error("layer " + std::to_string(l) + ": non-finite update");
    }
  }
}

void save_checkpoint(const MlpModel& model, const std::string& path) {
  json doc;
  doc["format"] = "class2simi.checkpoint";
  doc["version"] = 1;
  doc["activation"] = "relu";
  doc["dims"] = model.dims();
  json layers = json::array();
  for (const Layer& layer : model.layers()) {
    json jl;
    jl["out"] = layer.weight.rows();
    jl["in"] = layer.weight.cols();
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(layer.weight.size()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) w.push_back(layer.weight(r, c));
    }
    jl["weight"] = std::move(w);
    jl["bias"] = std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size());
    layers.push_back(std::move(jl));
  }
  doc["layers"] = std::move(layers);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << doc.dump(2) << "\n";
}

MlpModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("checkpoint parse error: " + std::string(e.what()));
  }
  if (doc.value("format", "") != "class2simi.checkpoint") {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  if (doc.value("version", 0) != 1) {
    throw std::runtime_error("unsupported checkpoint version in " + path);
  }

  std::vector<Layer> layers;
  for (const json& jl : doc.at("layers")) {
    const Eigen::Index out_dim = jl.at("out").get<Eigen::Index>();
    const Eigen::Index in_dim = jl.at("in").get<Eigen::Index>();
    const auto w = jl.at("weight").get<std::vector<double>>();
    const auto b = jl.at("bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != out_dim * in_dim ||
        static_cast<Eigen::Index>(b.size()) != out_dim) {
      throw std::runtime_error("checkpoint layer has inconsistent shapes");
    }
    Layer layer;
    layer.weight.resize(out_dim, in_dim);
    for (Eigen::Index r = 0; r < out_dim; ++r) {
      for (Eigen::Index c = 0; c < in_dim; ++c) {
        layer.weight(r, c) = w[static_cast<std::size_t>(r * in_dim + c)];
      }
    }
    layer.bias = Eigen::Map<const Vector>(b.data(), out_dim);
    layers.push_back(std::move(layer));
  }
  return MlpModel(std::move(layers));
}

}  // namespace c2s
