#include "class2simi/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "class2simi/rng.hpp"

namespace c2s {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr long long kDiagnosticPairBudget = 2'000'000;

// Seed stream tags, all derived from ExperimentConfig::seed.
enum : std::uint64_t {
  kStreamBlobsTrain = 1,
  kStreamBlobsTest = 2,
  kStreamCorrupt = 3,
  kStreamSplit = 4,
  kStreamInit = 5,
  kStreamColdInit = 6,
  kStreamTrain = 7,
  kStreamPerturb = 8,
  kStreamDiagnostics = 9,
  kStreamPairEval = 10,
};

bool is_pairwise(LossKind k) {
  return k == LossKind::f_class2simi || k == LossKind::r_class2simi;
}

Matrix rows_of(const Matrix& src, const std::vector<int>& idx, int begin, int end) {
  Matrix out(end - begin, src.cols());
  for (int r = begin; r < end; ++r) {
    out.row(r - begin) = src.row(idx[r]);
  }
  return out;
}

std::vector<int> labels_of(const std::vector<int>& src, const std::vector<int>& idx,
                           int begin, int end) {
  std::vector<int> out;
  out.reserve(end - begin);
  for (int r = begin; r < end; ++r) {
    out.push_back(src[idx[r]]);
  }
  return out;
}

std::vector<int> model_dims(int input, const std::vector<int>& hidden, int classes) {
  std::vector<int> dims;
  dims.push_back(input);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(classes);
  return dims;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::ce: return "ce";
    case Method::forward: return "forward";
    case Method::reweight: return "reweight";
    case Method::f_class2simi: return "f_class2simi";
    case Method::r_class2simi: return "r_class2simi";
  }
  throw std::logic_error("unreachable method");
}

Method method_from_string(const std::string& s) {
  if (s == "ce") return Method::ce;
  if (s == "forward") return Method::forward;
  if (s == "reweight") return Method::reweight;
  if (s == "f_class2simi") return Method::f_class2simi;
  if (s == "r_class2simi") return Method::r_class2simi;
  throw std::invalid_argument(
      "unknown method '" + s +
      "' (expected ce, forward, reweight, f_class2simi or r_class2simi)");
}

std::string to_string(NoiseType t) {
  switch (t) {
    case NoiseType::none: return "none";
    case NoiseType::symmetric: return "symmetric";
    case NoiseType::asymmetric: return "asymmetric";
    case NoiseType::matrix_file: return "matrix_file";
  }
  throw std::logic_error("unreachable noise type");
}

NoiseType noise_type_from_string(const std::string& s) {
  if (s == "none") return NoiseType::none;
  if (s == "symmetric") return NoiseType::symmetric;
  if (s == "asymmetric") return NoiseType::asymmetric;
  if (s == "matrix_file") return NoiseType::matrix_file;
  throw std::invalid_argument("unknown noise type '" + s +
                              "' (expected none, symmetric, asymmetric or matrix_file)");
}

std::string to_string(TcSource s) {
  switch (s) {
    case TcSource::true_matrix: return "true";
    case TcSource::estimated: return "estimated";
    case TcSource::perturbed: return "perturbed";
  }
  throw std::logic_error("unreachable tc source");
}

TcSource tc_source_from_string(const std::string& s) {
  if (s == "true") return TcSource::true_matrix;
  if (s == "estimated") return TcSource::estimated;
  if (s == "perturbed") return TcSource::perturbed;
  throw std::invalid_argument("unknown transition source '" + s +
                              "' (expected true, estimated or perturbed)");
}

void DatasetSpec::validate() const {
  if (source == "blobs") {
    if (!train_csv.empty() || !test_csv.empty()) {
      throw std::invalid_argument("dataset source is 'blobs' but a csv path is set");
    }
    if (classes < 2) throw std::invalid_argument("blobs need at least 2 classes");
    if (per_class < 1) throw std::invalid_argument("per_class must be positive");
    if (dim < 2) throw std::invalid_argument("blob dimension must be at least 2");
    if (!(separation > 0.0)) throw std::invalid_argument("separation must be positive");
    if (!(spread > 0.0)) throw std::invalid_argument("spread must be positive");
    if (test_per_class != -1 && test_per_class < 1) {
      throw std::invalid_argument("test_per_class must be positive (or -1 for the default)");
    }
  } else if (source == "csv") {
    if (train_csv.empty()) {
      throw std::invalid_argument("dataset source is 'csv' but train_csv is empty");
    }
  } else {
    throw std::invalid_argument("unknown dataset source '" + source +
                                "' (expected blobs or csv)");
  }
}

void NoiseSpec::validate() const {
  if (type == NoiseType::matrix_file) {
    if (matrix_path.empty()) {
      throw std::invalid_argument("noise type matrix_file needs matrix_path");
    }
  } else if (!matrix_path.empty()) {
    throw std::invalid_argument("matrix_path is only valid with noise type matrix_file");
  }
  if (type == NoiseType::symmetric || type == NoiseType::asymmetric) {
    if (!(rate >= 0.0) || !(rate < 1.0)) {
      throw std::invalid_argument("noise rate must lie in [0, 1), got " +
                                  std::to_string(rate));
    }
  }
}

void ExperimentConfig::validate() const {
  dataset.validate();
  noise.validate();
  train.validate();
  stage2_train().validate();
  if (!(validation_fraction >= 0.0) || !(validation_fraction <= 0.5)) {
    throw std::invalid_argument("validation_fraction must lie in [0, 0.5]");
  }
  if (!(anchor_percentile > 0.0) || !(anchor_percentile <= 100.0)) {
    throw std::invalid_argument("anchor_percentile must lie in (0, 100]");
  }
  if (prior_mode != "uniform" && prior_mode != "empirical") {
    throw std::invalid_argument("prior_mode must be uniform or empirical, got '" +
                                prior_mode + "'");
  }
  if (tc_source == TcSource::perturbed) {
    if (!(perturb_level >= 0.0) || !(perturb_level <= 1.0)) {
      throw std::invalid_argument("perturb_level must lie in [0, 1]");
    }
  } else if (perturb_level != 0.0) {
    throw std::invalid_argument("perturb_level is only valid with tc_source perturbed");
  }
  if (noise.labels_already_noisy && dataset.source != "csv") {
    throw std::invalid_argument("labels_already_noisy requires a csv dataset");
  }
}

TrainConfig ExperimentConfig::stage2_train() const {
  TrainConfig t = train;
  t.learning_rate = stage2.learning_rate.value_or(train.learning_rate * 0.2);
  t.momentum = stage2.momentum.value_or(train.momentum);
  t.weight_decay = stage2.weight_decay.value_or(train.weight_decay);
  t.batch_size = stage2.batch_size.value_or(train.batch_size);
  t.epochs = stage2.epochs.value_or(train.epochs);
  t.probability_clamp = stage2.probability_clamp.value_or(train.probability_clamp);
  return t;
}

DataBundle materialize(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& dspec = cfg.dataset;

  LabeledDataset pool;
  LabeledDataset test;
  bool have_test = false;
  if (dspec.source == "blobs") {
    pool = generate_blobs(dspec.classes, dspec.per_class, dspec.dim, dspec.separation,
                          dspec.spread, derive_seed(cfg.seed, kStreamBlobsTrain));
    const int tpc =
        dspec.test_per_class < 0 ? std::max(dspec.per_class / 5, 1) : dspec.test_per_class;
    test = generate_blobs(dspec.classes, tpc, dspec.dim, dspec.separation, dspec.spread,
                          derive_seed(cfg.seed, kStreamBlobsTest));
    have_test = true;
  } else {
    pool = load_csv(dspec.train_csv, CsvSchema{dspec.label_column, dspec.has_header});
    if (!dspec.test_csv.empty()) {
      test = load_csv(dspec.test_csv, CsvSchema{dspec.label_column, dspec.has_header});
      if (test.dim() != pool.dim()) {
        throw std::invalid_argument("train csv has " + std::to_string(pool.dim()) +
                                    " features but test csv has " +
                                    std::to_string(test.dim()));
      }
      const int c = std::max(pool.num_classes, test.num_classes);
      pool.num_classes = c;
      test.num_classes = c;
      have_test = true;
    }
  }

  DataBundle out;
  std::optional<ClassTransitionMatrix> noise_tc;
  if (cfg.noise.type != NoiseType::none) {
    switch (cfg.noise.type) {
      case NoiseType::symmetric:
        noise_tc = make_symmetric(pool.num_classes, cfg.noise.rate);
        break;
      case NoiseType::asymmetric:
        noise_tc = make_asymmetric(pool.num_classes, cfg.noise.rate);
        break;
      case NoiseType::matrix_file: {
        ClassTransitionMatrix m = load_class_transition_matrix(cfg.noise.matrix_path);
        if (dspec.source == "blobs" && m.num_classes() != pool.num_classes) {
          throw std::invalid_argument("noise matrix is " + std::to_string(m.num_classes()) +
                                      "x" + std::to_string(m.num_classes()) + " but blobs have " +
                                      std::to_string(pool.num_classes) + " classes");
        }
        if (m.num_classes() < pool.num_classes) {
          throw std::invalid_argument("noise matrix covers " +
                                      std::to_string(m.num_classes()) +
                                      " classes but labels go up to " +
                                      std::to_string(pool.num_classes - 1));
        }
        pool.num_classes = m.num_classes();
        if (have_test) test.num_classes = m.num_classes();
        noise_tc = std::move(m);
        break;
      }
      case NoiseType::none:
        break;
    }
  }

  if (cfg.noise.labels_already_noisy) {
    // File labels are observations; the noise spec only describes them.
    pool.noisy_labels = std::move(pool.clean_labels);
    pool.clean_labels.reset();
    out.true_tc = std::move(noise_tc);
  } else if (cfg.noise.type == NoiseType::none) {
    pool.noisy_labels = pool.clean_labels;
    out.true_tc = ClassTransitionMatrix::identity(pool.num_classes);
  } else {
    pool = corrupt_labels(pool, *noise_tc, derive_seed(cfg.seed, kStreamCorrupt));
    out.true_tc = std::move(noise_tc);
  }
  pool.validate();

  out.num_classes = pool.num_classes;
  if (pool.clean_labels && pool.noisy_labels) {
    out.empirical_class_noise = empirical_class_noise_rate(pool);
    out.empirical_simi_noise = empirical_simi_noise_rate(
        pool, kDiagnosticPairBudget, derive_seed(cfg.seed, kStreamDiagnostics));
  }

  if (cfg.prior_mode == "uniform") {
    out.prior = ClassPrior::uniform(out.num_classes);
  } else {
    Vector counts = Vector::Zero(out.num_classes);
    for (int y : *pool.noisy_labels) counts[y] += 1.0;
    out.prior = ClassPrior(counts);
  }

  const int n = pool.n();
  const int n_val = static_cast<int>(std::floor(n * cfg.validation_fraction));
  if (n - n_val < 2) {
    throw std::invalid_argument("training split would have fewer than 2 instances (" +
                                std::to_string(n) + " rows, " + std::to_string(n_val) +
                                " reserved for validation)");
  }
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  deterministic_shuffle(idx, derive_seed(cfg.seed, kStreamSplit));

  out.x_val = rows_of(pool.features, idx, 0, n_val);
  out.noisy_val = labels_of(*pool.noisy_labels, idx, 0, n_val);
  out.x_train = rows_of(pool.features, idx, n_val, n);
  out.noisy_train = labels_of(*pool.noisy_labels, idx, n_val, n);
  if (pool.clean_labels) {
    out.clean_train = labels_of(*pool.clean_labels, idx, n_val, n);
  }

  if (have_test) {
    out.x_test = test.features;
    out.clean_test = test.clean_labels;
  } else {
    out.x_test = Matrix(0, pool.dim());
  }
  return out;
}

double classification_accuracy(const MlpModel& model, const Matrix& x,
                               const std::vector<int>& labels) {
  if (x.rows() == 0) return kNaN;
  if (static_cast<int>(labels.size()) != x.rows()) {
    throw std::invalid_argument("got " + std::to_string(labels.size()) + " labels for " +
                                std::to_string(x.rows()) + " rows");
  }
  const Matrix probs = forward(model, x);
  int hits = 0;
  for (int i = 0; i < probs.rows(); ++i) {
    int arg = 0;
    probs.row(i).maxCoeff(&arg);
    hits += (arg == labels[i]);
  }
  return static_cast<double>(hits) / probs.rows();
}

double pair_prediction_accuracy(const MlpModel& model, const Matrix& x,
                                const std::vector<int>& labels, long long max_pairs,
                                std::uint64_t seed) {
  const int n = static_cast<int>(x.rows());
  if (n < 2) return kNaN;
  if (static_cast<int>(labels.size()) != n) {
    throw std::invalid_argument("got " + std::to_string(labels.size()) + " labels for " +
                                std::to_string(n) + " rows");
  }
  const Matrix probs = forward(model, x);
  const auto agree = [&](int i, int j) {
    const bool predicted = probs.row(i).dot(probs.row(j)) > 0.5;
    const bool actual = labels[i] == labels[j];
    return predicted == actual;
  };
  const long long total = static_cast<long long>(n) * (n - 1) / 2;
  long long hits = 0;
  if (total <= max_pairs) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) hits += agree(i, j);
    return static_cast<double>(hits) / total;
  }
  SplitMix64 rng(seed);
  for (long long k = 0; k < max_pairs; ++k) {
    const int i = rng.next_index(n);
    int j = rng.next_index(n);
    while (j == i) j = rng.next_index(n);
    hits += agree(i, j);
  }
  return static_cast<double>(hits) / max_pairs;
}

StageReport train_loop(MlpModel& model, const DataBundle& data, const TrainConfig& config,
                       const ClassTransitionMatrix* tc, const SimilarityTransitionMatrix* ts,
                       const std::string& stage_name) {
  config.validate();
  const bool pairwise = is_pairwise(config.loss_kind);
  const int n = static_cast<int>(data.x_train.rows());
  if (n < 2) {
    throw std::invalid_argument("training needs at least 2 instances, got " +
                                std::to_string(n));
  }

  StageReport rep;
  rep.name = stage_name;
  rep.loss_kind = config.loss_kind;

  const bool has_val = data.x_val.rows() > 0;
  const bool has_test = data.x_test.rows() > 0 && data.clean_test.has_value();
  const auto val_acc = [&](const MlpModel& m) {
    return has_val ? classification_accuracy(m, data.x_val, data.noisy_val) : kNaN;
  };
  const auto test_acc = [&](const MlpModel& m) {
    return has_test ? classification_accuracy(m, data.x_test, *data.clean_test) : kNaN;
  };

  // The untouched model competes too: a warm start already fits the noisy
  // validation set, and later epochs must beat it to replace it.
  MlpModel best = model;
  int best_epoch = 0;
  double best_val = val_acc(model);
  rep.best_val_accuracy = best_val;

  SgdOptimizer opt(model);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    deterministic_shuffle(order, derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    double loss_sum = 0.0;
    int batches = 0;
    for (int start = 0; start < n; start += config.batch_size) {
      const int stop = std::min(start + config.batch_size, n);
      if (pairwise && stop - start < 2) break;  // a lone instance forms no pair
      const Matrix xb = rows_of(data.x_train, order, start, stop);
      const std::vector<int> yb = labels_of(data.noisy_train, order, start, stop);
      const LossGrad lg =
          loss_and_grad(config.loss_kind, model, xb, yb, tc, ts, config.probability_clamp);
      opt.step(model, lg.grads, config);
      loss_sum += lg.loss;
      ++batches;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = batches > 0 ? loss_sum / batches : kNaN;
    stats.val_accuracy = val_acc(model);
    stats.test_accuracy = test_acc(model);
    rep.epochs.push_back(stats);

    if (has_val && stats.val_accuracy > best_val) {
      best_val = stats.val_accuracy;
      best_epoch = epoch;
      best = model;
    }
  }

  if (has_val) {
    model = best;
    rep.selected_epoch = best_epoch;
    rep.best_val_accuracy = best_val;
  } else {
    rep.selected_epoch = config.epochs;
    rep.best_val_accuracy = kNaN;
  }
  rep.test_accuracy = test_acc(model);
  rep.pair_accuracy = has_test
                          ? pair_prediction_accuracy(model, data.x_test, *data.clean_test,
                                                     kDiagnosticPairBudget,
                                                     derive_seed(config.seed, kStreamPairEval))
                          : kNaN;
  return rep;
}

namespace {

LossKind pointwise_kind(Method m) {
  return m == Method::forward ? LossKind::forward_pointwise : LossKind::reweight_pointwise;
}

LossKind pairwise_kind(Method m) {
  return m == Method::f_class2simi ? LossKind::f_class2simi : LossKind::r_class2simi;
}

// Posteriors over the full pool (train + validation) for anchor estimation.
Matrix pool_posteriors(const MlpModel& model, const DataBundle& data) {
  Matrix x(data.x_train.rows() + data.x_val.rows(), data.x_train.cols());
  x.topRows(data.x_train.rows()) = data.x_train;
  if (data.x_val.rows() > 0) x.bottomRows(data.x_val.rows()) = data.x_val;
  return forward(model, x);
}

ClassTransitionMatrix require_true_tc(const DataBundle& data, const ExperimentConfig& cfg) {
  if (!data.true_tc) {
    throw std::invalid_argument(
        "tc_source '" + to_string(cfg.tc_source) +
        "' needs the noise transition matrix, but the labels arrived already noisy "
        "without one; use tc_source estimated or provide a noise matrix");
  }
  return *data.true_tc;
}

TrainConfig stage_config(const ExperimentConfig& cfg, int stage_index, bool second_stage,
                         LossKind kind) {
  TrainConfig t = second_stage ? cfg.stage2_train() : cfg.train;
  t.loss_kind = kind;
  t.seed = derive_seed(derive_seed(cfg.seed, kStreamTrain),
                       static_cast<std::uint64_t>(stage_index));
  return t;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  DataBundle data = materialize(cfg);

  RunReport rep;
  rep.config = cfg;
  rep.num_classes = data.num_classes;
  rep.empirical_class_noise = data.empirical_class_noise;
  rep.empirical_simi_noise = data.empirical_simi_noise;
  rep.analytic_class_noise = kNaN;
  rep.analytic_simi_noise = kNaN;

  MlpModel model = MlpModel::init(
      model_dims(static_cast<int>(data.x_train.cols()), cfg.train.hidden_dims,
                 data.num_classes),
      derive_seed(cfg.seed, kStreamInit));

  std::optional<ClassTransitionMatrix> tc_used;
  std::optional<SimilarityTransitionMatrix> ts_used;

  const auto resolve_direct_tc = [&]() -> ClassTransitionMatrix {
    switch (cfg.tc_source) {
      case TcSource::true_matrix:
        return require_true_tc(data, cfg);
      case TcSource::perturbed:
        return perturb_tc(require_true_tc(data, cfg), cfg.perturb_level,
                          derive_seed(cfg.seed, kStreamPerturb), cfg.perturb_level == 0.0);
      case TcSource::estimated:
        throw std::logic_error("estimated tc is resolved after the warm-up stage");
    }
    throw std::logic_error("unreachable tc source");
  };

  switch (cfg.method) {
    case Method::ce: {
      rep.stages.push_back(
          train_loop(model, data, stage_config(cfg, 1, false, LossKind::ce), nullptr,
                     nullptr, "stage1"));
      break;
    }
    case Method::forward:
    case Method::reweight: {
      const LossKind kind = pointwise_kind(cfg.method);
      if (cfg.tc_source == TcSource::estimated) {
        rep.stages.push_back(train_loop(
            model, data, stage_config(cfg, 1, false, LossKind::ce), nullptr, nullptr,
            "stage1"));
        tc_used = estimate_tc_anchor(pool_posteriors(model, data), cfg.anchor_percentile);
        if (cfg.cold_start) {
          model = MlpModel::init(model.dims(), derive_seed(cfg.seed, kStreamColdInit));
        }
        rep.stages.push_back(train_loop(model, data, stage_config(cfg, 2, true, kind),
                                        &*tc_used, nullptr, "stage2"));
      } else {
        tc_used = resolve_direct_tc();
        rep.stages.push_back(train_loop(model, data, stage_config(cfg, 1, false, kind),
                                        &*tc_used, nullptr, "stage1"));
      }
      break;
    }
    case Method::f_class2simi:
    case Method::r_class2simi: {
      const LossKind kind = pairwise_kind(cfg.method);
      rep.stages.push_back(train_loop(
          model, data, stage_config(cfg, 1, false, LossKind::ce), nullptr, nullptr,
          "stage1"));
      if (cfg.tc_source == TcSource::estimated) {
        tc_used = estimate_tc_anchor(pool_posteriors(model, data), cfg.anchor_percentile);
      } else {
        tc_used = resolve_direct_tc();
      }
      ts_used = class2simi(*tc_used, data.prior);
      rep.learnability = learnability_check(*tc_used, *ts_used);
      if (cfg.method == Method::r_class2simi && !rep.learnability->ts_learnable) {
        const double diag = (*ts_used)(0, 0) + (*ts_used)(1, 1);
        throw std::runtime_error(
            "refusing to run r_class2simi: the similarity transition matrix is not "
            "learnable (T00 + T11 = " +
            std::to_string(diag) + " <= 1), so reweighting cannot be trusted");
      }
      if (cfg.cold_start) {
        model = MlpModel::init(model.dims(), derive_seed(cfg.seed, kStreamColdInit));
      }
      rep.stages.push_back(train_loop(model, data, stage_config(cfg, 2, true, kind), nullptr,
                                      &*ts_used, "stage2"));
      break;
    }
  }

  if (tc_used && !rep.learnability) {
    // Pointwise corrections still report invertibility diagnostics.
    rep.learnability = learnability_check(*tc_used, class2simi(*tc_used, data.prior));
  }
  if (tc_used) rep.tc_used = tc_used->entries();
  if (ts_used) rep.ts_used = ts_used->entries();

  // Noise rates describe the data, so prefer the matrix that generated it;
  // an estimate stands in when no ground truth exists.
  const ClassTransitionMatrix* rate_tc =
      data.true_tc ? &*data.true_tc : (tc_used ? &*tc_used : nullptr);
  if (rate_tc != nullptr) {
    rep.analytic_class_noise = class_noise_rate(*rate_tc, data.prior);
    rep.analytic_simi_noise = simi_noise_rate(class2simi(*rate_tc, data.prior),
                                              data.prior.pair_similar_prior());
  }

  rep.final_test_accuracy = rep.stages.back().test_accuracy;
  rep.final_pair_accuracy = rep.stages.back().pair_accuracy;
  rep.final_model = std::move(model);
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

std::vector<RobustnessPoint> run_matrix_robustness(const ExperimentConfig& base,
                                                   const std::vector<double>& levels,
                                                   const std::vector<Method>& methods) {
  if (levels.empty()) throw std::invalid_argument("robustness needs at least one level");
  if (methods.empty()) throw std::invalid_argument("robustness needs at least one method");
  for (double l : levels) {
    if (!(l >= 0.0) || !(l <= 1.0)) {
      throw std::invalid_argument("perturbation level must lie in [0, 1], got " +
                                  std::to_string(l));
    }
  }
  for (Method m : methods) {
    if (m == Method::ce) {
      throw std::invalid_argument("ce uses no transition matrix; robustness to matrix "
                                  "perturbation is undefined for it");
    }
  }
  ExperimentConfig cfg = base;
  cfg.tc_source = TcSource::true_matrix;  // perturbation handled here
  cfg.perturb_level = 0.0;
  cfg.validate();

  DataBundle data = materialize(cfg);
  const ClassTransitionMatrix tc_true = require_true_tc(data, cfg);

  std::vector<ClassTransitionMatrix> tc_levels;
  tc_levels.reserve(levels.size());
  for (std::size_t li = 0; li < levels.size(); ++li) {
    tc_levels.push_back(perturb_tc(
        tc_true, levels[li],
        derive_seed(derive_seed(cfg.seed, kStreamPerturb), static_cast<std::uint64_t>(li)),
        levels[li] == 0.0));
  }

  const std::vector<int> dims = model_dims(
      static_cast<int>(data.x_train.cols()), cfg.train.hidden_dims, data.num_classes);

  std::vector<RobustnessPoint> points;
  for (Method method : methods) {
    const bool pairwise =
        method == Method::f_class2simi || method == Method::r_class2simi;
    std::optional<MlpModel> warm;
    if (pairwise) {
      MlpModel m = MlpModel::init(dims, derive_seed(cfg.seed, kStreamInit));
      train_loop(m, data, stage_config(cfg, 1, false, LossKind::ce), nullptr, nullptr,
                 "stage1");
      warm = std::move(m);
    }
    for (std::size_t li = 0; li < levels.size(); ++li) {
      const ClassTransitionMatrix& tc_l = tc_levels[li];
      RobustnessPoint pt;
      pt.level = levels[li];
      pt.method = method;
      if (pairwise) {
        const SimilarityTransitionMatrix ts_l = class2simi(tc_l, data.prior);
        MlpModel m = cfg.cold_start
                         ? MlpModel::init(dims, derive_seed(cfg.seed, kStreamColdInit))
                         : *warm;
        const StageReport sr =
            train_loop(m, data, stage_config(cfg, 2, true, pairwise_kind(method)), nullptr,
                       &ts_l, "stage2");
        pt.accuracy = sr.test_accuracy;
      } else {
        MlpModel m = MlpModel::init(dims, derive_seed(cfg.seed, kStreamInit));
        const StageReport sr =
            train_loop(m, data, stage_config(cfg, 1, false, pointwise_kind(method)), &tc_l,
                       nullptr, "stage1");
        pt.accuracy = sr.test_accuracy;
      }
      points.push_back(pt);
    }
  }

  std::stable_sort(points.begin(), points.end(),
                   [](const RobustnessPoint& a, const RobustnessPoint& b) {
                     if (a.level != b.level) return a.level < b.level;
                     return static_cast<int>(a.method) < static_cast<int>(b.method);
                   });
  return points;
}

}  // namespace c2s
