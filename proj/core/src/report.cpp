#include "class2simi/report.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace c2s {
namespace {

using Json = nlohmann::ordered_json;

void reject_unknown_keys(const Json& obj, const std::string& where,
                         const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (allowed.find(key) == allowed.end()) {
      throw std::invalid_argument("unknown key '" + key + "' in " + where);
    }
  }
}

// get<T> with the field path in the error message.
template <typename T>
T field(const Json& obj, const std::string& where, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw std::invalid_argument("bad value for " + where + "." + key + ": " + e.what());
  }
}

void parse_dataset(const Json& j, DatasetSpec& d) {
  reject_unknown_keys(j, "dataset",
                      {"source", "classes", "per_class", "dim", "separation", "spread",
                       "test_per_class", "train_csv", "test_csv", "label_column",
                       "has_header"});
  d.source = field(j, "dataset", "source", d.source);
  d.classes = field(j, "dataset", "classes", d.classes);
  d.per_class = field(j, "dataset", "per_class", d.per_class);
  d.dim = field(j, "dataset", "dim", d.dim);
  d.separation = field(j, "dataset", "separation", d.separation);
  d.spread = field(j, "dataset", "spread", d.spread);
  d.test_per_class = field(j, "dataset", "test_per_class", d.test_per_class);
  d.train_csv = field(j, "dataset", "train_csv", d.train_csv);
  d.test_csv = field(j, "dataset", "test_csv", d.test_csv);
  d.label_column = field(j, "dataset", "label_column", d.label_column);
  d.has_header = field(j, "dataset", "has_header", d.has_header);
}

void parse_noise(const Json& j, NoiseSpec& n) {
  reject_unknown_keys(j, "noise", {"type", "rate", "matrix_path", "labels_already_noisy"});
  n.type = noise_type_from_string(field<std::string>(j, "noise", "type", to_string(n.type)));
  n.rate = field(j, "noise", "rate", n.rate);
  n.matrix_path = field(j, "noise", "matrix_path", n.matrix_path);
  n.labels_already_noisy = field(j, "noise", "labels_already_noisy", n.labels_already_noisy);
}

void parse_train(const Json& j, TrainConfig& t) {
  reject_unknown_keys(j, "train",
                      {"learning_rate", "momentum", "weight_decay", "batch_size", "epochs",
                       "probability_clamp", "hidden_dims"});
  t.learning_rate = field(j, "train", "learning_rate", t.learning_rate);
  t.momentum = field(j, "train", "momentum", t.momentum);
  t.weight_decay = field(j, "train", "weight_decay", t.weight_decay);
  t.batch_size = field(j, "train", "batch_size", t.batch_size);
  t.epochs = field(j, "train", "epochs", t.epochs);
  t.probability_clamp = field(j, "train", "probability_clamp", t.probability_clamp);
  t.hidden_dims = field(j, "train", "hidden_dims", t.hidden_dims);
}

void parse_stage2(const Json& j, Stage2Overrides& s) {
  reject_unknown_keys(j, "stage2",
                      {"learning_rate", "momentum", "weight_decay", "batch_size", "epochs",
                       "probability_clamp"});
  if (j.contains("learning_rate"))
    s.learning_rate = field<double>(j, "stage2", "learning_rate", 0.0);
  if (j.contains("momentum")) s.momentum = field<double>(j, "stage2", "momentum", 0.0);
  if (j.contains("weight_decay"))
    s.weight_decay = field<double>(j, "stage2", "weight_decay", 0.0);
  if (j.contains("batch_size")) s.batch_size = field<int>(j, "stage2", "batch_size", 0);
  if (j.contains("epochs")) s.epochs = field<int>(j, "stage2", "epochs", 0);
  if (j.contains("probability_clamp"))
    s.probability_clamp = field<double>(j, "stage2", "probability_clamp", 0.0);
}

void parse_transition(const Json& j, ExperimentConfig& cfg) {
  reject_unknown_keys(j, "transition",
                      {"source", "perturb_level", "anchor_percentile", "prior"});
  cfg.tc_source = tc_source_from_string(
      field<std::string>(j, "transition", "source", to_string(cfg.tc_source)));
  cfg.perturb_level = field(j, "transition", "perturb_level", cfg.perturb_level);
  cfg.anchor_percentile = field(j, "transition", "anchor_percentile", cfg.anchor_percentile);
  cfg.prior_mode = field(j, "transition", "prior", cfg.prior_mode);
}

Json number_or_null(double v) {
  if (std::isnan(v) || std::isinf(v)) return nullptr;
  return v;
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json config_json(const ExperimentConfig& cfg) {
  Json j;
  j["method"] = to_string(cfg.method);
  j["seed"] = cfg.seed;
  j["validation_fraction"] = cfg.validation_fraction;
  j["cold_start"] = cfg.cold_start;
  Json d;
  d["source"] = cfg.dataset.source;
  d["classes"] = cfg.dataset.classes;
  d["per_class"] = cfg.dataset.per_class;
  d["dim"] = cfg.dataset.dim;
  d["separation"] = cfg.dataset.separation;
  d["spread"] = cfg.dataset.spread;
  d["test_per_class"] = cfg.dataset.test_per_class;
  d["train_csv"] = cfg.dataset.train_csv;
  d["test_csv"] = cfg.dataset.test_csv;
  d["label_column"] = cfg.dataset.label_column;
  d["has_header"] = cfg.dataset.has_header;
  j["dataset"] = std::move(d);
  Json n;
  n["type"] = to_string(cfg.noise.type);
  n["rate"] = cfg.noise.rate;
  n["matrix_path"] = cfg.noise.matrix_path;
  n["labels_already_noisy"] = cfg.noise.labels_already_noisy;
  j["noise"] = std::move(n);
  Json t;
  t["learning_rate"] = cfg.train.learning_rate;
  t["momentum"] = cfg.train.momentum;
  t["weight_decay"] = cfg.train.weight_decay;
  t["batch_size"] = cfg.train.batch_size;
  t["epochs"] = cfg.train.epochs;
  t["probability_clamp"] = cfg.train.probability_clamp;
  t["hidden_dims"] = cfg.train.hidden_dims;
  j["train"] = std::move(t);
  Json s2 = Json::object();
  if (cfg.stage2.learning_rate) s2["learning_rate"] = *cfg.stage2.learning_rate;
  if (cfg.stage2.momentum) s2["momentum"] = *cfg.stage2.momentum;
  if (cfg.stage2.weight_decay) s2["weight_decay"] = *cfg.stage2.weight_decay;
  if (cfg.stage2.batch_size) s2["batch_size"] = *cfg.stage2.batch_size;
  if (cfg.stage2.epochs) s2["epochs"] = *cfg.stage2.epochs;
  if (cfg.stage2.probability_clamp) s2["probability_clamp"] = *cfg.stage2.probability_clamp;
  j["stage2"] = std::move(s2);
  Json tr;
  tr["source"] = to_string(cfg.tc_source);
  tr["perturb_level"] = cfg.perturb_level;
  tr["anchor_percentile"] = cfg.anchor_percentile;
  tr["prior"] = cfg.prior_mode;
  j["transition"] = std::move(tr);
  return j;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) {
    throw std::invalid_argument("config must be a JSON object");
  }
  reject_unknown_keys(j, "config",
                      {"method", "seed", "validation_fraction", "cold_start", "dataset",
                       "noise", "train", "stage2", "transition"});
  ExperimentConfig cfg;
  cfg.method =
      method_from_string(field<std::string>(j, "config", "method", to_string(cfg.method)));
  cfg.seed = field(j, "config", "seed", cfg.seed);
  cfg.validation_fraction =
      field(j, "config", "validation_fraction", cfg.validation_fraction);
  cfg.cold_start = field(j, "config", "cold_start", cfg.cold_start);
  if (j.contains("dataset")) parse_dataset(j.at("dataset"), cfg.dataset);
  if (j.contains("noise")) parse_noise(j.at("noise"), cfg.noise);
  if (j.contains("train")) parse_train(j.at("train"), cfg.train);
  if (j.contains("stage2")) parse_stage2(j.at("stage2"), cfg.stage2);
  if (j.contains("transition")) parse_transition(j.at("transition"), cfg);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return parse_experiment_config(read_text_file(path));
}

std::string config_to_json(const ExperimentConfig& cfg) {
  return config_json(cfg).dump(2) + "\n";
}

std::string report_to_json(const RunReport& rep, bool include_timing) {
  Json j;
  j["format"] = "class2simi.report";
  j["version"] = 1;
  j["config"] = config_json(rep.config);
  j["num_classes"] = rep.num_classes;

  Json data;
  data["analytic_class_noise"] = number_or_null(rep.analytic_class_noise);
  data["analytic_simi_noise"] = number_or_null(rep.analytic_simi_noise);
  data["empirical_class_noise"] = number_or_null(rep.empirical_class_noise);
  data["empirical_simi_noise"] = number_or_null(rep.empirical_simi_noise);
  j["data"] = std::move(data);

  if (rep.tc_used) {
    Json tr;
    tr["tc"] = matrix_to_json(*rep.tc_used);
    tr["ts"] = rep.ts_used ? matrix_to_json(*rep.ts_used) : Json(nullptr);
    if (rep.learnability) {
      tr["tc_invertible"] = rep.learnability->tc_invertible;
      tr["tc_condition"] = number_or_null(rep.learnability->tc_condition_estimate);
      tr["ts_learnable"] = rep.learnability->ts_learnable;
    }
    j["transition"] = std::move(tr);
  } else {
    j["transition"] = nullptr;
  }

  Json stages = Json::array();
  for (const StageReport& sr : rep.stages) {
    Json s;
    s["name"] = sr.name;
    s["loss"] = to_string(sr.loss_kind);
    s["selected_epoch"] = sr.selected_epoch;
    s["best_val_accuracy"] = number_or_null(sr.best_val_accuracy);
    s["test_accuracy"] = number_or_null(sr.test_accuracy);
    s["pair_accuracy"] = number_or_null(sr.pair_accuracy);
    Json epochs = Json::array();
    for (const EpochStats& e : sr.epochs) {
      Json ej;
      ej["epoch"] = e.epoch;
      ej["train_loss"] = number_or_null(e.train_loss);
      ej["val_accuracy"] = number_or_null(e.val_accuracy);
      ej["test_accuracy"] = number_or_null(e.test_accuracy);
      epochs.push_back(std::move(ej));
    }
    s["epochs"] = std::move(epochs);
    stages.push_back(std::move(s));
  }
  j["stages"] = std::move(stages);

  Json fin;
  fin["test_accuracy"] = number_or_null(rep.final_test_accuracy);
  fin["pair_accuracy"] = number_or_null(rep.final_pair_accuracy);
  j["final"] = std::move(fin);

  if (include_timing) {
    j["wall_seconds"] = rep.wall_seconds;
  }
  return j.dump(2) + "\n";
}

std::string robustness_to_csv(const std::vector<RobustnessPoint>& points) {
  std::ostringstream os;
  os << "level,method,accuracy\n";
  for (const RobustnessPoint& p : points) {
    os << Json(p.level).dump() << ',' << to_string(p.method) << ','
       << Json(p.accuracy).dump() << '\n';
  }
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw std::runtime_error("cannot write file: " + path);
  }
  os << content;
  if (!os.flush()) {
    throw std::runtime_error("failed while writing file: " + path);
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw std::runtime_error("cannot open file: " + path);
  }
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace c2s
