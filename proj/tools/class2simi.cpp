// Command-line front end: data synthesis, label corruption, transition
// matrix tools, training runs, perturbation sweeps and self-verification.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "class2simi/dataset.hpp"
#include "class2simi/estimation.hpp"
#include "class2simi/pipeline.hpp"
#include "class2simi/report.hpp"
#include "class2simi/rng.hpp"
#include "class2simi/verify.hpp"

namespace {

using namespace c2s;

struct NoiseFlags {
  std::string type = "none";
  double rate = 0.4;
  std::string matrix_path;
};

void add_noise_flags(CLI::App* cmd, NoiseFlags& nf, const std::string& default_type) {
  nf.type = default_type;
  cmd->add_option("--noise", nf.type, "noise model: none, symmetric, asymmetric, matrix_file")
      ->default_val(default_type);
  cmd->add_option("--rate", nf.rate, "flip rate for symmetric/asymmetric noise")
      ->default_val(0.4);
  cmd->add_option("--matrix", nf.matrix_path, "transition matrix file for matrix_file noise");
}

ClassTransitionMatrix noise_matrix(const NoiseFlags& nf, int classes) {
  const NoiseType type = noise_type_from_string(nf.type);
  switch (type) {
    case NoiseType::symmetric:
      return make_symmetric(classes, nf.rate);
    case NoiseType::asymmetric:
      return make_asymmetric(classes, nf.rate);
    case NoiseType::matrix_file: {
      if (nf.matrix_path.empty()) {
        throw std::invalid_argument("--noise matrix_file needs --matrix");
      }
      ClassTransitionMatrix m = load_class_transition_matrix(nf.matrix_path);
      if (m.num_classes() < classes) {
        throw std::invalid_argument("matrix covers " + std::to_string(m.num_classes()) +
                                    " classes but the data has " + std::to_string(classes));
      }
      return m;
    }
    case NoiseType::none:
      return ClassTransitionMatrix::identity(classes);
  }
  throw std::logic_error("unreachable noise type");
}

std::string matrix_text(const Matrix& m) {
  std::ostringstream os;
  write_matrix(os, m);
  return os.str();
}

int run_gen_data(int classes, int per_class, int dim, double separation, double spread,
                 std::uint64_t seed, const NoiseFlags& noise, const std::string& out,
                 const std::string& matrix_out) {
  LabeledDataset ds = generate_blobs(classes, per_class, dim, separation, spread, seed);
  if (noise.type != "none") {
    const ClassTransitionMatrix tc = noise_matrix(noise, classes);
    ds = corrupt_labels(ds, tc, derive_seed(seed, 3));
    if (!matrix_out.empty()) save_class_transition_matrix(tc, matrix_out);
    std::printf("[gen-data] empirical class noise rate %.6f\n",
                empirical_class_noise_rate(ds));
  } else if (!matrix_out.empty()) {
    throw std::invalid_argument("--matrix-out without noise writes nothing");
  }
  save_csv(ds, out);
  std::printf("[gen-data] wrote %d rows (%d classes, %d features) to %s\n", ds.n(),
              ds.num_classes, ds.dim(), out.c_str());
  return 0;
}

int run_corrupt(const std::string& in, const std::string& out, const NoiseFlags& noise,
                std::uint64_t seed, int label_column, bool no_header,
                const std::string& matrix_out) {
  if (noise.type == "none") {
    throw std::invalid_argument("corrupt needs --noise symmetric, asymmetric or matrix_file");
  }
  LabeledDataset ds = load_csv(in, CsvSchema{label_column, !no_header});
  const ClassTransitionMatrix tc = noise_matrix(noise, ds.num_classes);
  ds.num_classes = tc.num_classes();
  ds = corrupt_labels(ds, tc, seed);
  save_csv(ds, out);
  if (!matrix_out.empty()) save_class_transition_matrix(tc, matrix_out);
  std::printf("[corrupt] %d rows, empirical class noise rate %.6f, wrote %s\n", ds.n(),
              empirical_class_noise_rate(ds), out.c_str());
  return 0;
}

int run_transform(const std::string& tc_path, double symmetric_rate, double asymmetric_rate,
                  int classes, const std::vector<double>& prior_weights,
                  const std::string& out, bool as_json) {
  std::optional<ClassTransitionMatrix> tc;
  if (!tc_path.empty()) {
    tc = load_class_transition_matrix(tc_path);
  } else if (symmetric_rate >= 0.0) {
    tc = make_symmetric(classes, symmetric_rate);
  } else if (asymmetric_rate >= 0.0) {
    tc = make_asymmetric(classes, asymmetric_rate);
  } else {
    throw std::invalid_argument("need one of --tc, --symmetric or --asymmetric");
  }
  const int c = tc->num_classes();
  ClassPrior prior = ClassPrior::uniform(c);
  if (!prior_weights.empty()) {
    if (static_cast<int>(prior_weights.size()) != c) {
      throw std::invalid_argument("--prior-weights needs exactly " + std::to_string(c) +
                                  " values");
    }
    prior = ClassPrior(Eigen::Map<const Vector>(prior_weights.data(), c));
  }
  const SimilarityTransitionMatrix ts = class2simi(*tc, prior);
  const LearnabilityReport learn = learnability_check(*tc, ts);
  const double class_rate = class_noise_rate(*tc, prior);
  const double simi_rate = simi_noise_rate(ts, prior.pair_similar_prior());

  if (as_json) {
    std::ostringstream os;
    os << "{\n  \"classes\": " << c << ",\n  \"ts\": [[" << ts(0, 0) << ", " << ts(0, 1)
       << "], [" << ts(1, 0) << ", " << ts(1, 1) << "]],\n  \"ts_learnable\": "
       << (learn.ts_learnable ? "true" : "false")
       << ",\n  \"tc_invertible\": " << (learn.tc_invertible ? "true" : "false")
       << ",\n  \"tc_condition\": " << learn.tc_condition_estimate
       << ",\n  \"class_noise_rate\": " << class_rate
       << ",\n  \"simi_noise_rate\": " << simi_rate << "\n}\n";
    std::fputs(os.str().c_str(), stdout);
  } else {
    std::printf("[transform] %d classes -> 2x2 similarity transition\n", c);
    std::fputs(matrix_text(ts.entries()).c_str(), stdout);
    std::printf("[transform] ts_learnable: %s (T00+T11 = %.6f)\n",
                learn.ts_learnable ? "yes" : "no", ts(0, 0) + ts(1, 1));
    std::printf("[transform] tc_invertible: %s (condition %.6g)\n",
                learn.tc_invertible ? "yes" : "no", learn.tc_condition_estimate);
    std::printf("[transform] class noise rate %.6f, similarity noise rate %.6f\n",
                class_rate, simi_rate);
  }
  if (!out.empty()) save_similarity_transition_matrix(ts, out);
  return 0;
}

int run_estimate(const std::string& checkpoint, const std::string& data, double percentile,
                 int label_column, bool no_header, const std::string& out) {
  const MlpModel model = load_checkpoint(checkpoint);
  const LabeledDataset ds = load_csv(data, CsvSchema{label_column, !no_header});
  if (ds.dim() != model.input_dim()) {
    throw std::invalid_argument("checkpoint expects " + std::to_string(model.input_dim()) +
                                " features but the csv has " + std::to_string(ds.dim()));
  }
  std::vector<int> anchors;
  const ClassTransitionMatrix tc_hat =
      estimate_tc_anchor(model, ds.features, percentile, &anchors);
  std::fputs(matrix_text(tc_hat.entries()).c_str(), stdout);
  std::printf("[estimate-tc] anchors:");
  for (int a : anchors) std::printf(" %d", a);
  std::printf("\n");
  if (!out.empty()) save_class_transition_matrix(tc_hat, out);
  return 0;
}

int run_train(const std::string& config_path, const std::string& method_flag,
              std::optional<std::uint64_t> seed_flag, const std::string& out,
              const std::string& artifacts_dir, bool quiet, bool no_timing,
              bool print_config) {
  ExperimentConfig cfg;
  if (!config_path.empty()) cfg = load_experiment_config(config_path);
  if (!method_flag.empty()) cfg.method = method_from_string(method_flag);
  if (seed_flag) cfg.seed = *seed_flag;
  cfg.validate();

  if (print_config) {
    std::fputs(config_to_json(cfg).c_str(), stdout);
    return 0;
  }

  const RunReport rep = run_experiment(cfg);
  if (!quiet) {
    for (const StageReport& s : rep.stages) {
      std::printf("[train] %s %s: selected epoch %d/%d, val %.4f, test %.4f\n",
                  s.name.c_str(), to_string(s.loss_kind).c_str(), s.selected_epoch,
                  static_cast<int>(s.epochs.size()), s.best_val_accuracy, s.test_accuracy);
    }
  }
  std::printf("[train] %s seed %llu: test accuracy %.4f, pair accuracy %.4f\n",
              to_string(cfg.method).c_str(), static_cast<unsigned long long>(cfg.seed),
              rep.final_test_accuracy, rep.final_pair_accuracy);

  if (!out.empty()) {
    write_text_file(out, report_to_json(rep, !no_timing));
  }
  if (!artifacts_dir.empty()) {
    std::filesystem::create_directories(artifacts_dir);
    const std::filesystem::path dir(artifacts_dir);
    save_checkpoint(*rep.final_model, (dir / "checkpoint.json").string());
    if (rep.tc_used) {
      save_class_transition_matrix(ClassTransitionMatrix(*rep.tc_used),
                                   (dir / "tc.txt").string());
    }
    if (rep.ts_used) {
      save_similarity_transition_matrix(
          SimilarityTransitionMatrix(Eigen::Matrix2d(*rep.ts_used)),
          (dir / "ts.txt").string());
    }
  }
  return 0;
}

int run_robustness(const std::string& config_path, const std::vector<double>& levels,
                   const std::vector<std::string>& method_names,
                   std::optional<std::uint64_t> seed_flag, const std::string& out) {
  ExperimentConfig cfg;
  if (!config_path.empty()) cfg = load_experiment_config(config_path);
  if (seed_flag) cfg.seed = *seed_flag;
  std::vector<Method> methods;
  for (const std::string& name : method_names) methods.push_back(method_from_string(name));
  const std::vector<RobustnessPoint> points = run_matrix_robustness(cfg, levels, methods);
  const std::string csv = robustness_to_csv(points);
  std::fputs(csv.c_str(), stdout);
  if (!out.empty()) write_text_file(out, csv);
  return 0;
}

int run_verify(int c_min, int c_max, int matrices, long long mc_trials, std::uint64_t seed,
               bool as_json, const std::string& out) {
  VerifyOptions opt;
  opt.c_min = c_min;
  opt.c_max = c_max;
  opt.random_matrices = matrices;
  opt.mc_trials = mc_trials;
  opt.seed = seed;
  const VerifyReport rep = verify_transform(opt);
  const std::string text = as_json ? verify_report_to_json(rep) : verify_report_to_text(rep);
  std::fputs(text.c_str(), stdout);
  if (!out.empty()) write_text_file(out, text);
  return rep.all_pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"noisy-label training via pairwise similarity transformation"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate Gaussian blob data as csv");
  int g_classes = 10, g_per_class = 200, g_dim = 8;
  double g_sep = 5.0, g_spread = 1.5;
  std::uint64_t g_seed = 0;
  std::string g_out, g_matrix_out;
  NoiseFlags g_noise;
  gen->add_option("--classes", g_classes)->default_val(10);
  gen->add_option("--per-class", g_per_class)->default_val(200);
  gen->add_option("--dim", g_dim)->default_val(8);
  gen->add_option("--separation", g_sep)->default_val(5.0);
  gen->add_option("--spread", g_spread)->default_val(1.5);
  gen->add_option("--seed", g_seed)->default_val(0);
  gen->add_option("--out", g_out, "output csv path")->required();
  gen->add_option("--matrix-out", g_matrix_out, "save the generating matrix here");
  add_noise_flags(gen, g_noise, "none");

  // corrupt
  auto* cor = app.add_subcommand("corrupt", "flip csv labels through a transition matrix");
  std::string c_in, c_out, c_matrix_out;
  std::uint64_t c_seed = 0;
  int c_label_col = -1;
  bool c_no_header = false;
  NoiseFlags c_noise;
  cor->add_option("--in", c_in, "input csv")->required();
  cor->add_option("--out", c_out, "output csv")->required();
  cor->add_option("--seed", c_seed)->default_val(0);
  cor->add_option("--label-column", c_label_col)->default_val(-1);
  cor->add_flag("--no-header", c_no_header, "csv has no header row");
  cor->add_option("--matrix-out", c_matrix_out, "save the matrix used");
  add_noise_flags(cor, c_noise, "symmetric");

  // transform-matrix
  auto* tra = app.add_subcommand("transform-matrix",
                                 "class transition matrix -> similarity transition matrix");
  std::string t_tc, t_out;
  double t_sym = -1.0, t_asym = -1.0;
  int t_classes = 10;
  std::vector<double> t_prior;
  bool t_json = false;
  tra->add_option("--tc", t_tc, "class transition matrix file");
  tra->add_option("--symmetric", t_sym, "build a symmetric-noise matrix with this rate");
  tra->add_option("--asymmetric", t_asym, "build a pair-flip matrix with this rate");
  tra->add_option("--classes", t_classes, "class count for --symmetric/--asymmetric")
      ->default_val(10);
  tra->add_option("--prior-weights", t_prior, "class prior weights (default uniform)")
      ->delimiter(',');
  tra->add_option("--out", t_out, "save the 2x2 matrix here");
  tra->add_flag("--json", t_json, "emit JSON instead of text");

  // estimate-tc
  auto* est = app.add_subcommand("estimate-tc",
                                 "anchor-point transition estimate from a checkpoint");
  std::string e_ckpt, e_data, e_out;
  double e_pct = 97.0;
  int e_label_col = -1;
  bool e_no_header = false;
  est->add_option("--checkpoint", e_ckpt, "model checkpoint json")->required();
  est->add_option("--data", e_data, "csv pool to scan for anchors")->required();
  est->add_option("--percentile", e_pct)->default_val(97.0);
  est->add_option("--label-column", e_label_col)->default_val(-1);
  est->add_flag("--no-header", e_no_header);
  est->add_option("--out", e_out, "save the estimate here");

  // train
  auto* trn = app.add_subcommand("train", "run an experiment from a json config");
  std::string n_config, n_method, n_out, n_artifacts;
  std::optional<std::uint64_t> n_seed;
  bool n_quiet = false, n_no_timing = false, n_print_config = false;
  trn->add_option("--config", n_config, "experiment config json");
  trn->add_option("--method", n_method, "override the config method");
  trn->add_option("--seed", n_seed, "override the config seed");
  trn->add_option("--out", n_out, "write the run report here");
  trn->add_option("--artifacts-dir", n_artifacts,
                  "write checkpoint.json, tc.txt, ts.txt here");
  trn->add_flag("--quiet", n_quiet, "only the final summary line");
  trn->add_flag("--no-timing", n_no_timing, "omit wall-clock from the report");
  trn->add_flag("--print-config", n_print_config, "echo the resolved config and exit");

  // robustness
  auto* rob = app.add_subcommand("robustness",
                                 "accuracy under a perturbed transition matrix");
  std::string r_config, r_out;
  std::vector<double> r_levels = {0.0, 0.1, 0.2, 0.3};
  std::vector<std::string> r_methods = {"forward", "f_class2simi"};
  std::optional<std::uint64_t> r_seed;
  rob->add_option("--config", r_config, "experiment config json");
  rob->add_option("--levels", r_levels, "perturbation levels")->delimiter(',');
  rob->add_option("--methods", r_methods, "methods to compare")->delimiter(',');
  rob->add_option("--seed", r_seed, "override the config seed");
  rob->add_option("--out", r_out, "write the csv here");

  // verify
  auto* ver = app.add_subcommand("verify", "self-check the transform against oracles");
  int v_cmin = 2, v_cmax = 50, v_matrices = 100;
  long long v_mc = 0;
  std::uint64_t v_seed = 0;
  bool v_json = false;
  std::string v_out;
  ver->add_option("--c-min", v_cmin)->default_val(2);
  ver->add_option("--c-max", v_cmax)->default_val(50);
  ver->add_option("--matrices", v_matrices, "random matrices per section")->default_val(100);
  ver->add_option("--mc-trials", v_mc, "Monte-Carlo pairs per matrix (0 skips)")
      ->default_val(0);
  ver->add_option("--seed", v_seed)->default_val(0);
  ver->add_flag("--json", v_json);
  ver->add_option("--out", v_out, "write the report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version exit 0; every genuine parse problem maps to 1
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 1;
  }

  try {
    if (gen->parsed()) {
      return run_gen_data(g_classes, g_per_class, g_dim, g_sep, g_spread, g_seed, g_noise,
                          g_out, g_matrix_out);
    }
    if (cor->parsed()) {
      return run_corrupt(c_in, c_out, c_noise, c_seed, c_label_col, c_no_header,
                         c_matrix_out);
    }
    if (tra->parsed()) {
      return run_transform(t_tc, t_sym, t_asym, t_classes, t_prior, t_out, t_json);
    }
    if (est->parsed()) {
      return run_estimate(e_ckpt, e_data, e_pct, e_label_col, e_no_header, e_out);
    }
    if (trn->parsed()) {
      return run_train(n_config, n_method, n_seed, n_out, n_artifacts, n_quiet, n_no_timing,
                       n_print_config);
    }
    if (rob->parsed()) {
      return run_robustness(r_config, r_levels, r_methods, r_seed, r_out);
    }
    if (ver->parsed()) {
      return run_verify(v_cmin, v_cmax, v_matrices, v_mc, v_seed, v_json, v_out);
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
