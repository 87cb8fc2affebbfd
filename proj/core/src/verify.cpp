#include "class2simi/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "class2simi/rng.hpp"
#include "class2simi/transition.hpp"

namespace c2s {
namespace {

constexpr int kEnumerationCap = 20;  // oracle work grows as c^4

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

Matrix random_stochastic(int c, SplitMix64& rng) {
  Matrix m(c, c);
  for (int i = 0; i < c; ++i) {
    double sum = 0.0;
    while (sum <= 0.0) {
      for (int j = 0; j < c; ++j) {
        m(i, j) = -std::log(rng.next_open());
        sum += m(i, j);
      }
    }
    m.row(i) /= sum;
  }
  return m;
}

ClassPrior random_prior(int c, SplitMix64& rng) {
  Vector p(c);
  double sum = 0.0;
  while (sum <= 0.0) {
    for (int i = 0; i < c; ++i) {
      p[i] = -std::log(rng.next_open());
      sum += p[i];
    }
  }
  return ClassPrior(p);
}

int draw_from_row(const ClassTransitionMatrix& tc, int row, SplitMix64& rng) {
  const double u = rng.next_double();
  double acc = 0.0;
  const int c = tc.num_classes();
  for (int j = 0; j < c; ++j) {
    acc += tc(row, j);
    if (u < acc) return j;
  }
  return c - 1;
}

int draw_from_prior(const ClassPrior& prior, SplitMix64& rng) {
  const double u = rng.next_double();
  double acc = 0.0;
  const int c = prior.num_classes();
  for (int i = 0; i < c; ++i) {
    acc += prior.probabilities()[i];
    if (u < acc) return i;
  }
  return c - 1;
}

VerifySection check_oracle(const VerifyOptions& opt) {
  VerifySection sec;
  sec.name = "oracle_equivalence";
  SplitMix64 rng(derive_seed(opt.seed, 101));
  const int lo = std::max(opt.c_min, 2);
  const int hi = std::max(lo, std::min(opt.c_max, kEnumerationCap));
  double worst = 0.0;
  for (int k = 0; k < opt.random_matrices; ++k) {
    const int c = lo + k % (hi - lo + 1);
    const ClassTransitionMatrix tc(random_stochastic(c, rng));
    const ClassPrior prior =
        (k % 2 == 0) ? ClassPrior::uniform(c) : random_prior(c, rng);
    const SimilarityTransitionMatrix fast = class2simi(tc, prior);
    const SimilarityTransitionMatrix slow = simi_transition_oracle(tc, prior);
    const double diff = (fast.entries() - slow.entries()).array().abs().maxCoeff();
    worst = std::max(worst, diff);
    ++sec.checks;
    if (!(diff <= opt.oracle_tolerance)) {
      ++sec.failures;
      sec.notes.push_back("matrix " + std::to_string(k) + " (c=" + std::to_string(c) +
                          "): |analytic - enumeration| = " + fmt(diff));
    }
  }
  sec.pass = sec.failures == 0;
  sec.notes.push_back("worst |analytic - enumeration| = " + fmt(worst) + " over " +
                      std::to_string(sec.checks) + " matrices (tolerance " +
                      fmt(opt.oracle_tolerance) + ")");
  return sec;
}

VerifySection check_identity(const VerifyOptions& opt) {
  VerifySection sec;
  sec.name = "identity_exact";
  for (int c = std::max(opt.c_min, 2); c <= opt.c_max; ++c) {
    const SimilarityTransitionMatrix ts =
        class2simi(ClassTransitionMatrix::identity(c), ClassPrior::uniform(c));
    ++sec.checks;
    const bool exact = ts(1, 1) == 1.0 && ts(1, 0) == 0.0 && ts(0, 1) == 0.0 &&
                       ts(0, 0) == 1.0;
    if (!exact) {
      ++sec.failures;
      sec.notes.push_back("identity at c=" + std::to_string(c) +
                          " did not map to the exact 2x2 identity");
    }
  }
  sec.pass = sec.failures == 0;
  return sec;
}

VerifySection check_noise_reduction(const VerifyOptions& opt) {
  VerifySection sec;
  sec.name = "noise_reduction_grid";
  double min_margin = 1.0;
  int small_c_cells = 0;
  int small_c_violations = 0;
  for (int c = std::max(opt.c_min, 2); c <= opt.c_max; ++c) {
    for (double rho : opt.rhos) {
      if (!(rho < static_cast<double>(c - 1) / c)) continue;  // keep diagonal dominant
      const ClassTransitionMatrix tc = make_symmetric(c, rho);
      const ClassPrior prior = ClassPrior::uniform(c);
      const double class_rate = class_noise_rate(tc, prior);
      const double simi_rate =
          simi_noise_rate(class2simi(tc, prior), prior.pair_similar_prior());
      if (c >= 8) {
        ++sec.checks;
        min_margin = std::min(min_margin, class_rate - simi_rate);
        if (!(simi_rate < class_rate)) {
          ++sec.failures;
          sec.notes.push_back("c=" + std::to_string(c) + " rho=" + fmt(rho) +
                              ": similarity rate " + fmt(simi_rate) +
                              " did not drop below class rate " + fmt(class_rate));
        }
      } else {
        ++small_c_cells;
        if (simi_rate >= class_rate) {
          ++small_c_violations;
          if (c == 2 && std::abs(rho - 0.4) < 1e-12) {
            sec.notes.push_back("informational: c=2 rho=0.4 gives similarity rate " +
                                fmt(simi_rate) + " above class rate " + fmt(class_rate) +
                                ", the expected counterexample below 8 classes");
          }
        }
      }
    }
  }
  sec.pass = sec.failures == 0;
  if (sec.checks > 0) {
    sec.notes.push_back("min class-to-similarity margin over the c >= 8 grid: " +
                        fmt(min_margin));
  }
  if (small_c_cells > 0) {
    sec.notes.push_back("informational: " + std::to_string(small_c_violations) + " of " +
                        std::to_string(small_c_cells) +
                        " cells below 8 classes reverse the reduction (not counted)");
  }
  return sec;
}

VerifySection check_learnability(const VerifyOptions& opt) {
  VerifySection sec;
  sec.name = "learnability_diag_dominant";
  SplitMix64 rng(derive_seed(opt.seed, 104));
  const int lo = std::max(opt.c_min, 2);
  const int hi = std::max(lo, std::min(opt.c_max, kEnumerationCap));
  for (int k = 0; k < opt.random_matrices; ++k) {
    const int c = lo + k % (hi - lo + 1);
    Matrix m(c, c);
    for (int i = 0; i < c; ++i) {
      const double diag = rng.next_uniform(0.51, 1.0);
      m(i, i) = diag;
      if (c > 1) {
        Vector off(c - 1);
        double sum = 0.0;
        while (sum <= 0.0) {
          for (int j = 0; j < c - 1; ++j) {
            off[j] = -std::log(rng.next_open());
            sum += off[j];
          }
        }
        int slot = 0;
        for (int j = 0; j < c; ++j) {
          if (j == i) continue;
          m(i, j) = (1.0 - diag) * off[slot++] / sum;
        }
      }
    }
    const ClassTransitionMatrix tc(m);
    const SimilarityTransitionMatrix ts = class2simi(tc, ClassPrior::uniform(c));
    const LearnabilityReport rep = learnability_check(tc, ts);
    ++sec.checks;
    if (!rep.tc_invertible || !rep.ts_learnable) {
      ++sec.failures;
      sec.notes.push_back(
          "matrix " + std::to_string(k) + " (c=" + std::to_string(c) +
          ", min diagonal " + fmt(m.diagonal().minCoeff()) +
          "): invertible=" + (rep.tc_invertible ? "yes" : "no") +
          " learnable=" + (rep.ts_learnable ? "yes" : "no") +
          " condition=" + fmt(rep.tc_condition_estimate));
    }
  }
  sec.pass = sec.failures == 0;
  return sec;
}

void mc_one(const std::string& label, const ClassTransitionMatrix& tc,
            const ClassPrior& prior, long long trials, SplitMix64& rng,
            VerifySection& sec) {
  const SimilarityTransitionMatrix ts = class2simi(tc, prior);
  long long n1 = 0, n1_flip_stay = 0;  // clean-similar pairs; observed similar among them
  long long n0 = 0, n0_to_sim = 0;     // clean-dissimilar pairs; observed similar
  for (long long t = 0; t < trials; ++t) {
    const int y1 = draw_from_prior(prior, rng);
    const int y2 = draw_from_prior(prior, rng);
    const int o1 = draw_from_row(tc, y1, rng);
    const int o2 = draw_from_row(tc, y2, rng);
    if (y1 == y2) {
      ++n1;
      n1_flip_stay += (o1 == o2);
    } else {
      ++n0;
      n0_to_sim += (o1 == o2);
    }
  }
  const auto cell = [&](const char* name, double analytic, long long hits, long long total) {
    ++sec.checks;
    if (total == 0) {
      ++sec.failures;
      sec.notes.push_back(label + ": no samples landed in " + name);
      return;
    }
    const double est = static_cast<double>(hits) / total;
    const double sigma = std::sqrt(std::max(analytic * (1.0 - analytic), 1e-12) /
                                   static_cast<double>(total));
    const double dev = std::abs(est - analytic);
    if (dev > 3.0 * sigma) {
      ++sec.failures;
      sec.notes.push_back(label + " " + name + ": estimate " + fmt(est) + " vs analytic " +
                          fmt(analytic) + " deviates " + fmt(dev / sigma) + " sigma");
    }
  };
  cell("T_s11", ts(1, 1), n1_flip_stay, n1);
  cell("T_s01", ts(0, 1), n0_to_sim, n0);
}

VerifySection check_monte_carlo(const VerifyOptions& opt) {
  VerifySection sec;
  sec.name = "monte_carlo";
  if (opt.mc_trials <= 0) {
    sec.pass = true;
    sec.notes.push_back("skipped (0 trials requested)");
    return sec;
  }
  SplitMix64 rng(derive_seed(opt.seed, 105));
  mc_one("symmetric c=10 rho=0.4", make_symmetric(10, 0.4), ClassPrior::uniform(10),
         opt.mc_trials, rng, sec);
  mc_one("pair-flip c=6 rho=0.3", make_asymmetric(6, 0.3), ClassPrior::uniform(6),
         opt.mc_trials, rng, sec);
  const ClassTransitionMatrix random_tc(random_stochastic(5, rng));
  const ClassPrior random_p = random_prior(5, rng);
  mc_one("random c=5", random_tc, random_p, opt.mc_trials, rng, sec);
  sec.pass = sec.failures == 0;
  sec.notes.push_back(std::to_string(opt.mc_trials) + " simulated pairs per matrix, 3 sigma");
  return sec;
}

}  // namespace

VerifyReport verify_transform(const VerifyOptions& options) {
  if (options.c_min < 2 || options.c_max < options.c_min) {
    throw std::invalid_argument("class-count range must satisfy 2 <= c_min <= c_max");
  }
  if (options.random_matrices < 1) {
    throw std::invalid_argument("random_matrices must be positive");
  }
  for (double rho : options.rhos) {
    if (!(rho >= 0.0) || !(rho < 1.0)) {
      throw std::invalid_argument("rho values must lie in [0, 1)");
    }
  }
  VerifyReport rep;
  rep.sections.push_back(check_oracle(options));
  rep.sections.push_back(check_identity(options));
  rep.sections.push_back(check_noise_reduction(options));
  rep.sections.push_back(check_learnability(options));
  rep.sections.push_back(check_monte_carlo(options));
  rep.all_pass = true;
  for (const VerifySection& s : rep.sections) rep.all_pass = rep.all_pass && s.pass;
  return rep;
}

std::string verify_report_to_text(const VerifyReport& report) {
  std::ostringstream os;
  for (const VerifySection& s : report.sections) {
    os << "[verify] " << s.name << ": " << (s.pass ? "PASS" : "FAIL") << " (" << s.checks
       << " checks, " << s.failures << " failures)\n";
    for (const std::string& note : s.notes) {
      os << "    " << note << "\n";
    }
  }
  os << "[verify] " << (report.all_pass ? "all sections passed" : "SOME SECTIONS FAILED")
     << "\n";
  return os.str();
}

std::string verify_report_to_json(const VerifyReport& report) {
  nlohmann::ordered_json j;
  j["format"] = "class2simi.verify";
  j["version"] = 1;
  j["all_pass"] = report.all_pass;
  nlohmann::ordered_json sections = nlohmann::ordered_json::array();
  for (const VerifySection& s : report.sections) {
    nlohmann::ordered_json sj;
    sj["name"] = s.name;
    sj["pass"] = s.pass;
    sj["checks"] = s.checks;
    sj["failures"] = s.failures;
    sj["notes"] = s.notes;
    sections.push_back(std::move(sj));
  }
  j["sections"] = std::move(sections);
  return j.dump(2) + "\n";
}

}  // namespace c2s
