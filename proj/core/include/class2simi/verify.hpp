#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace c2s {

struct VerifyOptions {
  int c_min = 2;
  int c_max = 50;
  std::vector<double> rhos = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  int random_matrices = 100;   // per randomized section
  long long mc_trials = 0;     // 0 skips the Monte-Carlo section
  double oracle_tolerance = 1e-10;
  std::uint64_t seed = 0;
};

struct VerifySection {
  std::string name;
  bool pass = true;
  int checks = 0;
  int failures = 0;
  std::vector<std::string> notes;  // worst margins, informational exceptions
};

struct VerifyReport {
  std::vector<VerifySection> sections;
  bool all_pass = true;
};

/// Checks the analytic class-to-similarity transform against independent
/// evidence:
///  - random row-stochastic matrices against the brute-force enumeration
///    oracle, under uniform and random priors;
///  - identity matrices map to the exact identity similarity matrix;
///  - symmetric noise on 8 or more classes shrinks the noise rate after the
///    pairwise transform, across the whole (c, rho) grid; smaller class
///    counts are reported informationally since the shrinkage provably fails
///    there (2 classes at rho 0.4 observe 0.48);
///  - random diagonally dominant matrices stay invertible and give a
///    learnable similarity matrix;
///  - optional Monte-Carlo simulation of the corruption process.
VerifyReport verify_transform(const VerifyOptions& options = {});

std::string verify_report_to_text(const VerifyReport& report);
std::string verify_report_to_json(const VerifyReport& report);

}  // namespace c2s
