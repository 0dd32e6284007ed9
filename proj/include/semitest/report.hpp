#pragma once

#include "semitest/path.hpp"

#include <string>
#include <vector>

namespace semitest {

struct ReportConfig {
  int k = 2;
  std::vector<double> powers{0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
  std::vector<double> alphas{7.0};
  std::vector<double> gammas{2.0};
  /// Cutoff multiples for S'_n; u = alpha * sigma_hat * sqrt(step) per day.
  std::vector<double> gamma_alphas{4.0, 5.0, 6.0, 7.0, 8.0};
  double varpi = 0.3;
  bool per_day = true;
  /// Confidence level of the bands around each statistic.
  double ci_level = 0.95;
  /// Jump index used for the no-Brownian reference lines.
  double beta_reference = 1.6;
  double beta_reference_prime = 1.5;
  /// Whether the drift-dominated limit applies for p <= 1.
  bool drift = false;
};

struct ReportRow {
  /// "S" or "S_prime".
  std::string statistic_name;
  double step_seconds = 0.0;
  /// p or gamma.
  double param = 0.0;
  double alpha = 0.0;
  double statistic = 0.0;
  /// NaN when no variance is available (p outside (1, 2)).
  double variance = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double z_score = 0.0;
  /// Limit with a Brownian part (k^{1-p/2} or gamma^beta).
  double ref_brownian = 0.0;
  /// Limit without (1 / k^{1-p/beta} or gamma^2).
  double ref_no_brownian = 0.0;
  /// Noise-dominated limits of S_n: k for additive noise, sqrt(k) for rounding.
  double ref_additive_noise = 0.0;
  double ref_rounding = 0.0;
  /// Why the row carries no value (degenerate statistic), empty otherwise.
  std::string note;
};

struct EmpiricalReport {
  std::vector<ReportRow> rows;
};

/// Evaluates both statistics on each path over the p, gamma and alpha grids.
/// Paths are typically the same data sampled at different steps. Degenerate
/// grid points are kept as rows with a note; configuration errors throw.
EmpiricalReport run_empirical_report(const std::vector<SampledPath>& paths, const ReportConfig& cfg);

/// Writes <dir>/<stem>.csv and <dir>/<stem>.json; returns the CSV path.
std::string write_empirical_report(const ReportConfig& cfg, const EmpiricalReport& report,
                                   const std::string& dir, const std::string& stem,
                                   double wall_seconds);

}  // namespace semitest
