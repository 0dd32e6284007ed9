#pragma once

#include "semitest/presence_tests.hpp"
#include "semitest/simlab.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace semitest {

/// How a grid value alpha becomes a cutoff inside the harness.
enum class CutoffRule {
  /// VolMultiple(alpha, varpi): alpha estimated standard deviations.
  EstimatedVol,
  /// Absolute(alpha * sigma_ref * sqrt(step)) with sigma_ref the model's
  /// long-run volatility (sqrt(eta), or flat_sigma without SV).
  ModelVol,
  /// Percentile(q) with q = alpha.
  Percentile,
  /// Absolute(alpha * sigma_ref * step^varpi), step in years: the
  /// deterministic u = alpha * delta^varpi family with a model-scaled alpha.
  RateVol,
};

std::string to_string(CutoffRule r);
CutoffRule cutoff_rule_from_string(const std::string& s);

struct ExperimentConfig {
  PathRecipe recipe;
  TestKind test = TestKind::BrownianNull;
  int k = 2;
  /// Powers p for the Brownian-null test; p outside (1, 2) is reported as
  /// statistic-only.
  std::vector<double> powers{1.5};
  /// gamma values for the no-Brownian-null test.
  std::vector<double> gammas{2.0};
  std::vector<double> alphas{7.0};
  std::vector<double> levels{0.10, 0.05};
  CutoffRule cutoff_rule = CutoffRule::ModelVol;
  double varpi = 0.3;
  bool per_day = true;
  int n_paths = 1000;
  std::uint64_t master_seed = 20100101;
  int workers = 1;
  /// Directory for CSV/JSON output; empty means no files.
  std::string output_path;

  void validate() const;
  /// "quick": 5 days, 300 paths. "paper": 21 days, 1000 paths.
  void apply_profile(const std::string& profile);
};

struct GridPoint {
  double alpha = 0.0;
  /// p for the Brownian-null test, gamma for the other.
  double param = 0.0;
  /// False when p lies outside (1, 2): no variance, no decision.
  bool standardized = true;
};

struct PathOutcome {
  bool degenerate = false;
  double statistic = 0.0;
  double variance = 0.0;
  double z_score = 0.0;
  /// One flag per configured level.
  std::vector<char> reject;
};

struct Ensemble {
  std::vector<GridPoint> grid;
  /// outcomes[path][grid point]
  std::vector<std::vector<PathOutcome>> outcomes;
  HypothesisLabel label;
};

/// Simulates cfg.n_paths paths and evaluates every grid point on each.
/// Output is a pure function of (cfg, master seed), whatever cfg.workers is.
Ensemble run_ensemble(const ExperimentConfig& cfg);

struct RejectionRow {
  GridPoint point;
  double level = 0.0;
  double rate = 0.0;
  double std_error = 0.0;
  int n_valid = 0;
  int n_degenerate = 0;
  /// More than 10% of the paths were degenerate at this grid point.
  bool degenerate_warning = false;
};

struct RejectionTable {
  std::vector<RejectionRow> rows;
};

struct CurveRow {
  GridPoint point;
  double mean = 0.0;
  double sd = 0.0;
  int n_valid = 0;
  int n_degenerate = 0;
  double limit_brownian = 0.0;
  double limit_no_brownian = 0.0;
  /// The limit matching the simulated hypothesis.
  double limit_expected = 0.0;
};

struct NormalitySummary {
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double ks_distance = 0.0;
  int n = 0;
};

struct HistogramRow {
  GridPoint point;
  std::vector<double> z_scores;
  NormalitySummary summary;
  int n_degenerate = 0;
};

RejectionTable rejection_table(const ExperimentConfig& cfg, const Ensemble& e);
std::vector<CurveRow> limit_curves(const ExperimentConfig& cfg, const Ensemble& e);
std::vector<HistogramRow> standardized_histograms(const Ensemble& e);

RejectionTable run_rejection_experiment(const ExperimentConfig& cfg);
std::vector<CurveRow> run_limit_curves(const ExperimentConfig& cfg);
std::vector<HistogramRow> run_standardized_histograms(const ExperimentConfig& cfg);

/// Sample moments and the Kolmogorov-Smirnov distance to N(0, 1).
NormalitySummary normality_summary(std::span<const double> sample);
double ks_distance_normal(std::span<const double> sample);

/// Probability limits of the two statistics.
double limit_s_brownian(double p, int k);
/// Limit of S_n without a Brownian part for jump index beta (drift matters
/// only for p <= 1).
double limit_s_no_brownian(double p, int k, double beta, bool drift);

// Data-generating processes used for the simulation study.
SVJumpModel reference_sv_model();
PathRecipe brownian_plus_stable(double theta, double beta = 1.0);
PathRecipe stable_only(double theta, double beta = 1.0);

/// Stable scale for the Brownian-null size/power study: tail probability
/// 1e-4 of a 4 sqrt(eta) sqrt(step) move.
double theta_for_brownian_null_study(double step_seconds = 5.0);
/// Stable scale for the no-Brownian-null study: tail probability 3e-3. At
/// alpha = 7 this puts the cutoff near 370 Cauchy scales, where the
/// curvature bias of S'_n and the small-count bias of U(gamma u) roughly
/// balance.
double theta_for_nobrownian_null_study(double step_seconds = 5.0);

/// Writes <dir>/<stem>.csv and <dir>/<stem>.json; returns the CSV path.
std::string write_rejection_table(const ExperimentConfig& cfg, const RejectionTable& t,
                                  const std::string& stem, double wall_seconds);
std::string write_limit_curves(const ExperimentConfig& cfg, const std::vector<CurveRow>& rows,
                               const std::string& stem, double wall_seconds);
std::string write_histograms(const ExperimentConfig& cfg, const std::vector<HistogramRow>& rows,
                             const std::string& stem, double wall_seconds);

}  // namespace semitest
