#pragma once

#include "semitest/path.hpp"
#include "semitest/presence_tests.hpp"
#include "semitest/rng.hpp"

#include <cstdint>
#include <optional>

namespace semitest {

/// Stochastic variance with leverage and compound Poisson variance jumps:
///   dv = xi (eta - v) dt + phi sqrt(v) dB + dJ,  d<W,B> = rho dt.
/// Rates are per year of trading time.
struct SVJumpModel {
  double eta = 0.0625;
  double xi = 5.0;
  double phi = 0.5;
  double rho = -0.5;
  /// Variance jumps per year.
  double vol_jump_intensity = 2.0;
  /// Jump sizes are uniform on [-w, w], applied as v <- max(v + jump * eta, 0).
  double vol_jump_half_width = 0.30;
  double v0 = 0.0625;
  double x0 = 1.0;

  void validate() const;
};

/// Symmetric beta-stable driver theta * Y plus a constant drift.
struct StableDriver {
  double beta = 1.0;
  double theta = 0.0;
  double drift = 0.0;

  void validate() const;
};

struct PathRecipe {
  bool include_brownian = true;
  /// Variance dynamics of the Brownian part; when absent the volatility is
  /// the constant flat_sigma.
  std::optional<SVJumpModel> sv;
  double flat_sigma = 0.25;
  std::optional<StableDriver> stable;
  int horizon_days = 21;
  double step_seconds = 5.0;
  std::uint64_t seed = 0;
  /// Euler substeps per observation step for the variance.
  int substeps = 5;
  /// Standard deviation of iid additive observation noise (0 = none).
  double noise_sd = 0.0;

  void validate() const;
  Index steps_per_day() const;
};

struct GroundTruth {
  double integrated_variance = 0.0;
  /// Sum of squared continuous-part increments at the observation step.
  double continuous_qv = 0.0;
  /// Sum of squared jump-part increments at the observation step.
  double jump_qv = 0.0;
  std::int64_t vol_jumps = 0;
  HypothesisLabel label;
};

struct SimulatedPath {
  SampledPath path;
  GroundTruth truth;
};

SimulatedPath simulate_path(const PathRecipe& recipe);

/// One symmetric beta-stable draw with characteristic function
/// exp(-|scale t|^beta) (Chambers-Mallows-Stuck).
double sample_stable_increment(double beta, double scale, Rng& rng);

/// P(|S| > x) for the standard symmetric beta-stable law above.
double stable_tail_probability(double beta, double x);

/// theta such that a theta-scaled stable increment over one step exceeds
/// 4 sqrt(eta) sqrt(step) with probability target_p. Step in seconds.
double calibrate_theta_tail(double target_p, double eta, double step_seconds, double beta);

/// Tail probability delivered by a given theta (inverse of the above).
double theta_tail_probability(double theta, double eta, double step_seconds, double beta);

/// theta such that the ensemble-mean share of observation-scale quadratic
/// variation due to the jump component equals target_share. Uses common
/// random numbers across the bisection, so the result is deterministic.
double calibrate_theta_qv_share(double target_share, const SVJumpModel& model, double beta,
                                int horizon_days, double step_seconds, int n_paths = 200,
                                std::uint64_t seed = 1);

/// Mean jump share of quadratic variation at a fixed theta on the same
/// calibration ensemble used by calibrate_theta_qv_share.
double qv_share_at(double theta, const SVJumpModel& model, double beta, int horizon_days,
                   double step_seconds, int n_paths = 200, std::uint64_t seed = 1);

/// observed = path + iid N(0, sd^2) noise.
SampledPath add_noise(const SampledPath& path, double sd, std::uint64_t seed);

/// Standard normal pair with correlation rho.
inline std::pair<double, double> correlated_normals(double rho, Rng& rng,
                                                    std::normal_distribution<double>& normal) {
  const double z1 = normal(rng);
  const double z2 = normal(rng);
  return {z1, rho * z1 + std::sqrt(1.0 - rho * rho) * z2};
}

}  // namespace semitest
