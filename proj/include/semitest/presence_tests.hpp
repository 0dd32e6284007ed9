#pragma once

#include "semitest/path.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace semitest {

/// Which side of the continuous-martingale dichotomy a path sits on, plus
/// whether the jump part has infinite activity. Present/absent exclude each
/// other by construction.
struct HypothesisLabel {
  enum class Continuous { Present, Absent };
  Continuous continuous = Continuous::Present;
  bool infinite_activity = false;

  bool brownian_present() const { return continuous == Continuous::Present; }
  /// "W", "noW", optionally followed by "+ibeta".
  std::string to_string() const;
};

struct BrownianNullConfig {
  double p = 1.5;
  int k = 2;
  TruncationSpec truncation{VolMultiple{7.0, 0.3}};
  double level = 0.05;
  /// Upper bound on the jump activity index, used to validate the cutoff rate.
  std::optional<double> beta0;
  /// Rate exponent for validation when the truncation mode carries none.
  std::optional<double> varpi;
  bool per_day = true;
  bool override_rate_check = false;

  void validate() const;
};

struct BrownianNullResult {
  double s_n = 0.0;
  double v_n = 0.0;
  double null_limit = 0.0;
  double critical_value = 0.0;
  double z_score = 0.0;
  double level = 0.0;
  bool reject = false;
  std::vector<CutoffSpan> cutoffs;
  std::map<std::string, double> diagnostics;
};

struct NoBrownianNullConfig {
  double gamma = 2.0;
  TruncationSpec truncation{Percentile{0.05}};
  double level = 0.05;
  std::optional<double> beta0;
  std::optional<double> varpi;
  bool per_day = false;
  bool override_rate_check = false;

  void validate() const;
};

struct NoBrownianNullResult {
  double s_prime_n = 0.0;
  double v_prime_n = 0.0;
  double null_limit = 0.0;
  double critical_value = 0.0;
  double z_score = 0.0;
  double level = 0.0;
  bool reject = false;
  std::vector<CutoffSpan> cutoffs;
  std::map<std::string, double> diagnostics;
};

// Ratio of truncated p-variations at steps delta and k*delta. Single-cutoff
// forms take a path; span forms take precomputed increments so callers
// evaluating many grid points can share them.
double s_statistic(const SampledPath& path, double p, int k, double u);
double s_statistic(const IncrementSeries& fine, const IncrementSeries& coarse, double p,
                   std::span<const CutoffSpan> cutoffs);

/// Estimated asymptotic variance of s_statistic.
double v_n(const SampledPath& path, double p, int k, double u);
double v_n(const IncrementSeries& fine, double p, int k, std::span<const CutoffSpan> cutoffs);

double s_prime_statistic(const SampledPath& path, double gamma, double u);
double s_prime_statistic(const IncrementSeries& fine, double gamma,
                         std::span<const CutoffSpan> cutoffs);

double v_prime_n(const SampledPath& path, double gamma, double u);
double v_prime_n(const IncrementSeries& fine, double gamma, std::span<const CutoffSpan> cutoffs);

/// Null: a Brownian component is present. Rejects when S_n falls below
/// k^{1-p/2} - z_a sqrt(V_n).
BrownianNullResult test_brownian_null(const SampledPath& path, const BrownianNullConfig& cfg);
BrownianNullResult test_brownian_null(const IncrementSeries& fine, const IncrementSeries& coarse,
                                      const BrownianNullConfig& cfg,
                                      std::span<const CutoffSpan> cutoffs);

/// Null: no Brownian component (infinite-activity jumps only). Rejects when
/// S'_n falls below gamma^2 - z_a sqrt(V'_n).
NoBrownianNullResult test_nobrownian_null(const SampledPath& path, const NoBrownianNullConfig& cfg);
NoBrownianNullResult test_nobrownian_null(const IncrementSeries& fine,
                                          const NoBrownianNullConfig& cfg,
                                          std::span<const CutoffSpan> cutoffs);

enum class TestKind { BrownianNull, NoBrownianNull };

struct RateCheck {
  bool pass = false;
  std::string explanation;
  /// Admissible open interval for varpi (empty when lo >= hi).
  double varpi_lo = 0.0;
  double varpi_hi = 0.0;
};

/// Checks the cutoff-rate window linking p, beta0 and varpi. Failure is
/// reported in the value, never thrown.
RateCheck validate_rate_conditions(TestKind kind, std::optional<double> p, double beta0,
                                   double varpi);

/// Recomputes the reject flag from the stored statistic, variance and level.
bool recompute_decision(const BrownianNullResult& r);
bool recompute_decision(const NoBrownianNullResult& r);

}  // namespace semitest
