#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <variant>
#include <vector>

namespace semitest {

using Index = Eigen::Index;

// One trading session is 6.5 hours; a year has 252 sessions. Model
// parameters (variance, mean reversion) are annualized, so path time is
// measured in years of trading time.
inline constexpr double kSecondsPerDay = 23400.0;
inline constexpr double kDaysPerYear = 252.0;
inline constexpr double kSecondsPerYear = kSecondsPerDay * kDaysPerYear;

inline double seconds_to_years(double seconds) { return seconds / kSecondsPerYear; }

/// Regularly spaced log-price observations split into trading days.
struct SampledPath {
  double step_seconds = 5.0;
  Eigen::VectorXd observations;
  /// First observation index of each day; starts at 0, strictly increasing.
  std::vector<Index> day_offsets{0};
  std::map<std::string, std::string> metadata;

  Index size() const { return observations.size(); }
  std::size_t num_days() const { return day_offsets.size(); }
  double step_years() const { return seconds_to_years(step_seconds); }

  /// Half-open observation range [begin, end) of day d.
  std::pair<Index, Index> day_range(std::size_t d) const {
    const Index end = d + 1 < day_offsets.size() ? day_offsets[d + 1] : size();
    return {day_offsets[d], end};
  }

  /// Throws ConfigError when an invariant is broken.
  void validate() const;
};

/// Increments at a fixed stride, never crossing a day boundary.
struct IncrementSeries {
  Eigen::VectorXd values;
  Index stride = 1;
  /// Effective step k * step_seconds.
  double source_step = 0.0;
  /// Index into `values` of the first increment of every day that produced
  /// at least one increment; `day_ids` names the originating path day.
  std::vector<Index> day_offsets;
  std::vector<std::size_t> day_ids;

  Index size() const { return values.size(); }
  std::size_t num_days() const { return day_offsets.size(); }
  std::pair<Index, Index> day_range(std::size_t d) const {
    const Index end = d + 1 < day_offsets.size() ? day_offsets[d + 1] : size();
    return {day_offsets[d], end};
  }
  /// Increments of segment d as a view.
  auto day_segment(std::size_t d) const {
    auto [b, e] = day_range(d);
    return values.segment(b, e - b);
  }
};

/// u = alpha * sigma_hat * sqrt(step): alpha standard deviations of the
/// continuous part, sigma_hat estimated from truncated small increments.
/// varpi is the nominal rate exponent used for rate-condition checks.
struct VolMultiple {
  double alpha = 7.0;
  double varpi = 0.3;
};

/// u is the empirical (1-q) quantile of |increments|: a fraction q exceeds it.
struct Percentile {
  double q = 0.05;
};

struct Absolute {
  double u = 0.0;
};

struct TruncationSpec {
  std::variant<VolMultiple, Percentile, Absolute> mode = VolMultiple{};

  void validate() const;
  std::string describe() const;
};

/// A cutoff u that applies to days [day_begin, day_end) of a path.
struct CutoffSpan {
  std::size_t day_begin = 0;
  std::size_t day_end = 0;
  double u = 0.0;
};

}  // namespace semitest
