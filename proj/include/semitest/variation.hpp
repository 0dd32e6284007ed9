#pragma once

#include "semitest/path.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <vector>

namespace semitest {

namespace detail {

template <typename Scalar>
inline Scalar abs_power(Scalar a, Scalar p) {
  using std::pow;
  if (p == Scalar(2)) return a * a;
  if (p == Scalar(4)) return (a * a) * (a * a);
  if (p == Scalar(1)) return a;
  return pow(a, p);
}

}  // namespace detail

/// Sum of |x|^p over the entries with |x| <= u. The boundary |x| = u is kept.
template <typename Derived>
typename Derived::Scalar truncated_power_variation(const Eigen::DenseBase<Derived>& incs,
                                                   typename Derived::Scalar p,
                                                   typename Derived::Scalar u) {
  using Scalar = typename Derived::Scalar;
  Scalar total(0);
  for (Index i = 0; i < incs.size(); ++i) {
    using std::abs;
    const Scalar a = abs(incs.derived().coeff(i));
    if (a <= u) total += detail::abs_power(a, p);
  }
  return total;
}

/// Number of entries with |x| > u (strict), the complement of the set
/// summed by truncated_power_variation.
template <typename Derived>
Index exceedance_count(const Eigen::DenseBase<Derived>& incs, typename Derived::Scalar u) {
  return (incs.derived().array().abs() > u).count();
}

inline double truncated_power_variation(const IncrementSeries& incs, double p, double u) {
  return truncated_power_variation(incs.values, p, u);
}
inline Index exceedance_count(const IncrementSeries& incs, double u) {
  return exceedance_count(incs.values, u);
}

/// Increments X_{i*stride} - X_{(i-1)*stride} within each day, starting at
/// the day's first observation. A trailing partial block is dropped and no
/// increment spans an overnight gap.
IncrementSeries increments(const SampledPath& path, Index stride);

/// B(p, u_d) summed over days, where u_d = scale * (cutoff of the span
/// holding day d).
double truncated_power_variation(const IncrementSeries& incs, double p,
                                 std::span<const CutoffSpan> spans, double scale = 1.0);
Index exceedance_count(const IncrementSeries& incs, std::span<const CutoffSpan> spans,
                       double scale = 1.0);

/// Truncated realized variance over stride-1 increments with cutoff
/// alpha * step^varpi, step in years. Returns 0 when every increment is cut.
double estimate_integrated_volatility(const SampledPath& path, double alpha, double varpi);

/// Concrete cutoffs for `spec`, one span for the whole path or one per day.
/// Throws DegenerateCutoff (naming the span) when a span has no usable
/// increments.
std::vector<CutoffSpan> resolve_cutoff(const SampledPath& path, const TruncationSpec& spec,
                                       bool per_day);

/// Self-consistent volatility cutoff on a set of increments: iterates
/// u <- alpha * sqrt(B(2,u)/n) from u = +inf until it stops moving.
double volatility_cutoff(std::span<const double> incs, double alpha);

}  // namespace semitest
