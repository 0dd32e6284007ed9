#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace semitest {

/// Gamma function on x > 0; DomainError-style ConfigError otherwise.
double gamma_fn(double x);

/// Gauss hypergeometric 2F1(a, b; c; x) for -1 <= x <= 0. The series is
/// summed after the Pfaff map x -> x/(x-1), which lands in [0, 1/2].
double gauss_2f1(double a, double b, double c, double x);

/// E|Z|^p for standard normal Z.
double m_p(double p);

/// E(|Z|^p |Z + sqrt(k-1) Z'|^p) for independent standard normals,
/// integrated in polar coordinates (exact radial factor, piecewise
/// Gauss-Legendre in the angle).
double m_kp(int k, double p);

/// The same expectation on a 200 x 200 tensor Gauss-Hermite grid. The kinks
/// of the integrand limit this rule to about three correct digits.
double m_kp_gauss_hermite(int k, double p);

/// The same expectation through the hypergeometric representation
/// (k-1)^{p/2} m_p^2 2F1(-p/2, (p+1)/2; 1/2; -1/(k-1)).
double m_kp_hypergeometric(int k, double p);

/// Limiting variance factor of the sampling-frequency ratio statistic.
double n_factor(double p, int k);

/// z with P(Z > z) = a.
double normal_quantile(double a);

/// Standard normal CDF.
double normal_cdf(double x);

struct MomentEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Monte Carlo estimate of m_kp from n_draws seeded normal pairs.
MomentEstimate mc_moment_oracle(int k, double p, std::int64_t n_draws, std::uint64_t seed);

/// Same expectation with regression control variates (polynomial and
/// single-factor moments of known mean); the error is 5-15 times smaller
/// for the same draws.
MomentEstimate mc_moment_oracle_cv(int k, double p, std::int64_t n_draws, std::uint64_t seed);

/// Nodes and weights of the n-point Gauss-Hermite rule for the weight
/// exp(-x^2) (Golub-Welsch).
struct GaussHermiteRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};
GaussHermiteRule gauss_hermite(int n);

/// n-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};
GaussLegendreRule gauss_legendre(int n);

/// Constants used by the first test's variance.
struct MomentConstants {
  double p = 0.0;
  int k = 2;
  double m_p = 0.0;
  double m_2p = 0.0;
  double m_kp = 0.0;
  double n_pk = 0.0;
};
MomentConstants moment_constants(double p, int k);

}  // namespace semitest
