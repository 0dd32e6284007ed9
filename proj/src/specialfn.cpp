#include "semitest/specialfn.hpp"

#include "semitest/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <shared_mutex>
#include <string>
#include <utility>

namespace semitest {

double gamma_fn(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError("gamma_fn: argument must be positive");
  return std::tgamma(x);
}

double gauss_2f1(double a, double b, double c, double x) {
  if (c <= 0.0 && c == std::floor(c))
    throw ConfigError("gauss_2f1: c must not be a nonpositive integer");
  if (!(x >= -1.0 && x <= 0.0)) throw ConfigError("gauss_2f1: x must lie in [-1, 0]");
  if (x == 0.0) return 1.0;

  // Pfaff: 2F1(a,b;c;x) = (1-x)^{-a} 2F1(a, c-b; c; x/(x-1)).
  const double z = x / (x - 1.0);
  const double b2 = c - b;
  double term = 1.0;
  double sum = 1.0;
  constexpr int kMaxTerms = 100000;
  for (int n = 0; n < kMaxTerms; ++n) {
    term *= (a + n) * (b2 + n) / ((c + n) * (n + 1.0)) * z;
    sum += term;
    if (term == 0.0 || std::abs(term) <= 1e-17 * std::abs(sum)) {
      return std::pow(1.0 - x, -a) * sum;
    }
  }
  throw NumericalError("gauss_2f1: series did not converge");
}

double m_p(double p) {
  if (!(p > 0.0)) throw ConfigError("m_p: p must be positive");
  return std::pow(2.0, p / 2.0) / std::sqrt(EIGEN_PI) * std::tgamma((p + 1.0) / 2.0);
}

GaussHermiteRule gauss_hermite(int n) {
  if (n < 1) throw ConfigError("gauss_hermite: n must be positive");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double off = std::sqrt(i / 2.0);
    jacobi(i, i - 1) = off;
    jacobi(i - 1, i) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  if (solver.info() != Eigen::Success) throw NumericalError("gauss_hermite: eigensolver failed");
  GaussHermiteRule rule;
  rule.nodes = solver.eigenvalues();
  rule.weights = std::sqrt(EIGEN_PI) * solver.eigenvectors().row(0).array().square().transpose();
  return rule;
}

namespace {

constexpr int kHermiteOrder = 200;
constexpr int kLegendreOrder = 128;

const GaussHermiteRule& standard_rule() {
  static const GaussHermiteRule rule = gauss_hermite(kHermiteOrder);
  return rule;
}

void check_kp(int k, double p) {
  if (k < 2) throw ConfigError("k must be >= 2");
  if (!(p > 0.0)) throw ConfigError("p must be positive");
}

}  // namespace

double m_kp_gauss_hermite(int k, double p) {
  check_kp(k, p);
  const auto& rule = standard_rule();
  const double shift = std::sqrt(static_cast<double>(k - 1));
  // E f(Z, Z') = (1/pi) sum_ij w_i w_j f(sqrt2 x_i, sqrt2 x_j)
  const Eigen::ArrayXd z = std::sqrt(2.0) * rule.nodes.array();
  const Eigen::ArrayXd zp = z.abs().pow(p);
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double inner =
        (rule.weights.array() * (z(i) + shift * z).abs().pow(p)).sum();
    total += rule.weights(i) * zp(i) * inner;
  }
  return total / EIGEN_PI;
}

GaussLegendreRule gauss_legendre(int n) {
  if (n < 1) throw ConfigError("gauss_legendre: n must be positive");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double off = i / std::sqrt(4.0 * i * i - 1.0);
    jacobi(i, i - 1) = off;
    jacobi(i - 1, i) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  if (solver.info() != Eigen::Success) throw NumericalError("gauss_legendre: eigensolver failed");
  GaussLegendreRule rule;
  rule.nodes = solver.eigenvalues();
  rule.weights = 2.0 * solver.eigenvectors().row(0).array().square().transpose();
  return rule;
}

namespace {

const GaussLegendreRule& legendre_rule() {
  static const GaussLegendreRule rule = gauss_legendre(kLegendreOrder);
  return rule;
}

}  // namespace

double m_kp(int k, double p) {
  check_kp(k, p);
  // Polar coordinates: the radial integral is 2^p Gamma(p+1), leaving
  // (1/pi) int_0^pi |cos t|^p |cos t + a sin t|^p dt, a = sqrt(k-1). The
  // angular integrand has kinks at pi/2 and at pi - atan(1/a); each smooth
  // piece is integrated with Gauss-Legendre after a cubic endpoint
  // substitution that flattens the |t - kink|^p behavior.
  const double a = std::sqrt(static_cast<double>(k - 1));
  const double kink = EIGEN_PI - std::atan(1.0 / a);
  const double breaks[] = {0.0, EIGEN_PI / 2.0, kink, EIGEN_PI};
  const auto& rule = legendre_rule();
  double angular = 0.0;
  for (int piece = 0; piece < 3; ++piece) {
    const double lo = breaks[piece];
    const double hi = breaks[piece + 1];
    const double half = 0.5 * (hi - lo);
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
      // s in [-1,1] -> s' = (3s - s^3)/2, ds'/ds = 3(1 - s^2)/2
      const double s = rule.nodes(i);
      const double sp = 0.5 * (3.0 * s - s * s * s);
      const double jac = 1.5 * (1.0 - s * s);
      const double t = lo + half * (sp + 1.0);
      const double c = std::cos(t);
      const double v = std::pow(std::abs(c) * std::abs(c + a * std::sin(t)), p);
      angular += rule.weights(i) * jac * half * v;
    }
  }
  return std::pow(2.0, p) * std::tgamma(p + 1.0) * angular / EIGEN_PI;
}

double m_kp_hypergeometric(int k, double p) {
  check_kp(k, p);
  const double mp = m_p(p);
  return std::pow(k - 1.0, p / 2.0) * mp * mp *
         gauss_2f1(-p / 2.0, (p + 1.0) / 2.0, 0.5, -1.0 / (k - 1.0));
}

MomentConstants moment_constants(double p, int k) {
  check_kp(k, p);
  static std::shared_mutex mutex;
  static std::map<std::pair<double, int>, MomentConstants> memo;
  {
    std::shared_lock lock(mutex);
    if (auto it = memo.find({p, k}); it != memo.end()) return it->second;
  }
  MomentConstants mc;
  mc.p = p;
  mc.k = k;
  mc.m_p = m_p(p);
  mc.m_2p = m_p(2.0 * p);
  mc.m_kp = m_kp(k, p);
  const double kd = k;
  mc.n_pk = (std::pow(kd, 2.0 - p) * (1.0 + kd) * mc.m_2p +
             std::pow(kd, 2.0 - p) * (kd - 1.0) * mc.m_p * mc.m_p -
             2.0 * std::pow(kd, 3.0 - 1.5 * p) * mc.m_kp) /
            mc.m_2p;
  std::unique_lock lock(mutex);
  memo.emplace(std::make_pair(p, k), mc);
  return mc;
}

double n_factor(double p, int k) { return moment_constants(p, k).n_pk; }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

// Wichura's AS241 (PPND16), inverse of the standard normal CDF.
double ppnd16(double prob) {
  const double q = prob - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0);
  }
  double r = q < 0.0 ? prob : 1.0 - prob;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
              3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
            4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
            2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
            5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

}  // namespace

double normal_quantile(double a) {
  if (!(a > 0.0 && a < 1.0)) throw ConfigError("normal_quantile: level must lie in (0, 1)");
  if (a == 0.5) return 0.0;
  // Upper quantile, computed on the smaller tail and mirrored.
  const double tail = a < 0.5 ? a : 1.0 - a;
  double z = -ppnd16(tail);
  // One Halley step against erfc.
  const double err = 0.5 * std::erfc(z / std::sqrt(2.0)) - tail;
  const double dens = std::exp(-0.5 * z * z) / std::sqrt(2.0 * EIGEN_PI);
  const double t = err / dens;
  z += t / (1.0 - 0.5 * z * t);
  return a < 0.5 ? z : -z;
}

MomentEstimate mc_moment_oracle(int k, double p, std::int64_t n_draws, std::uint64_t seed) {
  check_kp(k, p);
  if (n_draws < 10000) throw ConfigError("mc_moment_oracle: need at least 1e4 draws");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const double shift = std::sqrt(static_cast<double>(k - 1));
  double mean = 0.0;
  double m2 = 0.0;
  for (std::int64_t i = 0; i < n_draws; ++i) {
    const double z = normal(rng);
    const double zp = normal(rng);
    const double v = std::pow(std::abs(z) * std::abs(z + shift * zp), p);
    const double delta = v - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (v - mean);
  }
  const double var = m2 / static_cast<double>(n_draws - 1);
  return {mean, std::sqrt(var / static_cast<double>(n_draws))};
}

MomentEstimate mc_moment_oracle_cv(int k, double p, std::int64_t n_draws, std::uint64_t seed) {
  check_kp(k, p);
  if (n_draws < 10000) throw ConfigError("mc_moment_oracle_cv: need at least 1e4 draws");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const double kd = k;
  const double shift = std::sqrt(kd - 1.0);
  const double mp = m_p(p);
  // Controls with exact means: Z^2 W^2, Z^2, W^2, |Z|^p, |W|^p, W = Z + shift Z'.
  constexpr int kc = 5;
  Eigen::Matrix<double, kc, 1> c, sum_c = Eigen::Matrix<double, kc, 1>::Zero(), sum_cf = sum_c;
  Eigen::Matrix<double, kc, kc> sum_cc = Eigen::Matrix<double, kc, kc>::Zero();
  double sum_f = 0.0, sum_ff = 0.0;
  for (std::int64_t i = 0; i < n_draws; ++i) {
    const double z = normal(rng);
    const double w = z + shift * normal(rng);
    const double az = std::pow(std::abs(z), p);
    const double aw = std::pow(std::abs(w), p);
    const double f = az * aw;
    c << z * z * w * w - (kd + 2.0), z * z - 1.0, w * w - kd, az - mp, aw - std::pow(kd, p / 2.0) * mp;
    sum_c += c;
    sum_cc.noalias() += c * c.transpose();
    sum_cf += c * f;
    sum_f += f;
    sum_ff += f * f;
  }
  const double n = static_cast<double>(n_draws);
  const Eigen::Matrix<double, kc, 1> mean_c = sum_c / n;
  const double mean_f = sum_f / n;
  const Eigen::Matrix<double, kc, kc> cov_cc = (sum_cc - n * mean_c * mean_c.transpose()) / (n - 1.0);
  const Eigen::Matrix<double, kc, 1> cov_cf = (sum_cf - n * mean_c * mean_f) / (n - 1.0);
  const double var_f = (sum_ff - n * mean_f * mean_f) / (n - 1.0);
  const Eigen::Matrix<double, kc, 1> beta = cov_cc.ldlt().solve(cov_cf);
  const double resid_var = std::max(var_f - cov_cf.dot(beta), 0.0);
  return {mean_f - beta.dot(mean_c), std::sqrt(resid_var / n)};
}

}  // namespace semitest
