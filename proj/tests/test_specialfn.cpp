#include <doctest.h>

#include "semitest/errors.hpp"
#include "semitest/specialfn.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

using namespace semitest;

// Reference values below come from mpmath (30 digits) and from nested
// scipy.integrate.quad on the defining double integral.

TEST_CASE("gamma function") {
  CHECK(gamma_fn(1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(gamma_fn(0.5) == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-13));
  CHECK(gamma_fn(1.5) == doctest::Approx(std::sqrt(std::numbers::pi) / 2.0).epsilon(1e-13));
  CHECK(gamma_fn(30.0) == doctest::Approx(8.841761993739701954e30).epsilon(1e-12));
  CHECK_THROWS_AS(gamma_fn(0.0), ConfigError);
  CHECK_THROWS_AS(gamma_fn(-1.5), ConfigError);
}

TEST_CASE("gauss_2f1 identities") {
  CHECK(gauss_2f1(0.3, 1.7, 2.5, 0.0) == 1.0);
  CHECK(gauss_2f1(1.0, 1.0, 1.0, -0.5) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  for (double b : {0.7, 2.0, -3.5}) {
    for (double c : {0.5, 1.3, 4.0}) {
      CHECK(gauss_2f1(-1.0, b, c, -0.5) == doctest::Approx(1.0 - b * (-0.5) / c).epsilon(1e-13));
    }
  }
  CHECK_THROWS(gauss_2f1(1.0, 1.0, -2.0, -0.5));
  CHECK_THROWS(gauss_2f1(1.0, 1.0, 1.0, 0.5));
}

TEST_CASE("gauss_2f1 against mpmath") {
  struct Case {
    double a, b, c, x, ref;
  };
  const Case cases[] = {
      {0.3, 1.7, 2.5, -0.9, 0.87016379723155022},   {-0.75, 1.25, 0.5, -1.0, 2.6389285362543043},
      {-0.75, 1.25, 0.5, -0.5, 1.8674891762272528}, {2.2, 0.7, 1.3, -0.99, 0.46553041937476365},
      {1.5, 2.5, 3.5, -0.3, 0.75143732100577077},   {-2.5, 3.1, 0.7, -0.8, 25.502748423884021},
  };
  for (const auto& c : cases) CHECK(gauss_2f1(c.a, c.b, c.c, c.x) == doctest::Approx(c.ref).epsilon(1e-10));
}

TEST_CASE("absolute normal moments") {
  CHECK(m_p(2.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m_p(1.0) == doctest::Approx(0.7978845608).epsilon(1e-10));
  CHECK(std::abs(m_p(4.0) - 3.0) < 1e-10);
  const std::pair<double, double> quad[] = {{0.5, 0.82217895866245855}, {1.0, 0.79788456080286536},
                                            {1.5, 0.86003998732451954}, {2.0, 1.0},
                                            {3.0, 1.5957691216057307},  {4.0, 3.0}};
  for (auto [p, ref] : quad) CHECK(std::abs(m_p(p) - ref) < 1e-8);
}

TEST_CASE("m_kp analytic and quadrature values") {
  CHECK(std::abs(m_kp(2, 2.0) - 4.0) < 1e-6);
  CHECK(std::abs(m_kp(3, 2.0) - 5.0) < 1e-6);
  struct Case {
    int k;
    double p, ref;
  };
  const Case cases[] = {{2, 1.25, 1.450981229904059}, {2, 1.5, 1.9519330503831267}, {2, 1.75, 2.7429098042653925},
                        {3, 1.25, 1.6875371517209423}, {3, 1.5, 2.323099858448551},  {3, 1.75, 3.343646927499204}};
  for (const auto& c : cases) {
    CHECK(m_kp(c.k, c.p) == doctest::Approx(c.ref).epsilon(1e-10));
    CHECK(m_kp_hypergeometric(c.k, c.p) == doctest::Approx(c.ref).epsilon(1e-10));
  }
}

TEST_CASE("m_kp matches the Monte Carlo oracles") {
  std::uint64_t seed = 100;
  for (int k : {2, 3}) {
    for (double p : {1.25, 1.5, 1.75}) {
      const double q = m_kp(k, p);
      const auto plain = mc_moment_oracle(k, p, 10'000'000, seed++);
      CHECK(std::abs(q - plain.estimate) < 4.0 * plain.std_error);
      // The plain estimator's error is 1e-3 to 3e-3 at 1e7 draws, too coarse
      // for three decimals; the control-variate one resolves them.
      const auto cv = mc_moment_oracle_cv(k, p, 10'000'000, seed++);
      CHECK(cv.std_error < 2.5e-4);
      CHECK(std::abs(q - cv.estimate) < 1e-3);
      CHECK(std::abs(q - cv.estimate) < 4.0 * cv.std_error);
    }
  }
}

TEST_CASE("Cauchy-Schwarz bound on m_kp") {
  for (int k : {2, 3, 4, 6}) {
    for (double p = 0.25; p < 3.0; p += 0.25) {
      CHECK(m_kp(k, p) <= m_p(2.0 * p) * std::pow(static_cast<double>(k), p / 2.0) * (1.0 + 1e-12));
      CHECK(m_kp(k, p) > 0.0);
    }
  }
}

TEST_CASE("Gauss-Hermite tensor rule is a coarse approximation only") {
  CHECK(m_kp_gauss_hermite(2, 2.0) == doctest::Approx(4.0).epsilon(1e-8));
  CHECK(std::abs(m_kp_gauss_hermite(2, 1.5) - m_kp(2, 1.5)) < 5e-3);
}

TEST_CASE("n_factor") {
  CHECK(std::abs(n_factor(2.0, 2) - 2.0 / 3.0) < 1e-9);
  for (int k : {2, 3, 4}) {
    for (int i = 1; i < 100; ++i) {
      const double p = 1.0 + i / 100.0;
      CHECK(n_factor(p, k) > 0.0);
    }
  }
}

TEST_CASE("n_factor matches the simulated variance of the ratio") {
  // Without truncation and with iid N(0,1) increments, n Var(S) m_p^2 / m_2p
  // approaches N(p, k).
  const double p = 1.5;
  const int k = 2;
  const int n = 100'000;
  const int reps = 2000;
  std::mt19937_64 rng(77);
  std::normal_distribution<double> normal;
  std::vector<double> s(reps);
  std::vector<double> x(n);
  for (int r = 0; r < reps; ++r) {
    double fine = 0.0, coarse = 0.0;
    for (int i = 0; i < n; ++i) {
      x[i] = normal(rng);
      fine += std::pow(std::abs(x[i]), p);
    }
    for (int i = 0; i + 1 < n; i += k) coarse += std::pow(std::abs(x[i] + x[i + 1]), p);
    s[r] = fine / coarse;
  }
  double mean = 0.0;
  for (double v : s) mean += v;
  mean /= reps;
  double var = 0.0;
  for (double v : s) var += (v - mean) * (v - mean);
  var /= reps - 1;
  const double implied = var * n * m_p(p) * m_p(p) / m_p(2.0 * p);
  CHECK(implied == doctest::Approx(n_factor(p, k)).epsilon(0.12));
  CHECK(mean == doctest::Approx(std::pow(2.0, 1.0 - p / 2.0)).epsilon(1e-3));
}

TEST_CASE("normal quantile") {
  CHECK(normal_quantile(0.5) == 0.0);
  CHECK(normal_quantile(0.05) == doctest::Approx(1.644853627).epsilon(1e-9));
  CHECK(normal_quantile(0.10) == doctest::Approx(1.281551566).epsilon(1e-9));
  const std::pair<double, double> ref[] = {
      {1e-10, 6.361340902404056}, {1e-06, 4.753424308822899},  {0.001, 3.090232306167813},
      {0.01, 2.3263478740408408}, {0.025, 1.9599639845400545}, {0.2, 0.8416212335729142},
      {0.3, 0.5244005127080409},  {0.7, -0.5244005127080407},  {0.975, -1.959963984540054}};
  for (auto [a, z] : ref) CHECK(std::abs(normal_quantile(a) - z) < 1e-9);
  for (double a = 0.001; a < 1.0; a += 0.0137) CHECK(std::abs(normal_quantile(a) + normal_quantile(1.0 - a)) < 1e-9);
  for (double a = 0.01; a < 1.0; a += 0.05) CHECK(1.0 - normal_cdf(normal_quantile(a)) == doctest::Approx(a).epsilon(1e-9));
  CHECK_THROWS_AS(normal_quantile(0.0), ConfigError);
  CHECK_THROWS_AS(normal_quantile(1.0), ConfigError);
}

TEST_CASE("Monte Carlo oracle") {
  const auto a = mc_moment_oracle(2, 2.0, 1'000'000, 5);
  CHECK(std::abs(a.estimate - 4.0) < 4.0 * a.std_error);
  const auto b = mc_moment_oracle(3, 2.0, 1'000'000, 6);
  CHECK(std::abs(b.estimate - 5.0) < 4.0 * b.std_error);
  const auto c = mc_moment_oracle(2, 2.0, 1'000'000, 5);
  CHECK(c.estimate == a.estimate);
  CHECK(c.std_error == a.std_error);
  CHECK_THROWS_AS(mc_moment_oracle(2, 2.0, 100, 1), ConfigError);
}

TEST_CASE("moment constants memo under concurrent readers") {
  std::vector<MomentConstants> got(8);
  {
    std::vector<std::jthread> pool;
    for (int t = 0; t < 8; ++t) pool.emplace_back([&, t] { got[static_cast<std::size_t>(t)] = moment_constants(1.5, 2); });
  }
  for (const auto& g : got) {
    CHECK(g.m_kp == m_kp(2, 1.5));
    CHECK(g.n_pk == n_factor(1.5, 2));
    CHECK(g.m_2p >= g.m_p * g.m_p);
  }
}
