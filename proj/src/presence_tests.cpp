#include "semitest/presence_tests.hpp"

#include "semitest/errors.hpp"
#include "semitest/specialfn.hpp"
#include "semitest/variation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace semitest {

std::string HypothesisLabel::to_string() const {
  std::string s = brownian_present() ? "W" : "noW";
  if (infinite_activity) s += "+ibeta";
  return s;
}

namespace {

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("level must lie in (0, 1)");
}

std::vector<CutoffSpan> single_cutoff(const SampledPath& path, double u) {
  if (!(u > 0.0)) throw ConfigError("cutoff u must be positive");
  return {CutoffSpan{0, path.num_days(), u}};
}

std::optional<double> rate_varpi(const TruncationSpec& t, std::optional<double> varpi) {
  if (varpi) return varpi;
  if (const auto* vm = std::get_if<VolMultiple>(&t.mode)) return vm->varpi;
  return std::nullopt;
}

void enforce_rate_conditions(TestKind kind, std::optional<double> p, std::optional<double> beta0,
                             const TruncationSpec& t, std::optional<double> varpi, bool override) {
  if (!beta0 || override) return;
  const auto w = rate_varpi(t, varpi);
  if (!w) throw ConfigError("rate check needs varpi: set it explicitly for this truncation mode");
  const RateCheck rc = validate_rate_conditions(kind, p, *beta0, *w);
  if (!rc.pass) throw ConfigError("rate conditions violated: " + rc.explanation);
}

void summarize_cutoffs(std::span<const CutoffSpan> cutoffs, std::map<std::string, double>& diag) {
  double lo = cutoffs.front().u, hi = lo, sum = 0.0;
  for (const auto& c : cutoffs) {
    lo = std::min(lo, c.u);
    hi = std::max(hi, c.u);
    sum += c.u;
  }
  diag["u_min"] = lo;
  diag["u_max"] = hi;
  diag["u_mean"] = sum / static_cast<double>(cutoffs.size());
}

}  // namespace

void BrownianNullConfig::validate() const {
  if (!(p > 1.0 && p < 2.0)) throw ConfigError("BrownianNullConfig: p must lie in (1, 2)");
  if (k < 2) throw ConfigError("BrownianNullConfig: k must be >= 2");
  check_level(level);
  truncation.validate();
  if (beta0 && !(*beta0 > 0.0 && *beta0 < 1.0))
    throw ConfigError("BrownianNullConfig: beta0 must lie in (0, 1)");
}

void NoBrownianNullConfig::validate() const {
  if (!(gamma > 1.0)) throw ConfigError("NoBrownianNullConfig: gamma must exceed 1");
  check_level(level);
  truncation.validate();
  if (beta0 && !(*beta0 >= 1.0 && *beta0 < 2.0))
    throw ConfigError("NoBrownianNullConfig: beta0 must lie in [1, 2)");
}

double s_statistic(const IncrementSeries& fine, const IncrementSeries& coarse, double p,
                   std::span<const CutoffSpan> cutoffs) {
  const double num = truncated_power_variation(fine, p, cutoffs);
  const double den = truncated_power_variation(coarse, p, cutoffs);
  if (!(den > 0.0))
    throw DegenerateStatistic("S_n: B(p,u,k*delta) = 0, every coarse increment exceeds u");
  return num / den;
}

double s_statistic(const SampledPath& path, double p, int k, double u) {
  if (k < 2) throw ConfigError("s_statistic: k must be >= 2");
  const auto cut = single_cutoff(path, u);
  return s_statistic(increments(path, 1), increments(path, k), p, cut);
}

double v_n(const IncrementSeries& fine, double p, int k, std::span<const CutoffSpan> cutoffs) {
  const double bp = truncated_power_variation(fine, p, cutoffs);
  if (!(bp > 0.0)) throw DegenerateStatistic("V_n: B(p,u,delta) = 0");
  const double b2p = truncated_power_variation(fine, 2.0 * p, cutoffs);
  return n_factor(p, k) * b2p / (bp * bp);
}

double v_n(const SampledPath& path, double p, int k, double u) {
  const auto cut = single_cutoff(path, u);
  return v_n(increments(path, 1), p, k, cut);
}

namespace {

struct SecondTestParts {
  double b2_u = 0.0, b2_gu = 0.0, b4_u = 0.0, b4_gu = 0.0;
  Index u_u = 0, u_gu = 0;
};

SecondTestParts second_parts(const IncrementSeries& fine, double gamma,
                             std::span<const CutoffSpan> cutoffs) {
  SecondTestParts s;
  s.b2_u = truncated_power_variation(fine, 2.0, cutoffs);
  s.b2_gu = truncated_power_variation(fine, 2.0, cutoffs, gamma);
  s.b4_u = truncated_power_variation(fine, 4.0, cutoffs);
  s.b4_gu = truncated_power_variation(fine, 4.0, cutoffs, gamma);
  s.u_u = exceedance_count(fine, cutoffs);
  s.u_gu = exceedance_count(fine, cutoffs, gamma);
  return s;
}

double s_prime_from(const SecondTestParts& s) {
  if (!(s.b2_u > 0.0)) throw DegenerateStatistic("S'_n: B(2,u,delta) = 0");
  if (s.u_gu == 0) throw DegenerateStatistic("S'_n: U(gamma*u,delta) = 0, no increment above gamma*u");
  return s.b2_gu * static_cast<double>(s.u_u) / (s.b2_u * static_cast<double>(s.u_gu));
}

double v_prime_from(const SecondTestParts& s, double gamma) {
  if (!(s.b2_u > 0.0)) throw DegenerateStatistic("V'_n: B(2,u,delta) = 0");
  if (!(s.b2_gu > 0.0)) throw DegenerateStatistic("V'_n: B(2,gamma*u,delta) = 0");
  if (s.u_u == 0) throw DegenerateStatistic("V'_n: U(u,delta) = 0");
  if (s.u_gu == 0) throw DegenerateStatistic("V'_n: U(gamma*u,delta) = 0");
  const double g2 = gamma * gamma;
  const double at_u = s.b4_u / (s.b2_u * s.b2_u) + 1.0 / static_cast<double>(s.u_u);
  const double at_gu = s.b4_gu / (s.b2_gu * s.b2_gu) + 1.0 / static_cast<double>(s.u_gu);
  return g2 * g2 * (at_u + (1.0 - 2.0 / g2) * at_gu);
}

void check_gamma(double gamma) {
  if (!(gamma > 1.0)) throw ConfigError("gamma must exceed 1");
}

}  // namespace

double s_prime_statistic(const IncrementSeries& fine, double gamma,
                         std::span<const CutoffSpan> cutoffs) {
  check_gamma(gamma);
  return s_prime_from(second_parts(fine, gamma, cutoffs));
}

double s_prime_statistic(const SampledPath& path, double gamma, double u) {
  const auto cut = single_cutoff(path, u);
  return s_prime_statistic(increments(path, 1), gamma, cut);
}

double v_prime_n(const IncrementSeries& fine, double gamma, std::span<const CutoffSpan> cutoffs) {
  check_gamma(gamma);
  return v_prime_from(second_parts(fine, gamma, cutoffs), gamma);
}

double v_prime_n(const SampledPath& path, double gamma, double u) {
  const auto cut = single_cutoff(path, u);
  return v_prime_n(increments(path, 1), gamma, cut);
}

BrownianNullResult test_brownian_null(const IncrementSeries& fine, const IncrementSeries& coarse,
                                      const BrownianNullConfig& cfg,
                                      std::span<const CutoffSpan> cutoffs) {
  cfg.validate();
  enforce_rate_conditions(TestKind::BrownianNull, cfg.p, cfg.beta0, cfg.truncation, cfg.varpi,
                          cfg.override_rate_check);
  BrownianNullResult r;
  r.level = cfg.level;
  r.cutoffs.assign(cutoffs.begin(), cutoffs.end());
  const double b_fine = truncated_power_variation(fine, cfg.p, cutoffs);
  const double b_coarse = truncated_power_variation(coarse, cfg.p, cutoffs);
  const double b_2p = truncated_power_variation(fine, 2.0 * cfg.p, cutoffs);
  r.diagnostics["b_p_fine"] = b_fine;
  r.diagnostics["b_p_coarse"] = b_coarse;
  r.diagnostics["b_2p_fine"] = b_2p;
  r.diagnostics["n_fine"] = static_cast<double>(fine.size());
  r.diagnostics["n_coarse"] = static_cast<double>(coarse.size());
  r.diagnostics["exceed_fine"] = static_cast<double>(exceedance_count(fine, cutoffs));
  r.diagnostics["exceed_coarse"] = static_cast<double>(exceedance_count(coarse, cutoffs));
  summarize_cutoffs(cutoffs, r.diagnostics);

  r.s_n = s_statistic(fine, coarse, cfg.p, cutoffs);
  r.v_n = v_n(fine, cfg.p, cfg.k, cutoffs);
  if (!(r.v_n > 0.0)) throw DegenerateStatistic("V_n = 0");
  r.null_limit = std::pow(static_cast<double>(cfg.k), 1.0 - cfg.p / 2.0);
  r.critical_value = r.null_limit - normal_quantile(cfg.level) * std::sqrt(r.v_n);
  r.z_score = (r.s_n - r.null_limit) / std::sqrt(r.v_n);
  r.reject = r.s_n < r.critical_value;
  return r;
}

BrownianNullResult test_brownian_null(const SampledPath& path, const BrownianNullConfig& cfg) {
  cfg.validate();
  const auto cutoffs = resolve_cutoff(path, cfg.truncation, cfg.per_day);
  return test_brownian_null(increments(path, 1), increments(path, cfg.k), cfg, cutoffs);
}

NoBrownianNullResult test_nobrownian_null(const IncrementSeries& fine,
                                          const NoBrownianNullConfig& cfg,
                                          std::span<const CutoffSpan> cutoffs) {
  cfg.validate();
  enforce_rate_conditions(TestKind::NoBrownianNull, std::nullopt, cfg.beta0, cfg.truncation,
                          cfg.varpi, cfg.override_rate_check);
  NoBrownianNullResult r;
  r.level = cfg.level;
  r.cutoffs.assign(cutoffs.begin(), cutoffs.end());
  const SecondTestParts s = second_parts(fine, cfg.gamma, cutoffs);
  r.diagnostics["b2_u"] = s.b2_u;
  r.diagnostics["b2_gamma_u"] = s.b2_gu;
  r.diagnostics["b4_u"] = s.b4_u;
  r.diagnostics["b4_gamma_u"] = s.b4_gu;
  r.diagnostics["exceed_u"] = static_cast<double>(s.u_u);
  r.diagnostics["exceed_gamma_u"] = static_cast<double>(s.u_gu);
  r.diagnostics["n_fine"] = static_cast<double>(fine.size());
  summarize_cutoffs(cutoffs, r.diagnostics);

  r.s_prime_n = s_prime_from(s);
  r.v_prime_n = v_prime_from(s, cfg.gamma);
  if (!(r.v_prime_n > 0.0)) throw DegenerateStatistic("V'_n = 0");
  r.null_limit = cfg.gamma * cfg.gamma;
  r.critical_value = r.null_limit - normal_quantile(cfg.level) * std::sqrt(r.v_prime_n);
  r.z_score = (r.s_prime_n - r.null_limit) / std::sqrt(r.v_prime_n);
  r.reject = r.s_prime_n < r.critical_value;
  return r;
}

NoBrownianNullResult test_nobrownian_null(const SampledPath& path, const NoBrownianNullConfig& cfg) {
  cfg.validate();
  const auto cutoffs = resolve_cutoff(path, cfg.truncation, cfg.per_day);
  return test_nobrownian_null(increments(path, 1), cfg, cutoffs);
}

RateCheck validate_rate_conditions(TestKind kind, std::optional<double> p, double beta0,
                                   double varpi) {
  RateCheck rc;
  std::ostringstream why;
  if (kind == TestKind::BrownianNull) {
    if (!(beta0 > 0.0 && beta0 < 1.0)) {
      rc.explanation = "beta0 must lie in (0, 1) for the Brownian-null test";
      return rc;
    }
    if (!p) {
      rc.explanation = "the Brownian-null test needs a power p";
      return rc;
    }
    const double pv = *p;
    rc.varpi_lo = (pv - 1.0) / (2.0 * pv - 2.0 * beta0);
    rc.varpi_hi = (pv - 1.0) / pv;
    if (!(pv > 2.0 * beta0 && pv < 2.0)) {
      why << "p = " << pv << " must lie in (2*beta0, 2) = (" << 2.0 * beta0 << ", 2)";
      rc.explanation = why.str();
      return rc;
    }
  } else {
    if (!(beta0 >= 1.0 && beta0 < 2.0)) {
      rc.explanation = "beta0 must lie in [1, 2) for the no-Brownian-null test";
      return rc;
    }
    rc.varpi_lo = 0.0;
    rc.varpi_hi = (2.0 - beta0) / (3.0 * beta0);
  }
  rc.pass = varpi > rc.varpi_lo && varpi < rc.varpi_hi;
  why << "varpi = " << varpi << (rc.pass ? " lies in " : " is outside ") << "(" << rc.varpi_lo
      << ", " << rc.varpi_hi << ")";
  rc.explanation = why.str();
  return rc;
}

bool recompute_decision(const BrownianNullResult& r) {
  return r.s_n < r.null_limit - normal_quantile(r.level) * std::sqrt(r.v_n);
}

bool recompute_decision(const NoBrownianNullResult& r) {
  return r.s_prime_n < r.null_limit - normal_quantile(r.level) * std::sqrt(r.v_prime_n);
}

}  // namespace semitest
