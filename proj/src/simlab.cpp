#include "semitest/simlab.hpp"

#include "semitest/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace semitest {

void SVJumpModel::validate() const {
  if (!(eta > 0.0)) throw ConfigError("SVJumpModel: eta must be positive");
  if (!(xi > 0.0)) throw ConfigError("SVJumpModel: xi must be positive");
  if (!(phi >= 0.0)) throw ConfigError("SVJumpModel: phi must be nonnegative");
  if (!(rho >= -1.0 && rho <= 1.0)) throw ConfigError("SVJumpModel: rho must lie in [-1, 1]");
  if (!(vol_jump_intensity >= 0.0)) throw ConfigError("SVJumpModel: negative jump intensity");
  if (!(vol_jump_half_width >= 0.0)) throw ConfigError("SVJumpModel: negative jump width");
  if (!(v0 > 0.0)) throw ConfigError("SVJumpModel: v0 must be positive");
}

void StableDriver::validate() const {
  if (!(beta > 0.0 && beta < 2.0)) throw ConfigError("StableDriver: beta must lie in (0, 2)");
  if (!(theta >= 0.0)) throw ConfigError("StableDriver: theta must be nonnegative");
}

void PathRecipe::validate() const {
  const bool has_jumps = stable && (stable->theta > 0.0 || stable->drift != 0.0);
  if (!include_brownian && !has_jumps)
    throw ConfigError("PathRecipe: enable the Brownian part or a stable driver");
  if (sv) sv->validate();
  if (include_brownian && !sv && !(flat_sigma > 0.0))
    throw ConfigError("PathRecipe: flat_sigma must be positive");
  if (stable) stable->validate();
  if (horizon_days < 1) throw ConfigError("PathRecipe: horizon_days must be >= 1");
  if (!(step_seconds > 0.0) || step_seconds > kSecondsPerDay)
    throw ConfigError("PathRecipe: step_seconds must lie in (0, one session]");
  if (substeps < 1) throw ConfigError("PathRecipe: substeps must be >= 1");
  if (!(noise_sd >= 0.0)) throw ConfigError("PathRecipe: noise_sd must be nonnegative");
}

Index PathRecipe::steps_per_day() const {
  return static_cast<Index>(std::floor(kSecondsPerDay / step_seconds + 1e-9));
}

double sample_stable_increment(double beta, double scale, Rng& rng) {
  std::uniform_real_distribution<double> unif(-EIGEN_PI / 2.0, EIGEN_PI / 2.0);
  double v = unif(rng);
  while (std::abs(v) >= EIGEN_PI / 2.0) v = unif(rng);
  if (beta == 1.0) return scale * std::tan(v);
  std::exponential_distribution<double> expo(1.0);
  double w = expo(rng);
  while (!(w > 0.0)) w = expo(rng);
  const double x = std::sin(beta * v) / std::pow(std::cos(v), 1.0 / beta) *
                   std::pow(std::cos((1.0 - beta) * v) / w, (1.0 - beta) / beta);
  return scale * x;
}

namespace {

// Stored log prices are logs of actual doubles, so a price export can be read back bit for bit.
double on_price_lattice(double x) {
  const double p = std::exp(x);
  return p > 0.0 && std::isfinite(p) ? std::log(p) : x;
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  // Split in a few panels so that narrow peaks are not skipped by the
  // initial three-point estimate.
  constexpr int kPanels = 64;
  const double h = (b - a) / kPanels;
  double total = 0.0;
  for (int i = 0; i < kPanels; ++i) {
    const double lo = a + i * h;
    const double hi = lo + h;
    const double flo = f(lo), fhi = f(hi), fmid = f(0.5 * (lo + hi));
    const double whole = h / 6.0 * (flo + 4.0 * fmid + fhi);
    total += adaptive_simpson(f, lo, hi, flo, fmid, fhi, whole, tol / kPanels, 40);
  }
  return total;
}

}  // namespace

double stable_tail_probability(double beta, double x) {
  if (!(beta > 0.0 && beta < 2.0)) throw ConfigError("stable_tail_probability: beta in (0, 2)");
  if (!(x >= 0.0)) throw ConfigError("stable_tail_probability: x must be nonnegative");
  if (x == 0.0) return 1.0;
  if (beta == 1.0) return 1.0 - 2.0 / EIGEN_PI * std::atan(x);
  // Zolotarev/Nolan integral representation of the symmetric CDF.
  const double expo = beta / (beta - 1.0);
  const double scale = std::pow(x, expo);
  const auto integrand = [&](double t) {
    if (t <= 0.0 || t >= EIGEN_PI / 2.0) {
      // V -> +inf at t = 0 for beta > 1 and at pi/2 for beta < 1 (and vice
      // versa -> 0); the exponential then sits at 0 or 1.
      const bool at_zero = t <= 0.0;
      const bool vanishes = (beta > 1.0) == at_zero;
      return vanishes ? 0.0 : 1.0;
    }
    const double v = std::pow(std::cos(t) / std::sin(beta * t), expo) *
                     std::cos((beta - 1.0) * t) / std::cos(t);
    return std::exp(-scale * v);
  };
  const double integral = integrate(integrand, 0.0, EIGEN_PI / 2.0, 1e-13);
  const double upper = beta < 1.0 ? 0.5 - integral / EIGEN_PI : integral / EIGEN_PI;
  return std::clamp(2.0 * upper, 0.0, 1.0);
}

namespace {

double tail_level(double eta, double step_seconds) {
  return 4.0 * std::sqrt(eta) * std::sqrt(seconds_to_years(step_seconds));
}

}  // namespace

double theta_tail_probability(double theta, double eta, double step_seconds, double beta) {
  if (!(theta > 0.0)) return 0.0;
  const double dt = seconds_to_years(step_seconds);
  return stable_tail_probability(beta, tail_level(eta, step_seconds) / (theta * std::pow(dt, 1.0 / beta)));
}

double calibrate_theta_tail(double target_p, double eta, double step_seconds, double beta) {
  if (!(target_p > 0.0 && target_p < 1.0))
    throw CalibrationError("calibrate_theta_tail: target probability must lie in (0, 1)");
  if (!(eta > 0.0) || !(step_seconds > 0.0))
    throw ConfigError("calibrate_theta_tail: eta and step must be positive");
  if (!(beta > 0.0 && beta < 2.0)) throw ConfigError("calibrate_theta_tail: beta in (0, 2)");
  const double dt = seconds_to_years(step_seconds);
  const double level = tail_level(eta, step_seconds);

  double x;  // standardized threshold with P(|S| > x) = target
  if (beta == 1.0) {
    x = std::tan(EIGEN_PI / 2.0 * (1.0 - target_p));
  } else {
    double lo = std::log(1e-12), hi = std::log(1e12);
    if (stable_tail_probability(beta, std::exp(lo)) < target_p ||
        stable_tail_probability(beta, std::exp(hi)) > target_p)
      throw CalibrationError("calibrate_theta_tail: target probability out of reach");
    for (int i = 0; i < 200 && hi - lo > 1e-14; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (stable_tail_probability(beta, std::exp(mid)) > target_p) lo = mid; else hi = mid;
    }
    x = std::exp(0.5 * (lo + hi));
  }
  if (!(x > 0.0) || !std::isfinite(x))
    throw CalibrationError("calibrate_theta_tail: no finite solution");
  return level / (std::pow(dt, 1.0 / beta) * x);
}

namespace {

struct Simulator {
  const PathRecipe& recipe;
  Rng rng;
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif{0.0, 1.0};

  explicit Simulator(const PathRecipe& r) : recipe(r), rng(r.seed) {}
};

}  // namespace

SimulatedPath simulate_path(const PathRecipe& recipe) {
  recipe.validate();
  Simulator sim(recipe);

  const Index per_day = recipe.steps_per_day();
  const Index days = recipe.horizon_days;
  const double dt_obs = seconds_to_years(recipe.step_seconds);
  const double dt = dt_obs / recipe.substeps;
  const double sqrt_dt = std::sqrt(dt);

  SimulatedPath out;
  SampledPath& path = out.path;
  path.step_seconds = recipe.step_seconds;
  path.observations.resize(days * (per_day + 1));
  path.day_offsets.clear();

  GroundTruth& truth = out.truth;
  truth.label.continuous =
      recipe.include_brownian ? HypothesisLabel::Continuous::Present : HypothesisLabel::Continuous::Absent;
  truth.label.infinite_activity = recipe.stable && recipe.stable->theta > 0.0;

  const SVJumpModel* sv = recipe.include_brownian && recipe.sv ? &*recipe.sv : nullptr;
  double v = sv ? sv->v0 : 0.0;
  double x = sv ? sv->x0 : 1.0;
  double t = 0.0;
  std::exponential_distribution<double> arrivals(sv && sv->vol_jump_intensity > 0.0 ? sv->vol_jump_intensity : 1.0);
  double next_vol_jump = sv && sv->vol_jump_intensity > 0.0 ? arrivals(sim.rng)
                                                            : std::numeric_limits<double>::infinity();

  const double stable_scale =
      recipe.stable ? recipe.stable->theta * std::pow(dt_obs, 1.0 / recipe.stable->beta) : 0.0;
  const double drift_step = recipe.stable ? recipe.stable->drift * dt_obs : 0.0;
  const double flat_step = recipe.flat_sigma * std::sqrt(dt_obs);

  Index k = 0;
  for (Index d = 0; d < days; ++d) {
    path.day_offsets.push_back(k);
    path.observations[k++] = on_price_lattice(x);
    for (Index i = 0; i < per_day; ++i) {
      double dx_c = 0.0;
      if (sv) {
        for (int s = 0; s < recipe.substeps; ++s) {
          const double vp = std::max(v, 0.0);
          const double sv_root = std::sqrt(vp);
          const auto [zb, zw] = correlated_normals(sv->rho, sim.rng, sim.normal);
          dx_c += sv_root * sqrt_dt * zw;
          truth.integrated_variance += vp * dt;
          v += sv->xi * (sv->eta - vp) * dt + sv->phi * sv_root * sqrt_dt * zb;
          t += dt;
          while (t >= next_vol_jump) {
            const double jump = sv->vol_jump_half_width * (2.0 * sim.unif(sim.rng) - 1.0);
            v = std::max(v + jump * sv->eta, 0.0);
            ++truth.vol_jumps;
            next_vol_jump += arrivals(sim.rng);
          }
        }
      } else if (recipe.include_brownian) {
        dx_c = flat_step * sim.normal(sim.rng);
        truth.integrated_variance += recipe.flat_sigma * recipe.flat_sigma * dt_obs;
      }
      double dx_j = drift_step;
      if (stable_scale > 0.0) dx_j += sample_stable_increment(recipe.stable->beta, stable_scale, sim.rng);
      truth.continuous_qv += dx_c * dx_c;
      truth.jump_qv += dx_j * dx_j;
      x += dx_c + dx_j;
      path.observations[k++] = on_price_lattice(x);
    }
  }
  path.metadata["source"] = "simlab";
  path.metadata["label"] = truth.label.to_string();
  path.metadata["seed"] = std::to_string(recipe.seed);
  if (recipe.noise_sd > 0.0) path = add_noise(path, recipe.noise_sd, mix64(recipe.seed ^ 0x6e6f697365ULL));
  return out;
}

SampledPath add_noise(const SampledPath& path, double sd, std::uint64_t seed) {
  if (!(sd >= 0.0)) throw ConfigError("add_noise: sd must be nonnegative");
  SampledPath out = path;
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, sd);
  for (Index i = 0; i < out.observations.size(); ++i)
    out.observations[i] = on_price_lattice(out.observations[i] + normal(rng));
  out.metadata["noise_sd"] = std::to_string(sd);
  return out;
}

namespace {

struct ShareEnsemble {
  std::vector<double> continuous_qv;
  std::vector<double> unit_jump_qv;  // jump QV at theta = 1
};

ShareEnsemble share_ensemble(const SVJumpModel& model, double beta, int horizon_days,
                             double step_seconds, int n_paths, std::uint64_t seed) {
  model.validate();
  if (!(beta > 0.0 && beta < 2.0)) throw ConfigError("qv share: beta must lie in (0, 2)");
  if (n_paths < 1) throw ConfigError("qv share: n_paths must be >= 1");
  ShareEnsemble e;
  PathRecipe r;
  r.include_brownian = true;
  r.sv = model;
  r.horizon_days = horizon_days;
  r.step_seconds = step_seconds;
  const double dt_obs = seconds_to_years(step_seconds);
  for (int i = 0; i < n_paths; ++i) {
    r.seed = path_seed(seed, static_cast<std::uint64_t>(i));
    const SimulatedPath sp = simulate_path(r);
    e.continuous_qv.push_back(sp.truth.continuous_qv);
    Rng rng(path_seed(seed ^ 0x4a554d50ULL, static_cast<std::uint64_t>(i)));
    const Index n = sp.path.size() - static_cast<Index>(sp.path.num_days());
    const double unit_scale = std::pow(dt_obs, 1.0 / beta);
    double jq = 0.0;
    for (Index j = 0; j < n; ++j) {
      const double y = sample_stable_increment(beta, unit_scale, rng);
      jq += y * y;
    }
    e.unit_jump_qv.push_back(jq);
  }
  return e;
}

double mean_share(const ShareEnsemble& e, double theta) {
  double total = 0.0;
  for (std::size_t i = 0; i < e.continuous_qv.size(); ++i) {
    const double j = theta * theta * e.unit_jump_qv[i];
    const double denom = j + e.continuous_qv[i];
    total += denom > 0.0 ? j / denom : 0.0;
  }
  return total / static_cast<double>(e.continuous_qv.size());
}

}  // namespace

double qv_share_at(double theta, const SVJumpModel& model, double beta, int horizon_days,
                   double step_seconds, int n_paths, std::uint64_t seed) {
  return mean_share(share_ensemble(model, beta, horizon_days, step_seconds, n_paths, seed), theta);
}

double calibrate_theta_qv_share(double target_share, const SVJumpModel& model, double beta,
                                int horizon_days, double step_seconds, int n_paths,
                                std::uint64_t seed) {
  if (!(target_share > 0.0 && target_share < 1.0))
    throw ConfigError("calibrate_theta_qv_share: target share must lie in (0, 1)");
  const ShareEnsemble e = share_ensemble(model, beta, horizon_days, step_seconds, n_paths, seed);
  double lo = std::log(1e-12), hi = std::log(1e12);
  if (!(mean_share(e, std::exp(lo)) < target_share && mean_share(e, std::exp(hi)) > target_share))
    throw CalibrationError("calibrate_theta_qv_share: target share is not bracketed");
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mean_share(e, std::exp(mid)) < target_share) lo = mid; else hi = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

}  // namespace semitest
