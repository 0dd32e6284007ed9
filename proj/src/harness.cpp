#include "semitest/harness.hpp"

#include "semitest/errors.hpp"
#include "semitest/serialize.hpp"
#include "semitest/specialfn.hpp"
#include "semitest/variation.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <mutex>
#include <thread>

namespace semitest {

std::string to_string(CutoffRule r) {
  switch (r) {
    case CutoffRule::EstimatedVol: return "estimated-vol";
    case CutoffRule::ModelVol: return "model-vol";
    case CutoffRule::Percentile: return "percentile";
    case CutoffRule::RateVol: return "rate-vol";
  }
  return "?";
}

CutoffRule cutoff_rule_from_string(const std::string& s) {
  if (s == "estimated-vol") return CutoffRule::EstimatedVol;
  if (s == "model-vol") return CutoffRule::ModelVol;
  if (s == "percentile") return CutoffRule::Percentile;
  if (s == "rate-vol") return CutoffRule::RateVol;
  throw ConfigError("unknown cutoff rule '" + s + "'");
}

void ExperimentConfig::validate() const {
  recipe.validate();
  if (n_paths < 1) throw ConfigError("ExperimentConfig: n_paths must be >= 1");
  if (workers < 1) throw ConfigError("ExperimentConfig: workers must be >= 1");
  if (k < 2) throw ConfigError("ExperimentConfig: k must be >= 2");
  if (alphas.empty() || levels.empty()) throw ConfigError("ExperimentConfig: empty grid");
  if (test == TestKind::BrownianNull && powers.empty())
    throw ConfigError("ExperimentConfig: empty power grid");
  if (test == TestKind::NoBrownianNull && gammas.empty())
    throw ConfigError("ExperimentConfig: empty gamma grid");
  for (double p : powers)
    if (!(p > 0.0 && p < 2.0)) throw ConfigError("ExperimentConfig: powers must lie in (0, 2)");
  for (double g : gammas)
    if (!(g > 1.0)) throw ConfigError("ExperimentConfig: gamma must exceed 1");
  for (double a : alphas) {
    if (!(a > 0.0)) throw ConfigError("ExperimentConfig: cutoff grid values must be positive");
    if (cutoff_rule == CutoffRule::Percentile && !(a < 1.0))
      throw ConfigError("ExperimentConfig: percentile fractions must lie in (0, 1)");
  }
  for (double l : levels)
    if (!(l > 0.0 && l < 1.0)) throw ConfigError("ExperimentConfig: levels must lie in (0, 1)");
  if (!(varpi > 0.0 && varpi < 0.5)) throw ConfigError("ExperimentConfig: varpi in (0, 1/2)");
}

void ExperimentConfig::apply_profile(const std::string& profile) {
  if (profile == "quick") {
    recipe.horizon_days = 5;
    n_paths = 300;
  } else if (profile == "paper") {
    recipe.horizon_days = 21;
    n_paths = 1000;
  } else {
    throw ConfigError("unknown profile '" + profile + "' (quick|paper)");
  }
}

namespace {

double reference_sigma(const PathRecipe& r) {
  return r.sv ? std::sqrt(r.sv->eta) : r.flat_sigma;
}

std::vector<GridPoint> make_grid(const ExperimentConfig& cfg) {
  std::vector<GridPoint> grid;
  const auto& params = cfg.test == TestKind::BrownianNull ? cfg.powers : cfg.gammas;
  for (double a : cfg.alphas) {
    for (double v : params) {
      GridPoint g{a, v, true};
      if (cfg.test == TestKind::BrownianNull) g.standardized = v > 1.0 && v < 2.0;
      grid.push_back(g);
    }
  }
  return grid;
}

TruncationSpec truncation_for(const ExperimentConfig& cfg, double alpha) {
  switch (cfg.cutoff_rule) {
    case CutoffRule::EstimatedVol: return {VolMultiple{alpha, cfg.varpi}};
    case CutoffRule::ModelVol:
      return {Absolute{alpha * reference_sigma(cfg.recipe) * std::sqrt(seconds_to_years(cfg.recipe.step_seconds))}};
    case CutoffRule::Percentile: return {Percentile{alpha}};
    case CutoffRule::RateVol:
      return {Absolute{alpha * reference_sigma(cfg.recipe) *
                       std::pow(seconds_to_years(cfg.recipe.step_seconds), cfg.varpi)}};
  }
  throw ConfigError("bad cutoff rule");
}

std::vector<PathOutcome> evaluate_path(const ExperimentConfig& cfg, const std::vector<GridPoint>& grid,
                                       std::uint64_t index) {
  PathRecipe recipe = cfg.recipe;
  recipe.seed = path_seed(cfg.master_seed, index);
  const SimulatedPath sp = simulate_path(recipe);
  const IncrementSeries fine = increments(sp.path, 1);
  const IncrementSeries coarse =
      cfg.test == TestKind::BrownianNull ? increments(sp.path, cfg.k) : IncrementSeries{};

  std::vector<PathOutcome> out(grid.size());
  double current_alpha = std::numeric_limits<double>::quiet_NaN();
  std::vector<CutoffSpan> cutoffs;
  bool cutoff_failed = false;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const GridPoint& gp = grid[g];
    PathOutcome& o = out[g];
    o.reject.assign(cfg.levels.size(), 0);
    if (gp.alpha != current_alpha) {
      current_alpha = gp.alpha;
      cutoff_failed = false;
      try {
        cutoffs = resolve_cutoff(sp.path, truncation_for(cfg, gp.alpha), cfg.per_day);
      } catch (const DegenerateStatistic&) {
        cutoff_failed = true;
      }
    }
    if (cutoff_failed) {
      o.degenerate = true;
      continue;
    }
    try {
      if (cfg.test == TestKind::BrownianNull) {
        if (!gp.standardized) {
          o.statistic = s_statistic(fine, coarse, gp.param, cutoffs);
          continue;
        }
        BrownianNullConfig tc;
        tc.p = gp.param;
        tc.k = cfg.k;
        tc.truncation = truncation_for(cfg, gp.alpha);
        tc.per_day = cfg.per_day;
        for (std::size_t l = 0; l < cfg.levels.size(); ++l) {
          tc.level = cfg.levels[l];
          const auto r = test_brownian_null(fine, coarse, tc, cutoffs);
          o.statistic = r.s_n;
          o.variance = r.v_n;
          o.z_score = r.z_score;
          o.reject[l] = r.reject;
        }
      } else {
        NoBrownianNullConfig tc;
        tc.gamma = gp.param;
        tc.truncation = truncation_for(cfg, gp.alpha);
        tc.per_day = cfg.per_day;
        for (std::size_t l = 0; l < cfg.levels.size(); ++l) {
          tc.level = cfg.levels[l];
          const auto r = test_nobrownian_null(fine, tc, cutoffs);
          o.statistic = r.s_prime_n;
          o.variance = r.v_prime_n;
          o.z_score = r.z_score;
          o.reject[l] = r.reject;
        }
      }
    } catch (const DegenerateStatistic&) {
      o = PathOutcome{};
      o.reject.assign(cfg.levels.size(), 0);
      o.degenerate = true;
    }
  }
  return out;
}

}  // namespace

Ensemble run_ensemble(const ExperimentConfig& cfg) {
  cfg.validate();
  Ensemble e;
  e.grid = make_grid(cfg);
  e.label.continuous = cfg.recipe.include_brownian ? HypothesisLabel::Continuous::Present
                                                   : HypothesisLabel::Continuous::Absent;
  e.label.infinite_activity = cfg.recipe.stable && cfg.recipe.stable->theta > 0.0;
  e.outcomes.resize(static_cast<std::size_t>(cfg.n_paths));

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (int i = next++; i < cfg.n_paths; i = next++) {
      try {
        e.outcomes[static_cast<std::size_t>(i)] = evaluate_path(cfg, e.grid, static_cast<std::uint64_t>(i));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_workers = std::min(cfg.workers, cfg.n_paths);
  if (n_workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return e;
}

RejectionTable rejection_table(const ExperimentConfig& cfg, const Ensemble& e) {
  RejectionTable t;
  for (std::size_t g = 0; g < e.grid.size(); ++g) {
    if (!e.grid[g].standardized) continue;
    for (std::size_t l = 0; l < cfg.levels.size(); ++l) {
      RejectionRow row;
      row.point = e.grid[g];
      row.level = cfg.levels[l];
      int rejects = 0;
      for (const auto& path : e.outcomes) {
        const PathOutcome& o = path[g];
        if (o.degenerate) {
          ++row.n_degenerate;
          continue;
        }
        ++row.n_valid;
        rejects += o.reject[l] ? 1 : 0;
      }
      if (row.n_valid > 0) {
        row.rate = static_cast<double>(rejects) / row.n_valid;
        row.std_error = std::sqrt(row.rate * (1.0 - row.rate) / row.n_valid);
      }
      row.degenerate_warning = row.n_degenerate * 10 > static_cast<int>(e.outcomes.size());
      t.rows.push_back(row);
    }
  }
  return t;
}

double limit_s_brownian(double p, int k) { return std::pow(static_cast<double>(k), 1.0 - p / 2.0); }

double limit_s_no_brownian(double p, int k, double beta, bool drift) {
  const double kd = k;
  if (p <= 1.0 && drift) return std::pow(kd, 1.0 - p);
  if (p > beta) return 1.0;
  return std::pow(kd, 1.0 - p / beta);
}

std::vector<CurveRow> limit_curves(const ExperimentConfig& cfg, const Ensemble& e) {
  std::vector<CurveRow> rows;
  const double beta = cfg.recipe.stable ? cfg.recipe.stable->beta : 1.0;
  const bool drift = cfg.recipe.stable && cfg.recipe.stable->drift != 0.0;
  for (std::size_t g = 0; g < e.grid.size(); ++g) {
    CurveRow row;
    row.point = e.grid[g];
    double sum = 0.0, sum2 = 0.0;
    for (const auto& path : e.outcomes) {
      const PathOutcome& o = path[g];
      if (o.degenerate) {
        ++row.n_degenerate;
        continue;
      }
      ++row.n_valid;
      sum += o.statistic;
      sum2 += o.statistic * o.statistic;
    }
    if (row.n_valid > 0) {
      row.mean = sum / row.n_valid;
      row.sd = row.n_valid > 1 ? std::sqrt(std::max(0.0, (sum2 - row.n_valid * row.mean * row.mean) / (row.n_valid - 1))) : 0.0;
    }
    if (cfg.test == TestKind::BrownianNull) {
      row.limit_brownian = limit_s_brownian(row.point.param, cfg.k);
      row.limit_no_brownian = limit_s_no_brownian(row.point.param, cfg.k, beta, drift);
    } else {
      row.limit_brownian = std::pow(row.point.param, beta);
      row.limit_no_brownian = row.point.param * row.point.param;
    }
    row.limit_expected = e.label.brownian_present() ? row.limit_brownian : row.limit_no_brownian;
    rows.push_back(row);
  }
  return rows;
}

double ks_distance_normal(std::span<const double> sample) {
  if (sample.empty()) return 0.0;
  std::vector<double> s(sample.begin(), sample.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = normal_cdf(s[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

NormalitySummary normality_summary(std::span<const double> sample) {
  NormalitySummary s;
  s.n = static_cast<int>(sample.size());
  if (sample.empty()) return s;
  const Eigen::Map<const Eigen::ArrayXd> x(sample.data(), static_cast<Index>(sample.size()));
  s.mean = x.mean();
  const Eigen::ArrayXd c = x - s.mean;
  const double n = static_cast<double>(sample.size());
  s.variance = sample.size() > 1 ? c.square().sum() / (n - 1.0) : 0.0;
  const double m2 = c.square().mean();
  s.skewness = m2 > 0.0 ? c.cube().mean() / std::pow(m2, 1.5) : 0.0;
  s.ks_distance = ks_distance_normal(sample);
  return s;
}

std::vector<HistogramRow> standardized_histograms(const Ensemble& e) {
  std::vector<HistogramRow> rows;
  for (std::size_t g = 0; g < e.grid.size(); ++g) {
    if (!e.grid[g].standardized) continue;
    HistogramRow row;
    row.point = e.grid[g];
    for (const auto& path : e.outcomes) {
      if (path[g].degenerate) {
        ++row.n_degenerate;
        continue;
      }
      row.z_scores.push_back(path[g].z_score);
    }
    row.summary = normality_summary(row.z_scores);
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

template <typename Rows, typename Writer>
std::string write_outputs(const ExperimentConfig& cfg, const Rows& rows, const std::string& stem,
                          double wall_seconds, const std::string& kind, Writer&& write_csv) {
  if (cfg.output_path.empty()) return {};
  std::filesystem::create_directories(cfg.output_path);
  const auto csv_path = (std::filesystem::path(cfg.output_path) / (stem + ".csv")).string();
  {
    std::ofstream csv(csv_path);
    if (!csv) throw DataError("cannot write " + csv_path);
    write_csv(csv, rows);
  }
  nlohmann::json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["kind"] = kind;
  manifest["config"] = to_json(cfg);
  manifest["master_seed"] = cfg.master_seed;
  manifest["library_version"] = kLibraryVersion;
  manifest["wall_seconds"] = wall_seconds;
  manifest["csv"] = stem + ".csv";
  const auto json_path = (std::filesystem::path(cfg.output_path) / (stem + ".json")).string();
  std::ofstream js(json_path);
  if (!js) throw DataError("cannot write " + json_path);
  js << manifest.dump(2) << "\n";
  return csv_path;
}

const char* param_name(const ExperimentConfig& cfg) {
  return cfg.test == TestKind::BrownianNull ? "p" : "gamma";
}

}  // namespace

std::string write_rejection_table(const ExperimentConfig& cfg, const RejectionTable& t,
                                  const std::string& stem, double wall_seconds) {
  return write_outputs(cfg, t, stem, wall_seconds, "rejection", [&](std::ostream& os, const RejectionTable& tab) {
    os << "alpha," << param_name(cfg) << ",level,rate,std_error,n_valid,n_degenerate,degenerate_warning\n";
    for (const auto& r : tab.rows) {
      os << fmt_double(r.point.alpha) << ',' << fmt_double(r.point.param) << ',' << fmt_double(r.level) << ','
         << fmt_double(r.rate) << ',' << fmt_double(r.std_error) << ',' << r.n_valid << ',' << r.n_degenerate
         << ',' << (r.degenerate_warning ? 1 : 0) << '\n';
    }
  });
}

std::string write_limit_curves(const ExperimentConfig& cfg, const std::vector<CurveRow>& rows,
                               const std::string& stem, double wall_seconds) {
  return write_outputs(cfg, rows, stem, wall_seconds, "limit-curves", [&](std::ostream& os, const std::vector<CurveRow>& rs) {
    os << "alpha," << param_name(cfg)
       << ",standardized,mean,sd,n_valid,n_degenerate,limit_brownian,limit_no_brownian,limit_expected\n";
    for (const auto& r : rs) {
      os << fmt_double(r.point.alpha) << ',' << fmt_double(r.point.param) << ',' << (r.point.standardized ? 1 : 0)
         << ',' << fmt_double(r.mean) << ',' << fmt_double(r.sd) << ',' << r.n_valid << ',' << r.n_degenerate << ','
         << fmt_double(r.limit_brownian) << ',' << fmt_double(r.limit_no_brownian) << ','
         << fmt_double(r.limit_expected) << '\n';
    }
  });
}

std::string write_histograms(const ExperimentConfig& cfg, const std::vector<HistogramRow>& rows,
                             const std::string& stem, double wall_seconds) {
  return write_outputs(cfg, rows, stem, wall_seconds, "standardized", [&](std::ostream& os, const std::vector<HistogramRow>& rs) {
    os << "alpha," << param_name(cfg) << ",path_index,z_score\n";
    for (const auto& r : rs) {
      for (std::size_t i = 0; i < r.z_scores.size(); ++i)
        os << fmt_double(r.point.alpha) << ',' << fmt_double(r.point.param) << ',' << i << ','
           << fmt_double(r.z_scores[i]) << '\n';
    }
  });
}

RejectionTable run_rejection_experiment(const ExperimentConfig& cfg) {
  return rejection_table(cfg, run_ensemble(cfg));
}

std::vector<CurveRow> run_limit_curves(const ExperimentConfig& cfg) {
  return limit_curves(cfg, run_ensemble(cfg));
}

std::vector<HistogramRow> run_standardized_histograms(const ExperimentConfig& cfg) {
  return standardized_histograms(run_ensemble(cfg));
}

SVJumpModel reference_sv_model() { return SVJumpModel{}; }

PathRecipe brownian_plus_stable(double theta, double beta) {
  PathRecipe r;
  r.include_brownian = true;
  r.sv = reference_sv_model();
  r.stable = StableDriver{beta, theta, 0.0};
  return r;
}

PathRecipe stable_only(double theta, double beta) {
  PathRecipe r;
  r.include_brownian = false;
  // Kept so that model-vol cutoffs use the same reference scale.
  r.sv = reference_sv_model();
  r.stable = StableDriver{beta, theta, 0.0};
  return r;
}

double theta_for_brownian_null_study(double step_seconds) {
  return calibrate_theta_tail(1e-4, reference_sv_model().eta, step_seconds, 1.0);
}

double theta_for_nobrownian_null_study(double step_seconds) {
  return calibrate_theta_tail(3e-3, reference_sv_model().eta, step_seconds, 1.0);
}

}  // namespace semitest
