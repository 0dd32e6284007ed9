#include "semitest/report.hpp"

#include "semitest/errors.hpp"
#include "semitest/harness.hpp"
#include "semitest/presence_tests.hpp"
#include "semitest/serialize.hpp"
#include "semitest/specialfn.hpp"
#include "semitest/variation.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

namespace semitest {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void set_band(ReportRow& row, double z) {
  if (std::isfinite(row.variance)) {
    const double half = z * std::sqrt(row.variance);
    row.ci_low = row.statistic - half;
    row.ci_high = row.statistic + half;
  } else {
    row.ci_low = row.ci_high = row.z_score = kNaN;
  }
}

std::string context(const char* what, double step, double param, double alpha) {
  return std::string(what) + " at step " + fmt_double(step) + "s, param " + fmt_double(param) + ", alpha " +
         fmt_double(alpha);
}

void validate(const ReportConfig& cfg) {
  if (cfg.k < 2) throw ConfigError("ReportConfig: k must be >= 2");
  if (!(cfg.ci_level > 0.0 && cfg.ci_level < 1.0)) throw ConfigError("ReportConfig: ci_level in (0, 1)");
  if (!(cfg.varpi > 0.0 && cfg.varpi < 0.5)) throw ConfigError("ReportConfig: varpi in (0, 1/2)");
  for (double p : cfg.powers)
    if (!(p > 0.0)) throw ConfigError("ReportConfig: powers must be positive");
  for (double g : cfg.gammas)
    if (!(g > 1.0)) throw ConfigError("ReportConfig: gamma must exceed 1");
  for (double a : cfg.alphas)
    if (!(a > 0.0)) throw ConfigError("ReportConfig: alphas must be positive");
  for (double a : cfg.gamma_alphas)
    if (!(a > 0.0)) throw ConfigError("ReportConfig: gamma_alphas must be positive");
  if (!(cfg.beta_reference > 0.0 && cfg.beta_reference < 2.0) ||
      !(cfg.beta_reference_prime > 0.0 && cfg.beta_reference_prime < 2.0))
    throw ConfigError("ReportConfig: reference jump indices must lie in (0, 2)");
}

}  // namespace

EmpiricalReport run_empirical_report(const std::vector<SampledPath>& paths, const ReportConfig& cfg) {
  validate(cfg);
  if (paths.empty()) throw DataError("run_empirical_report: no paths");
  const double z = normal_quantile((1.0 - cfg.ci_level) / 2.0);
  const double kd = cfg.k;
  EmpiricalReport rep;

  for (const SampledPath& path : paths) {
    path.validate();
    const double step = path.step_seconds;
    const IncrementSeries fine = increments(path, 1);
    const IncrementSeries coarse = increments(path, cfg.k);

    for (double alpha : cfg.alphas) {
      std::vector<CutoffSpan> spans;
      std::string cutoff_note;
      try {
        spans = resolve_cutoff(path, {VolMultiple{alpha, cfg.varpi}}, cfg.per_day);
      } catch (const DegenerateStatistic& e) {
        cutoff_note = e.what();
      }
      for (double p : cfg.powers) {
        ReportRow row;
        row.statistic_name = "S";
        row.step_seconds = step;
        row.param = p;
        row.alpha = alpha;
        row.ref_brownian = limit_s_brownian(p, cfg.k);
        row.ref_no_brownian = limit_s_no_brownian(p, cfg.k, cfg.beta_reference, cfg.drift);
        row.ref_additive_noise = kd;
        row.ref_rounding = std::sqrt(kd);
        row.variance = row.z_score = kNaN;
        if (!cutoff_note.empty()) {
          row.statistic = kNaN;
          row.note = context(cutoff_note.c_str(), step, p, alpha);
          set_band(row, z);
          rep.rows.push_back(row);
          continue;
        }
        try {
          row.statistic = s_statistic(fine, coarse, p, spans);
          if (p > 1.0 && p < 2.0) {
            row.variance = v_n(fine, p, cfg.k, spans);
            row.z_score = (row.statistic - row.ref_brownian) / std::sqrt(row.variance);
          }
        } catch (const DegenerateStatistic& e) {
          row.statistic = kNaN;
          row.variance = kNaN;
          row.note = context(e.what(), step, p, alpha);
        }
        set_band(row, z);
        rep.rows.push_back(row);
      }
    }

    for (double alpha : cfg.gamma_alphas) {
      std::vector<CutoffSpan> spans;
      std::string cutoff_note;
      try {
        spans = resolve_cutoff(path, {VolMultiple{alpha, cfg.varpi}}, cfg.per_day);
      } catch (const DegenerateStatistic& e) {
        cutoff_note = e.what();
      }
      for (double g : cfg.gammas) {
        ReportRow row;
        row.statistic_name = "S_prime";
        row.step_seconds = step;
        row.param = g;
        row.alpha = alpha;
        row.ref_brownian = std::pow(g, cfg.beta_reference_prime);
        row.ref_no_brownian = g * g;
        row.ref_additive_noise = row.ref_rounding = kNaN;
        row.statistic = row.variance = row.z_score = kNaN;
        if (!cutoff_note.empty()) {
          row.note = context(cutoff_note.c_str(), step, g, alpha);
        } else {
          try {
            row.statistic = s_prime_statistic(fine, g, spans);
            row.variance = v_prime_n(fine, g, spans);
            row.z_score = (row.statistic - row.ref_no_brownian) / std::sqrt(row.variance);
          } catch (const DegenerateStatistic& e) {
            row.statistic = row.variance = kNaN;
            row.note = context(e.what(), step, g, alpha);
          }
        }
        set_band(row, z);
        rep.rows.push_back(row);
      }
    }
  }
  return rep;
}

std::string write_empirical_report(const ReportConfig& cfg, const EmpiricalReport& report,
                                   const std::string& dir, const std::string& stem, double wall_seconds) {
  std::filesystem::create_directories(dir);
  const auto csv_path = (std::filesystem::path(dir) / (stem + ".csv")).string();
  {
    std::ofstream os(csv_path);
    if (!os) throw DataError("cannot write " + csv_path);
    os << "statistic,step_seconds,param,alpha,value,variance,ci_low,ci_high,z_score,ref_brownian,"
          "ref_no_brownian,ref_additive_noise,ref_rounding,note\n";
    for (const auto& r : report.rows) {
      os << r.statistic_name << ',' << fmt_double(r.step_seconds) << ',' << fmt_double(r.param) << ','
         << fmt_double(r.alpha) << ',' << fmt_double(r.statistic) << ',' << fmt_double(r.variance) << ','
         << fmt_double(r.ci_low) << ',' << fmt_double(r.ci_high) << ',' << fmt_double(r.z_score) << ','
         << fmt_double(r.ref_brownian) << ',' << fmt_double(r.ref_no_brownian) << ','
         << fmt_double(r.ref_additive_noise) << ',' << fmt_double(r.ref_rounding) << ",\"" << r.note << "\"\n";
    }
  }
  nlohmann::json m;
  m["schema_version"] = kSchemaVersion;
  m["kind"] = "empirical-report";
  m["library_version"] = kLibraryVersion;
  m["wall_seconds"] = wall_seconds;
  m["csv"] = stem + ".csv";
  m["config"] = {{"k", cfg.k},
                 {"powers", cfg.powers},
                 {"alphas", cfg.alphas},
                 {"gammas", cfg.gammas},
                 {"gamma_alphas", cfg.gamma_alphas},
                 {"varpi", cfg.varpi},
                 {"per_day", cfg.per_day},
                 {"ci_level", cfg.ci_level},
                 {"beta_reference", cfg.beta_reference},
                 {"beta_reference_prime", cfg.beta_reference_prime},
                 {"drift", cfg.drift}};
  const auto json_path = (std::filesystem::path(dir) / (stem + ".json")).string();
  std::ofstream js(json_path);
  if (!js) throw DataError("cannot write " + json_path);
  js << m.dump(2) << "\n";
  return csv_path;
}

}  // namespace semitest
