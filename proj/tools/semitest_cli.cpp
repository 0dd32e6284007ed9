// Command-line front end: simulate paths, run either test on data, run
// Monte Carlo studies and empirical reports.
#include "semitest/errors.hpp"
#include "semitest/harness.hpp"
#include "semitest/ingest.hpp"
#include "semitest/presence_tests.hpp"
#include "semitest/report.hpp"
#include "semitest/serialize.hpp"
#include "semitest/simlab.hpp"
#include "semitest/variation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace semitest;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDegenerate = 4;

double parse_clock(const std::string& s) {
  int h = 0, m = 0;
  char colon = 0;
  std::istringstream is(s);
  if (!(is >> h >> colon >> m) || colon != ':' || h < 0 || h > 24 || m < 0 || m > 59)
    throw ConfigError("bad time of day '" + s + "' (want HH:MM)");
  return h * 3600.0 + m * 60.0;
}

struct InputOptions {
  std::string path_file;
  std::string tick_file;
  double step = 5.0;
  std::string open = "09:30";
  std::string close = "16:00";
  std::vector<std::string> dates;
  std::vector<std::string> conditions;
  bool sort = false;

  void attach(CLI::App* cmd) {
    auto* pf = cmd->add_option("--path", path_file, "Path CSV (grid_index,log_price,day_id)");
    auto* tf = cmd->add_option("--ticks", tick_file, "Tick CSV (timestamp,price[,condition])");
    pf->excludes(tf);
    cmd->add_option("--step", step, "Sampling step in seconds")->check(CLI::PositiveNumber);
    cmd->add_option("--open", open, "Session open, HH:MM UTC");
    cmd->add_option("--close", close, "Session close, HH:MM UTC");
    cmd->add_option("--dates", dates, "Trading dates YYYY-MM-DD (default: every date with ticks)");
    cmd->add_option("--conditions", conditions, "Allowed condition codes")->delimiter(',');
    cmd->add_flag("--sort", sort, "Sort ticks instead of rejecting out-of-order rows");
  }

  bool has_ticks() const { return !tick_file.empty(); }

  LoadOptions load_options() const {
    LoadOptions lo;
    lo.sort = sort;
    if (!conditions.empty()) lo.condition_allowlist = std::set<std::string>(conditions.begin(), conditions.end());
    return lo;
  }

  SessionSpec session(const TickSeries& ticks) const {
    SessionSpec s;
    s.open_seconds = parse_clock(open);
    s.close_seconds = parse_clock(close);
    if (dates.empty()) {
      s.calendar = calendar_from_ticks(ticks);
    } else {
      for (const auto& d : dates) s.calendar.insert(parse_date(d));
    }
    return s;
  }

  SampledPath sample(const TickSeries& ticks, double at_step) const {
    auto st = previous_tick_sample(ticks, at_step, session(ticks));
    if (!st.report.skipped_days.empty()) {
      std::cerr << "note: skipped " << st.report.skipped_days.size() << " day(s) without ticks:";
      for (auto d : st.report.skipped_days) std::cerr << ' ' << format_date(d);
      std::cerr << '\n';
    }
    if (!st.report.backfilled_days.empty())
      std::cerr << "note: " << st.report.backfilled_days.size() << " day(s) back-filled before the first tick\n";
    return st.path;
  }

  SampledPath load() const {
    if (has_ticks()) return sample(load_ticks(tick_file, load_options()), step);
    if (path_file.empty()) throw ConfigError("an input is required: --path or --ticks");
    return read_path_csv(path_file, step);
  }
};

void write_json(const std::string& dir, const std::string& name, const nlohmann::json& j) {
  std::cout << j.dump(2) << '\n';
  if (dir.empty()) return;
  fs::create_directories(dir);
  std::ofstream os(fs::path(dir) / name);
  if (!os) throw DataError("cannot write " + (fs::path(dir) / name).string());
  os << j.dump(2) << '\n';
}

TruncationSpec truncation_from_flags(double alpha, double varpi, double percentile, double absolute) {
  if (absolute > 0.0) return {Absolute{absolute}};
  if (percentile > 0.0) return {Percentile{percentile}};
  return {VolMultiple{alpha, varpi}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tests for the presence of a Brownian component in high-frequency prices"};
  app.require_subcommand(1);
  std::uint64_t seed = 20100101;
  std::string out_dir;
  std::string profile;
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--profile", profile, "Study size: quick or paper")->check(CLI::IsMember({"quick", "paper"}));

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate one path and write it as CSV");
  bool sim_no_brownian = false, sim_flat = false;
  double sim_beta = 1.0, sim_theta = -1.0, sim_tail = -1.0, sim_drift = 0.0, sim_noise = 0.0, sim_step = 5.0;
  int sim_days = 21;
  std::string sim_format = "path";
  sim->add_flag("--no-brownian", sim_no_brownian, "Drop the Brownian component");
  sim->add_flag("--flat-vol", sim_flat, "Constant volatility instead of the SV model");
  sim->add_option("--beta", sim_beta, "Stable index in (0, 2)");
  auto* th = sim->add_option("--theta", sim_theta, "Stable scale");
  sim->add_option("--tail-prob", sim_tail, "Calibrate theta to this tail probability")->excludes(th);
  sim->add_option("--drift", sim_drift, "Drift per year");
  sim->add_option("--noise", sim_noise, "Additive noise standard deviation");
  sim->add_option("--days", sim_days, "Trading days")->check(CLI::PositiveNumber);
  sim->add_option("--step", sim_step, "Step in seconds")->check(CLI::PositiveNumber);
  sim->add_option("--format", sim_format, "path or ticks")->check(CLI::IsMember({"path", "ticks"}));

  // test-bm / test-nobm
  auto* tbm = app.add_subcommand("test-bm", "Test the null that a Brownian component is present");
  auto* tnb = app.add_subcommand("test-nobm", "Test the null that no Brownian component is present");
  InputOptions bm_in, nb_in;
  bm_in.attach(tbm);
  nb_in.attach(tnb);
  BrownianNullConfig bm_cfg;
  NoBrownianNullConfig nb_cfg;
  double bm_alpha = 7.0, bm_varpi = 0.3, bm_pct = -1.0, bm_abs = -1.0, bm_beta0 = -1.0;
  double nb_alpha = -1.0, nb_varpi = 0.3, nb_pct = 0.05, nb_abs = -1.0, nb_beta0 = -1.0;
  tbm->add_option("--p", bm_cfg.p, "Power in (1, 2)");
  tbm->add_option("--k", bm_cfg.k, "Step multiplier");
  tbm->add_option("--alpha", bm_alpha, "Cutoff in estimated standard deviations");
  tbm->add_option("--varpi", bm_varpi, "Nominal cutoff rate exponent");
  tbm->add_option("--percentile", bm_pct, "Cutoff as the fraction of increments above it");
  tbm->add_option("--absolute", bm_abs, "Fixed cutoff");
  tbm->add_option("--level", bm_cfg.level, "Significance level");
  tbm->add_option("--beta0", bm_beta0, "Upper bound on the jump index (enables rate checks)");
  tbm->add_flag("--override-rate-check", bm_cfg.override_rate_check, "Run even if the rate condition fails");
  tbm->add_flag("--whole-sample{false}", bm_cfg.per_day, "One cutoff for the whole sample");
  tnb->add_option("--gamma", nb_cfg.gamma, "Cutoff ratio gamma > 1");
  tnb->add_option("--alpha", nb_alpha, "Cutoff in estimated standard deviations");
  tnb->add_option("--varpi", nb_varpi, "Nominal cutoff rate exponent");
  tnb->add_option("--percentile", nb_pct, "Cutoff as the fraction of increments above it");
  tnb->add_option("--absolute", nb_abs, "Fixed cutoff");
  tnb->add_option("--level", nb_cfg.level, "Significance level");
  tnb->add_option("--beta0", nb_beta0, "Lower bound on the jump index (enables rate checks)");
  tnb->add_flag("--override-rate-check", nb_cfg.override_rate_check, "Run even if the rate condition fails");
  tnb->add_flag("--per-day", nb_cfg.per_day, "Separate cutoff per day");

  // mc
  auto* mc = app.add_subcommand("mc", "Monte Carlo size/power study");
  std::string mc_study = "bm", mc_dgp = "brownian-stable", mc_cutoff = "model-vol";
  double mc_theta = -1.0, mc_beta = 1.0;
  int mc_paths = 0, mc_days = 0, mc_workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  ExperimentConfig mc_cfg;
  mc->add_option("--study", mc_study, "bm or nobm")->check(CLI::IsMember({"bm", "nobm"}));
  mc->add_option("--dgp", mc_dgp, "brownian, brownian-stable or stable-only")
      ->check(CLI::IsMember({"brownian", "brownian-stable", "stable-only"}));
  mc->add_option("--theta", mc_theta, "Stable scale (default: the study preset)");
  mc->add_option("--beta", mc_beta, "Stable index");
  mc->add_option("--cutoff", mc_cutoff, "estimated-vol, model-vol, rate-vol or percentile");
  mc->add_option("--alphas", mc_cfg.alphas, "Cutoff grid")->delimiter(',');
  mc->add_option("--powers", mc_cfg.powers, "Powers p")->delimiter(',');
  mc->add_option("--gammas", mc_cfg.gammas, "gamma grid")->delimiter(',');
  mc->add_option("--levels", mc_cfg.levels, "Significance levels")->delimiter(',');
  mc->add_option("--paths", mc_paths, "Number of paths (overrides the profile)");
  mc->add_option("--days", mc_days, "Days per path (overrides the profile)");
  mc->add_option("--workers", mc_workers, "Worker threads")->check(CLI::PositiveNumber);

  // report
  auto* rep = app.add_subcommand("report", "Statistics across sampling steps for one data set");
  InputOptions rep_in;
  rep_in.attach(rep);
  ReportConfig rep_cfg;
  std::vector<double> rep_steps{5, 10, 15, 30, 60, 120, 300};
  rep->add_option("--steps", rep_steps, "Sampling steps in seconds")->delimiter(',');
  rep->add_option("--powers", rep_cfg.powers, "Powers p")->delimiter(',');
  rep->add_option("--alphas", rep_cfg.alphas, "Cutoff multiples for S")->delimiter(',');
  rep->add_option("--gammas", rep_cfg.gammas, "gamma grid")->delimiter(',');
  rep->add_option("--gamma-alphas", rep_cfg.gamma_alphas, "Cutoff multiples for S'")->delimiter(',');
  rep->add_option("--beta-ref", rep_cfg.beta_reference, "Jump index for the S reference line");
  rep->add_option("--beta-ref-prime", rep_cfg.beta_reference_prime, "Jump index for the S' reference line");
  rep->add_flag("--drift", rep_cfg.drift, "Use the drift-dominated limit for p <= 1");

  // validate
  auto* val = app.add_subcommand("validate", "Check an input file and optional rate conditions");
  InputOptions val_in;
  val_in.attach(val);
  std::string val_test;
  double val_p = 1.5, val_beta0 = -1.0, val_varpi = 0.3;
  val->add_option("--test", val_test, "bm or nobm")->check(CLI::IsMember({"bm", "nobm"}));
  val->add_option("--p", val_p, "Power for the test-bm rate check");
  val->add_option("--beta0", val_beta0, "Jump index bound for the rate check");
  val->add_option("--varpi", val_varpi, "Cutoff rate exponent for the rate check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (sim->parsed()) {
      PathRecipe r;
      r.include_brownian = !sim_no_brownian;
      if (!sim_flat) r.sv = reference_sv_model();
      r.horizon_days = sim_days;
      r.step_seconds = sim_step;
      r.seed = seed;
      r.noise_sd = sim_noise;
      double theta = sim_theta;
      if (sim_tail > 0.0) theta = calibrate_theta_tail(sim_tail, reference_sv_model().eta, sim_step, sim_beta);
      if (theta > 0.0 || sim_drift != 0.0) r.stable = StableDriver{sim_beta, std::max(theta, 0.0), sim_drift};
      const SimulatedPath sp = simulate_path(r);
      if (out_dir.empty()) throw ConfigError("simulate needs --out");
      fs::create_directories(out_dir);
      const auto data_file = fs::path(out_dir) / (sim_format == "ticks" ? "ticks.csv" : "path.csv");
      std::ofstream os(data_file);
      if (!os) throw DataError("cannot write " + data_file.string());
      if (sim_format == "ticks") {
        write_ticks_csv(os, sp.path, parse_date("2024-01-02"), SessionSpec{});
      } else {
        write_path_csv(os, sp.path);
      }
      nlohmann::json j;
      j["schema_version"] = kSchemaVersion;
      j["recipe"] = to_json(r);
      j["truth"] = {{"integrated_variance", sp.truth.integrated_variance},
                    {"continuous_qv", sp.truth.continuous_qv},
                    {"jump_qv", sp.truth.jump_qv},
                    {"vol_jumps", sp.truth.vol_jumps},
                    {"label", sp.truth.label.to_string()}};
      j["data"] = data_file.filename().string();
      write_json(out_dir, "truth.json", j);
    } else if (tbm->parsed()) {
      bm_cfg.truncation = truncation_from_flags(bm_alpha, bm_varpi, bm_pct, bm_abs);
      if (bm_beta0 > 0.0) bm_cfg.beta0 = bm_beta0;
      if (bm_beta0 > 0.0 && !std::holds_alternative<VolMultiple>(bm_cfg.truncation.mode)) bm_cfg.varpi = bm_varpi;
      const SampledPath path = bm_in.load();
      write_json(out_dir, "test-bm.json", to_json(bm_cfg, test_brownian_null(path, bm_cfg)));
    } else if (tnb->parsed()) {
      nb_cfg.truncation = truncation_from_flags(nb_alpha > 0.0 ? nb_alpha : 7.0, nb_varpi,
                                                nb_alpha > 0.0 ? -1.0 : nb_pct, nb_abs);
      if (nb_beta0 > 0.0) nb_cfg.beta0 = nb_beta0;
      if (nb_beta0 > 0.0 && !std::holds_alternative<VolMultiple>(nb_cfg.truncation.mode)) nb_cfg.varpi = nb_varpi;
      const SampledPath path = nb_in.load();
      write_json(out_dir, "test-nobm.json", to_json(nb_cfg, test_nobrownian_null(path, nb_cfg)));
    } else if (mc->parsed()) {
      const bool bm = mc_study == "bm";
      const double theta =
          mc_theta > 0.0 ? mc_theta : (bm ? theta_for_brownian_null_study() : theta_for_nobrownian_null_study());
      if (mc_dgp == "brownian") {
        mc_cfg.recipe = brownian_plus_stable(0.0, mc_beta);
        mc_cfg.recipe.stable.reset();
      } else if (mc_dgp == "brownian-stable") {
        mc_cfg.recipe = brownian_plus_stable(theta, mc_beta);
      } else {
        mc_cfg.recipe = stable_only(theta, mc_beta);
      }
      mc_cfg.test = bm ? TestKind::BrownianNull : TestKind::NoBrownianNull;
      mc_cfg.cutoff_rule = cutoff_rule_from_string(mc_cutoff);
      mc_cfg.master_seed = seed;
      mc_cfg.workers = mc_workers;
      mc_cfg.output_path = out_dir;
      if (!profile.empty()) mc_cfg.apply_profile(profile);
      if (mc_paths > 0) mc_cfg.n_paths = mc_paths;
      if (mc_days > 0) mc_cfg.recipe.horizon_days = mc_days;
      const auto t0 = std::chrono::steady_clock::now();
      const Ensemble e = run_ensemble(mc_cfg);
      const auto table = rejection_table(mc_cfg, e);
      const auto curves = limit_curves(mc_cfg, e);
      const auto hist = standardized_histograms(e);
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      write_rejection_table(mc_cfg, table, "rejection", wall);
      write_limit_curves(mc_cfg, curves, "limits", wall);
      write_histograms(mc_cfg, hist, "standardized", wall);
      std::cout << "# " << e.label.to_string() << ", " << mc_cfg.n_paths << " paths, " << wall << " s\n";
      std::cout << "alpha\t" << (bm ? "p" : "gamma") << "\tlevel\trate\tse\tdegenerate\n";
      for (const auto& r : table.rows)
        std::cout << r.point.alpha << '\t' << r.point.param << '\t' << r.level << '\t' << r.rate << '\t'
                  << r.std_error << '\t' << r.n_degenerate << (r.degenerate_warning ? "\tWARN" : "") << '\n';
      for (const auto& c : curves)
        std::cout << "mean\t" << c.point.alpha << '\t' << c.point.param << '\t' << c.mean << "\tlimit "
                  << c.limit_expected << '\n';
    } else if (rep->parsed()) {
      if (out_dir.empty()) throw ConfigError("report needs --out");
      const auto t0 = std::chrono::steady_clock::now();
      std::vector<SampledPath> paths;
      if (rep_in.has_ticks()) {
        const TickSeries ticks = load_ticks(rep_in.tick_file, rep_in.load_options());
        for (double s : rep_steps) paths.push_back(rep_in.sample(ticks, s));
      } else {
        const SampledPath base = rep_in.load();
        for (double s : rep_steps) {
          const double f = s / base.step_seconds;
          if (std::abs(f - std::round(f)) > 1e-9 || f < 1.0)
            throw ConfigError("step " + fmt_double(s) + " is not a multiple of the path step");
          paths.push_back(subsample(base, static_cast<Index>(std::round(f))));
        }
      }
      const EmpiricalReport report = run_empirical_report(paths, rep_cfg);
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::cout << write_empirical_report(rep_cfg, report, out_dir, "report", wall) << '\n';
    } else if (val->parsed()) {
      nlohmann::json j;
      SampledPath path;
      if (val_in.has_ticks()) {
        const TickSeries ticks = load_ticks(val_in.tick_file, val_in.load_options());
        j["ticks"] = ticks.ticks.size();
        j["dropped_by_condition"] = ticks.dropped_by_condition;
        j["timestamp_format"] = ticks.iso_timestamps ? "iso8601" : "epoch";
        const auto st = previous_tick_sample(ticks, val_in.step, val_in.session(ticks));
        std::vector<std::string> skipped, backfilled;
        for (auto d : st.report.skipped_days) skipped.push_back(format_date(d));
        for (auto d : st.report.backfilled_days) backfilled.push_back(format_date(d));
        j["skipped_days"] = skipped;
        j["backfilled_days"] = backfilled;
        path = st.path;
      } else {
        path = val_in.load();
      }
      j["observations"] = path.size();
      j["days"] = path.num_days();
      j["step_seconds"] = path.step_seconds;
      if (!val_test.empty()) {
        if (val_beta0 <= 0.0) throw ConfigError("rate check needs --beta0");
        const bool bm = val_test == "bm";
        const RateCheck rc = validate_rate_conditions(bm ? TestKind::BrownianNull : TestKind::NoBrownianNull,
                                                      bm ? std::optional<double>(val_p) : std::nullopt,
                                                      val_beta0, val_varpi);
        j["rate_check"] = {{"pass", rc.pass}, {"explanation", rc.explanation},
                           {"varpi_lo", rc.varpi_lo}, {"varpi_hi", rc.varpi_hi}};
      }
      write_json(out_dir, "validate.json", j);
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const DegenerateStatistic& e) {
    std::cerr << "degenerate statistic: " << e.what() << '\n';
    return kExitDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
