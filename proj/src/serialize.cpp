#include "semitest/serialize.hpp"

#include "semitest/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace semitest {

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

nlohmann::json to_json(const TruncationSpec& t) {
  return std::visit(
      [](const auto& m) -> nlohmann::json {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, VolMultiple>)
          return {{"mode", "vol-multiple"}, {"alpha", m.alpha}, {"varpi", m.varpi}};
        else if constexpr (std::is_same_v<M, Percentile>)
          return {{"mode", "percentile"}, {"q", m.q}};
        else
          return {{"mode", "absolute"}, {"u", m.u}};
      },
      t.mode);
}

TruncationSpec truncation_from_json(const nlohmann::json& j) {
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "vol-multiple") return {VolMultiple{j.at("alpha").get<double>(), j.at("varpi").get<double>()}};
  if (mode == "percentile") return {Percentile{j.at("q").get<double>()}};
  if (mode == "absolute") return {Absolute{j.at("u").get<double>()}};
  throw ConfigError("unknown truncation mode '" + mode + "'");
}

nlohmann::json to_json(const PathRecipe& r) {
  nlohmann::json j;
  j["include_brownian"] = r.include_brownian;
  if (r.sv) {
    const auto& m = *r.sv;
    j["sv"] = {{"eta", m.eta},
               {"xi", m.xi},
               {"phi", m.phi},
               {"rho", m.rho},
               {"vol_jump_intensity", m.vol_jump_intensity},
               {"vol_jump_half_width", m.vol_jump_half_width},
               {"v0", m.v0},
               {"x0", m.x0}};
  } else {
    j["flat_sigma"] = r.flat_sigma;
  }
  if (r.stable) j["stable"] = {{"beta", r.stable->beta}, {"theta", r.stable->theta}, {"drift", r.stable->drift}};
  j["horizon_days"] = r.horizon_days;
  j["step_seconds"] = r.step_seconds;
  j["seed"] = r.seed;
  j["substeps"] = r.substeps;
  j["noise_sd"] = r.noise_sd;
  return j;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["recipe"] = to_json(cfg.recipe);
  j["test"] = cfg.test == TestKind::BrownianNull ? "brownian-null" : "no-brownian-null";
  j["k"] = cfg.k;
  j["powers"] = cfg.powers;
  j["gammas"] = cfg.gammas;
  j["alphas"] = cfg.alphas;
  j["levels"] = cfg.levels;
  j["cutoff_rule"] = to_string(cfg.cutoff_rule);
  j["varpi"] = cfg.varpi;
  j["per_day"] = cfg.per_day;
  j["n_paths"] = cfg.n_paths;
  j["master_seed"] = cfg.master_seed;
  return j;
}

nlohmann::json to_json(const BrownianNullConfig& cfg) {
  nlohmann::json j{{"p", cfg.p}, {"k", cfg.k}, {"truncation", to_json(cfg.truncation)},
                   {"level", cfg.level}, {"per_day", cfg.per_day},
                   {"override_rate_check", cfg.override_rate_check}};
  j["beta0"] = cfg.beta0 ? nlohmann::json(*cfg.beta0) : nlohmann::json(nullptr);
  j["varpi"] = cfg.varpi ? nlohmann::json(*cfg.varpi) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const NoBrownianNullConfig& cfg) {
  nlohmann::json j{{"gamma", cfg.gamma}, {"truncation", to_json(cfg.truncation)},
                   {"level", cfg.level}, {"per_day", cfg.per_day},
                   {"override_rate_check", cfg.override_rate_check}};
  j["beta0"] = cfg.beta0 ? nlohmann::json(*cfg.beta0) : nlohmann::json(nullptr);
  j["varpi"] = cfg.varpi ? nlohmann::json(*cfg.varpi) : nlohmann::json(nullptr);
  return j;
}

namespace {

nlohmann::json cutoffs_json(const std::vector<CutoffSpan>& cutoffs) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& c : cutoffs) a.push_back({{"day_begin", c.day_begin}, {"day_end", c.day_end}, {"u", c.u}});
  return a;
}

}  // namespace

nlohmann::json to_json(const BrownianNullConfig& cfg, const BrownianNullResult& r) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["test"] = "brownian-null";
  j["config"] = to_json(cfg);
  j["statistic"] = r.s_n;
  j["variance"] = r.v_n;
  j["null_limit"] = r.null_limit;
  j["critical_value"] = r.critical_value;
  j["z_score"] = r.z_score;
  j["reject"] = r.reject;
  j["diagnostics"] = r.diagnostics;
  j["cutoffs"] = cutoffs_json(r.cutoffs);
  return j;
}

nlohmann::json to_json(const NoBrownianNullConfig& cfg, const NoBrownianNullResult& r) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["test"] = "no-brownian-null";
  j["config"] = to_json(cfg);
  j["statistic"] = r.s_prime_n;
  j["variance"] = r.v_prime_n;
  j["null_limit"] = r.null_limit;
  j["critical_value"] = r.critical_value;
  j["z_score"] = r.z_score;
  j["reject"] = r.reject;
  j["diagnostics"] = r.diagnostics;
  j["cutoffs"] = cutoffs_json(r.cutoffs);
  return j;
}

void write_path_csv(std::ostream& os, const SampledPath& path) {
  os << "grid_index,log_price,day_id\n";
  for (std::size_t d = 0; d < path.num_days(); ++d) {
    auto [b, e] = path.day_range(d);
    for (Index i = b; i < e; ++i) os << i << ',' << fmt_double(path.observations[i]) << ',' << d << '\n';
  }
}

void write_path_csv(const std::string& file, const SampledPath& path) {
  std::ofstream os(file);
  if (!os) throw DataError("cannot write " + file);
  write_path_csv(os, path);
}

SampledPath read_path_csv(std::istream& is, double step_seconds) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("path CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "grid_index,log_price,day_id")
    throw DataError("path CSV: expected header 'grid_index,log_price,day_id'");
  std::vector<double> values;
  SampledPath path;
  path.step_seconds = step_seconds;
  path.day_offsets.clear();
  long long last_day = -1;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string idx, price, day;
    if (!std::getline(row, idx, ',') || !std::getline(row, price, ',') || !std::getline(row, day))
      throw DataError("path CSV line " + std::to_string(line_no) + ": expected three fields");
    double v = 0.0;
    long long day_id = 0;
    const auto r1 = std::from_chars(price.data(), price.data() + price.size(), v);
    const auto r2 = std::from_chars(day.data(), day.data() + day.size(), day_id);
    if (r1.ec != std::errc{} || r1.ptr != price.data() + price.size() || r2.ec != std::errc{} ||
        r2.ptr != day.data() + day.size())
      throw DataError("path CSV line " + std::to_string(line_no) + ": malformed number");
    if (day_id < last_day) throw DataError("path CSV line " + std::to_string(line_no) + ": day_id decreases");
    if (day_id != last_day) {
      path.day_offsets.push_back(static_cast<Index>(values.size()));
      last_day = day_id;
    }
    values.push_back(v);
  }
  path.observations = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()));
  if (path.day_offsets.empty()) path.day_offsets.push_back(0);
  path.validate();
  return path;
}

SampledPath read_path_csv(const std::string& file, double step_seconds) {
  std::ifstream is(file);
  if (!is) throw DataError("cannot open " + file);
  return read_path_csv(is, step_seconds);
}

}  // namespace semitest
