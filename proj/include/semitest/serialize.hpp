#pragma once

#include "semitest/harness.hpp"
#include "semitest/presence_tests.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace semitest {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kLibraryVersion = "0.1.0";

/// Shortest text that parses back to the same double.
std::string fmt_double(double v);

nlohmann::json to_json(const TruncationSpec& t);
TruncationSpec truncation_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PathRecipe& r);
nlohmann::json to_json(const ExperimentConfig& cfg);
nlohmann::json to_json(const BrownianNullConfig& cfg);
nlohmann::json to_json(const NoBrownianNullConfig& cfg);

/// Result documents: config echo, statistic, variance, null_limit,
/// critical_value, z_score, reject, diagnostics, schema_version.
nlohmann::json to_json(const BrownianNullConfig& cfg, const BrownianNullResult& r);
nlohmann::json to_json(const NoBrownianNullConfig& cfg, const NoBrownianNullResult& r);

/// Path CSV: header `grid_index,log_price,day_id`, one row per observation.
void write_path_csv(std::ostream& os, const SampledPath& path);
void write_path_csv(const std::string& file, const SampledPath& path);
/// The step is not part of the format and must be supplied.
SampledPath read_path_csv(std::istream& is, double step_seconds);
SampledPath read_path_csv(const std::string& file, double step_seconds);

}  // namespace semitest
