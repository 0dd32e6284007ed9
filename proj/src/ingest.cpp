#include "semitest/ingest.hpp"

#include "semitest/errors.hpp"
#include "semitest/serialize.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace semitest {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto r = std::from_chars(first, s.data() + s.size(), out);
  return r.ec == std::errc{} && r.ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_int(std::string_view s, int& out) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return !s.empty() && r.ec == std::errc{} && r.ptr == s.data() + s.size();
}

bool looks_iso(const std::string& s) {
  return s.size() >= 10 && s[4] == '-' && s[7] == '-';
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw DataError("tick CSV line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::int64_t parse_date(const std::string& s) {
  int y = 0, m = 0, d = 0;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-' || !parse_int(std::string_view(s).substr(0, 4), y) ||
      !parse_int(std::string_view(s).substr(5, 2), m) || !parse_int(std::string_view(s).substr(8, 2), d))
    throw DataError("bad date '" + s + "' (want YYYY-MM-DD)");
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw DataError("invalid calendar date '" + s + "'");
  return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

std::string format_date(std::int64_t day) {
  const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{day}}};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

double parse_iso8601(const std::string& raw) {
  std::string s = raw;
  if (!s.empty() && (s.back() == 'Z' || s.back() == 'z')) s.pop_back();
  if (s.size() < 19 || (s[10] != 'T' && s[10] != ' ') || s[13] != ':' || s[16] != ':')
    throw DataError("bad ISO-8601 timestamp '" + raw + "'");
  const std::int64_t day = parse_date(s.substr(0, 10));
  int hh = 0, mm = 0;
  if (!parse_int(std::string_view(s).substr(11, 2), hh) || !parse_int(std::string_view(s).substr(14, 2), mm) ||
      hh > 23 || mm > 59)
    throw DataError("bad ISO-8601 time '" + raw + "'");
  double sec = 0.0;
  if (!parse_number(s.substr(17), sec) || sec < 0.0 || sec >= 61.0)
    throw DataError("bad ISO-8601 seconds '" + raw + "'");
  return static_cast<double>(day) * 86400.0 + hh * 3600.0 + mm * 60.0 + sec;
}

TickSeries load_ticks(std::istream& is, const LoadOptions& opts) {
  TickSeries out;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(is, line)) throw DataError("tick CSV: empty input");
  ++line_no;
  const std::string header = trim(line);
  if (header != "timestamp,price" && header != "timestamp,price,condition")
    fail(line_no, "expected header 'timestamp,price[,condition]'");

  bool detected = false;
  while (std::getline(is, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(trim(f));
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() < 2 || fields.size() > 3) fail(line_no, "expected 2 or 3 fields");

    if (!detected) {
      out.iso_timestamps = looks_iso(fields[0]);
      detected = true;
    }
    Tick t;
    if (out.iso_timestamps) {
      if (!looks_iso(fields[0])) fail(line_no, "timestamp is not ISO-8601 like the rest of the file");
      try {
        t.timestamp = parse_iso8601(fields[0]);
      } catch (const DataError& e) {
        fail(line_no, e.what());
      }
    } else if (!parse_number(fields[0], t.timestamp)) {
      fail(line_no, "malformed epoch timestamp '" + fields[0] + "'");
    }
    if (!parse_number(fields[1], t.price)) fail(line_no, "malformed price '" + fields[1] + "'");
    if (!(t.price > 0.0)) fail(line_no, "price must be positive");
    if (fields.size() == 3) t.condition = fields[2];

    if (opts.condition_allowlist && !opts.condition_allowlist->contains(t.condition)) {
      ++out.dropped_by_condition;
      continue;
    }
    if (!opts.sort && !out.ticks.empty() && t.timestamp < out.ticks.back().timestamp)
      fail(line_no, "timestamps decrease (use sorting to accept unordered input)");
    out.ticks.push_back(std::move(t));
  }
  if (opts.sort)
    std::stable_sort(out.ticks.begin(), out.ticks.end(),
                     [](const Tick& a, const Tick& b) { return a.timestamp < b.timestamp; });
  return out;
}

TickSeries load_ticks(const std::string& file, const LoadOptions& opts) {
  std::ifstream is(file);
  if (!is) throw DataError("cannot open " + file);
  return load_ticks(is, opts);
}

void SessionSpec::validate() const {
  if (!(open_seconds >= 0.0 && close_seconds <= 86400.0 && open_seconds < close_seconds))
    throw ConfigError("SessionSpec: need 0 <= open < close <= 86400");
}

std::set<std::int64_t> calendar_from_ticks(const TickSeries& ticks) {
  std::set<std::int64_t> days;
  for (const auto& t : ticks.ticks) days.insert(static_cast<std::int64_t>(std::floor(t.timestamp / 86400.0)));
  return days;
}

SampledTicks previous_tick_sample(const TickSeries& ticks, double step_seconds, const SessionSpec& session) {
  session.validate();
  if (!(step_seconds > 0.0)) throw ConfigError("previous_tick_sample: step must be positive");
  if (session.calendar.empty()) throw ConfigError("previous_tick_sample: empty session calendar");
  const auto steps = static_cast<Index>(std::floor((session.close_seconds - session.open_seconds) / step_seconds + 1e-9));
  if (steps < 1) throw ConfigError("previous_tick_sample: step longer than the session");

  SampledTicks out;
  std::vector<double> values;
  std::vector<Index> offsets;
  const auto& tk = ticks.ticks;
  for (const std::int64_t day : session.calendar) {
    const double day_start = static_cast<double>(day) * 86400.0;
    const double open = day_start + session.open_seconds;
    const double close = day_start + session.close_seconds;
    auto first = std::lower_bound(tk.begin(), tk.end(), day_start,
                                  [](const Tick& t, double v) { return t.timestamp < v; });
    auto last = std::upper_bound(first, tk.end(), close, [](double v, const Tick& t) { return v < t.timestamp; });
    if (first == last) {
      out.report.skipped_days.push_back(day);
      continue;
    }
    if (first->timestamp > open) out.report.backfilled_days.push_back(day);
    offsets.push_back(static_cast<Index>(values.size()));
    out.report.sampled_days.push_back(day);
    auto cur = first;
    for (Index j = 0; j <= steps; ++j) {
      const double t = open + static_cast<double>(j) * step_seconds;
      while (std::next(cur) != last && std::next(cur)->timestamp <= t) ++cur;
      values.push_back(std::log(cur->price));
    }
  }
  if (values.empty()) throw DataError("previous_tick_sample: no ticks on any calendar day");
  out.path.step_seconds = step_seconds;
  out.path.observations = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()));
  out.path.day_offsets = offsets;
  out.path.metadata["source"] = "ticks";
  out.path.validate();
  return out;
}

namespace {

// A price whose log is exactly x, searched among doubles next to exp(x).
double exact_log_price(double x) {
  const double p0 = std::exp(x);
  if (std::log(p0) == x) return p0;
  double up = p0, down = p0;
  for (int i = 0; i < 16; ++i) {
    up = std::nextafter(up, INFINITY);
    down = std::nextafter(down, 0.0);
    if (std::log(up) == x) return up;
    if (std::log(down) == x) return down;
  }
  return p0;
}

}  // namespace

void write_ticks_csv(std::ostream& os, const SampledPath& path, std::int64_t first_day,
                     const SessionSpec& session) {
  path.validate();
  os << "timestamp,price\n";
  for (std::size_t d = 0; d < path.num_days(); ++d) {
    auto [b, e] = path.day_range(d);
    const double open = static_cast<double>(first_day + static_cast<std::int64_t>(d)) * 86400.0 + session.open_seconds;
    for (Index i = b; i < e; ++i) {
      const double t = open + static_cast<double>(i - b) * path.step_seconds;
      os << fmt_double(t) << ',' << fmt_double(exact_log_price(path.observations[i])) << '\n';
    }
  }
}

SampledPath subsample(const SampledPath& path, Index factor) {
  if (factor < 1) throw ConfigError("subsample: factor must be >= 1");
  path.validate();
  SampledPath out;
  out.step_seconds = path.step_seconds * static_cast<double>(factor);
  out.metadata = path.metadata;
  out.day_offsets.clear();
  std::vector<double> values;
  for (std::size_t d = 0; d < path.num_days(); ++d) {
    auto [b, e] = path.day_range(d);
    if ((e - b - 1) / factor < 1) continue;
    out.day_offsets.push_back(static_cast<Index>(values.size()));
    for (Index i = b; i < e; i += factor) values.push_back(path.observations[i]);
  }
  if (values.size() < 2) throw DataError("subsample: factor too large for every day");
  out.observations = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()));
  return out;
}

}  // namespace semitest
