#pragma once

#include "semitest/path.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace semitest {

struct Tick {
  /// Seconds since the Unix epoch (UTC), sub-second precision allowed.
  double timestamp = 0.0;
  double price = 0.0;
  std::string condition;
};

struct TickSeries {
  std::vector<Tick> ticks;
  /// Rows removed by the condition allowlist.
  std::size_t dropped_by_condition = 0;
  bool iso_timestamps = false;
};

struct LoadOptions {
  /// Condition codes to keep; unset keeps everything. "" matches rows with
  /// an empty or missing condition.
  std::optional<std::set<std::string>> condition_allowlist;
  /// Sort by timestamp instead of rejecting out-of-order rows.
  bool sort = false;
};

/// Parses `timestamp,price[,condition]` CSV. Timestamps are either all
/// ISO-8601 (UTC) or all epoch seconds; the form is detected from the first
/// data row. Errors carry the offending line number.
TickSeries load_ticks(std::istream& is, const LoadOptions& opts = {});
TickSeries load_ticks(const std::string& file, const LoadOptions& opts = {});

/// Days since 1970-01-01 for "YYYY-MM-DD".
std::int64_t parse_date(const std::string& s);
std::string format_date(std::int64_t day);
/// Epoch seconds for "YYYY-MM-DD[T ]HH:MM:SS[.fff][Z]" (UTC).
double parse_iso8601(const std::string& s);

struct SessionSpec {
  /// Seconds after midnight UTC.
  double open_seconds = 9.5 * 3600.0;
  double close_seconds = 16.0 * 3600.0;
  /// Trading dates as days since the epoch.
  std::set<std::int64_t> calendar;
  std::optional<std::set<std::string>> condition_allowlist;

  void validate() const;
};

/// Every date that carries at least one tick.
std::set<std::int64_t> calendar_from_ticks(const TickSeries& ticks);

struct SamplingReport {
  std::vector<std::int64_t> sampled_days;
  std::vector<std::int64_t> skipped_days;
  /// Days whose first grid points were back-filled from the first tick
  /// because no tick preceded the open.
  std::vector<std::int64_t> backfilled_days;
};

struct SampledTicks {
  SampledPath path;
  SamplingReport report;
};

/// Log prices on the grid open, open + step, ..., close of every calendar
/// day, each taken from the last tick at or before the grid time on that
/// date. Days without ticks are skipped.
SampledTicks previous_tick_sample(const TickSeries& ticks, double step_seconds,
                                  const SessionSpec& session);

/// Writes a path as a tick file: one tick per grid point on consecutive
/// calendar days starting at first_day, with prices whose log reproduces
/// the path value exactly when such a double exists.
void write_ticks_csv(std::ostream& os, const SampledPath& path, std::int64_t first_day,
                     const SessionSpec& session);

/// Every factor-th observation of each day (previous-tick sampling of an
/// already regular grid at a coarser step).
SampledPath subsample(const SampledPath& path, Index factor);

}  // namespace semitest
