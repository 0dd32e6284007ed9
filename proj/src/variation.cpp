#include "semitest/variation.hpp"

#include "semitest/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace semitest {

void SampledPath::validate() const {
  if (!(step_seconds > 0.0)) throw ConfigError("SampledPath: step_seconds must be positive");
  if (observations.size() < 2) throw ConfigError("SampledPath: need at least two observations");
  if (day_offsets.empty() || day_offsets.front() != 0)
    throw ConfigError("SampledPath: day_offsets must start at 0");
  for (std::size_t i = 1; i < day_offsets.size(); ++i) {
    if (day_offsets[i] <= day_offsets[i - 1])
      throw ConfigError("SampledPath: day_offsets must be strictly increasing");
  }
  if (day_offsets.back() >= observations.size())
    throw ConfigError("SampledPath: day offset beyond the last observation");
}

void TruncationSpec::validate() const {
  std::visit(
      [](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, VolMultiple>) {
          if (!(m.alpha > 0.0)) throw ConfigError("VolMultiple: alpha must be positive");
          if (!(m.varpi > 0.0 && m.varpi < 0.5))
            throw ConfigError("VolMultiple: varpi must lie in (0, 1/2)");
        } else if constexpr (std::is_same_v<M, Percentile>) {
          if (!(m.q > 0.0 && m.q < 1.0)) throw ConfigError("Percentile: q must lie in (0, 1)");
        } else {
          if (!(m.u > 0.0)) throw ConfigError("Absolute: u must be positive");
        }
      },
      mode);
}

std::string TruncationSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, VolMultiple>)
          os << "vol-multiple(alpha=" << m.alpha << ",varpi=" << m.varpi << ")";
        else if constexpr (std::is_same_v<M, Percentile>)
          os << "percentile(q=" << m.q << ")";
        else
          os << "absolute(u=" << m.u << ")";
      },
      mode);
  return os.str();
}

IncrementSeries increments(const SampledPath& path, Index stride) {
  if (stride < 1) throw ConfigError("increments: stride must be >= 1");
  path.validate();

  IncrementSeries out;
  out.stride = stride;
  out.source_step = static_cast<double>(stride) * path.step_seconds;

  Index total = 0;
  for (std::size_t d = 0; d < path.num_days(); ++d) {
    auto [b, e] = path.day_range(d);
    total += (e - b - 1) / stride;
  }
  if (total == 0)
    throw DataError("increments: stride " + std::to_string(stride) +
                    " exceeds every day segment");

  out.values.resize(total);
  const auto& x = path.observations;
  Index k = 0;
  for (std::size_t d = 0; d < path.num_days(); ++d) {
    auto [b, e] = path.day_range(d);
    const Index blocks = (e - b - 1) / stride;
    if (blocks == 0) continue;
    out.day_offsets.push_back(k);
    out.day_ids.push_back(d);
    for (Index i = 1; i <= blocks; ++i) out.values[k++] = x[b + i * stride] - x[b + (i - 1) * stride];
  }
  return out;
}

namespace {

double span_cutoff(std::span<const CutoffSpan> spans, std::size_t day) {
  for (const auto& s : spans) {
    if (day >= s.day_begin && day < s.day_end) return s.u;
  }
  throw ConfigError("no cutoff span covers day " + std::to_string(day));
}

}  // namespace

double truncated_power_variation(const IncrementSeries& incs, double p,
                                 std::span<const CutoffSpan> spans, double scale) {
  double total = 0.0;
  for (std::size_t d = 0; d < incs.num_days(); ++d) {
    const double u = scale * span_cutoff(spans, incs.day_ids[d]);
    total += truncated_power_variation(incs.day_segment(d), p, u);
  }
  return total;
}

Index exceedance_count(const IncrementSeries& incs, std::span<const CutoffSpan> spans,
                       double scale) {
  Index total = 0;
  for (std::size_t d = 0; d < incs.num_days(); ++d) {
    const double u = scale * span_cutoff(spans, incs.day_ids[d]);
    total += exceedance_count(incs.day_segment(d), u);
  }
  return total;
}

double estimate_integrated_volatility(const SampledPath& path, double alpha, double varpi) {
  if (!(alpha > 0.0)) throw ConfigError("estimate_integrated_volatility: alpha must be positive");
  if (!(varpi > 0.0 && varpi < 0.5))
    throw ConfigError("estimate_integrated_volatility: varpi must lie in (0, 1/2)");
  const IncrementSeries incs = increments(path, 1);
  const double cutoff = alpha * std::pow(path.step_years(), varpi);
  return truncated_power_variation(incs.values, 2.0, cutoff);
}

double volatility_cutoff(std::span<const double> incs, double alpha) {
  const Eigen::Map<const Eigen::VectorXd> x(incs.data(), static_cast<Index>(incs.size()));
  const double n = static_cast<double>(incs.size());
  double u = std::numeric_limits<double>::infinity();
  // The map is monotone in u, so starting from +inf the iterates decrease
  // and settle on the largest fixed point after finitely many steps.
  for (int iter = 0; iter < 10000; ++iter) {
    const double iv = truncated_power_variation(x, 2.0, u);
    if (!(iv > 0.0)) return 0.0;
    const double next = alpha * std::sqrt(iv / n);
    if (next == u) break;
    u = next;
  }
  return u;
}

namespace {

std::vector<double> span_values(const IncrementSeries& incs, std::size_t day_begin,
                                std::size_t day_end) {
  std::vector<double> v;
  for (std::size_t d = 0; d < incs.num_days(); ++d) {
    if (incs.day_ids[d] < day_begin || incs.day_ids[d] >= day_end) continue;
    auto seg = incs.day_segment(d);
    v.insert(v.end(), seg.begin(), seg.end());
  }
  return v;
}

std::string span_name(std::size_t b, std::size_t e) {
  return "days [" + std::to_string(b) + ", " + std::to_string(e) + ")";
}

}  // namespace

std::vector<CutoffSpan> resolve_cutoff(const SampledPath& path, const TruncationSpec& spec,
                                       bool per_day) {
  spec.validate();
  path.validate();

  std::vector<CutoffSpan> spans;
  if (per_day) {
    for (std::size_t d = 0; d < path.num_days(); ++d) spans.push_back({d, d + 1, 0.0});
  } else {
    spans.push_back({0, path.num_days(), 0.0});
  }

  if (const auto* a = std::get_if<Absolute>(&spec.mode)) {
    for (auto& s : spans) s.u = a->u;
    return spans;
  }

  const IncrementSeries incs = increments(path, 1);
  for (auto& s : spans) {
    std::vector<double> v = span_values(incs, s.day_begin, s.day_end);
    if (v.empty())
      throw DegenerateCutoff("resolve_cutoff: no increments on " + span_name(s.day_begin, s.day_end));
    if (const auto* vm = std::get_if<VolMultiple>(&spec.mode)) {
      s.u = volatility_cutoff(v, vm->alpha);
    } else {
      const auto& pc = std::get<Percentile>(spec.mode);
      for (auto& x : v) x = std::abs(x);
      const auto n = v.size();
      const auto excluded = static_cast<std::size_t>(std::floor(pc.q * static_cast<double>(n)));
      if (excluded >= n)
        throw DegenerateCutoff("resolve_cutoff: percentile excludes every increment on " +
                               span_name(s.day_begin, s.day_end));
      auto it = v.begin() + static_cast<std::ptrdiff_t>(n - 1 - excluded);
      std::nth_element(v.begin(), it, v.end());
      s.u = *it;
    }
    if (!(s.u > 0.0))
      throw DegenerateCutoff("resolve_cutoff: zero integrated volatility on " +
                             span_name(s.day_begin, s.day_end));
  }
  return spans;
}

}  // namespace semitest
