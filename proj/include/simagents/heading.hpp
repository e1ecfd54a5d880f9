#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "simagents/angles.hpp"
#include "simagents/errors.hpp"
#include "simagents/scenario.hpp"

namespace simagents {

struct Point2 {
  double x = 0.0, y = 0.0;
};

/// Thresholds for deriving headings from a planned (x, y) path.
struct HeadingParams {
  double stop_distance_threshold = 0.3;  // m of path length over `horizon`
  double max_step_delta = 0.3;           // rad per 0.1 s frame
  double horizon = 2.0;                  // s

  void validate() const {
    if (!(stop_distance_threshold > 0.0) || !(max_step_delta > 0.0) || !(horizon > 0.0))
      throw ValidationError("HeadingParams: all values must be strictly positive");
  }
};

/// Per-kind overrides; unset kinds use `defaults`.
struct HeadingConfig {
  HeadingParams defaults;
  std::array<std::optional<HeadingParams>, 3> per_kind;

  const HeadingParams& for_kind(AgentKind kind) const {
    const auto& o = per_kind[static_cast<std::size_t>(kind)];
    return o ? *o : defaults;
  }
};

inline double path_length(std::span<const Point2> xy) {
  double total = 0.0;
  for (std::size_t i = 1; i < xy.size(); ++i)
    total += std::hypot(xy[i].x - xy[i - 1].x, xy[i].y - xy[i - 1].y);
  return total;
}

/// True when the cumulative path length inside the horizon window is below
/// the stop threshold. Only the first horizon/0.1 segments are counted.
inline bool is_stopped(std::span<const Point2> xy, const HeadingParams& params = {}) {
  if (xy.size() < 2) throw std::invalid_argument("is_stopped: need at least 2 points");
  const auto max_segments =
      static_cast<std::size_t>(std::llround(params.horizon / kFramePeriod));
  const std::size_t n = std::min(xy.size(), max_segments + 1);
  return path_length(xy.first(n)) < params.stop_distance_threshold;
}

/// Forward rate clamp. A heading that moves more than max_step_delta (on the
/// circle) from the already-clamped predecessor is replaced by it; the first
/// element is compared against `prev_heading`.
inline std::vector<double> stabilize_rate(std::span<const double> h, double prev_heading,
                                          const HeadingParams& params = {}) {
  std::vector<double> out;
  out.reserve(h.size());
  double anchor = normalize_angle(prev_heading);
  for (double v : h) {
    if (!std::isfinite(v)) throw std::domain_error("stabilize_rate: non-finite heading");
    double cur = normalize_angle(v);
    if (std::abs(wrapped_difference(cur, anchor)) > params.max_step_delta) cur = anchor;
    out.push_back(cur);
    anchor = cur;
  }
  return out;
}

/// Headings for each point of a planned path.
///
/// Stopped paths keep `prev_heading` throughout. Otherwise point i takes the
/// direction of the chord to point i+1, the last point repeats the previous
/// chord, and the result is passed through stabilize_rate. A zero-length
/// chord has no direction and inherits the heading before it.
inline std::vector<double> headings_from_xy(std::span<const Point2> xy, double prev_heading,
                                            const HeadingParams& params = {}) {
  if (xy.empty()) throw std::invalid_argument("headings_from_xy: empty trajectory");
  const double anchor = normalize_angle(prev_heading);
  if (xy.size() == 1 || is_stopped(xy, params)) return std::vector<double>(xy.size(), anchor);

  std::vector<double> raw(xy.size());
  double last = anchor;
  for (std::size_t i = 0; i + 1 < xy.size(); ++i) {
    const double ddx = xy[i + 1].x - xy[i].x;
    const double ddy = xy[i + 1].y - xy[i].y;
    if (ddx != 0.0 || ddy != 0.0) last = normalize_angle(std::atan2(ddy, ddx));
    raw[i] = last;
  }
  raw.back() = raw[raw.size() - 2];
  return stabilize_rate(raw, anchor, params);
}

}  // namespace simagents
