#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "simagents/angles.hpp"
#include "simagents/errors.hpp"

namespace simagents {

inline constexpr std::size_t kHistoryFrames = 11;
inline constexpr std::size_t kFutureFrames = 80;
inline constexpr double kFramePeriod = 0.1;

/// One 10 Hz state sample of one agent, scene frame.
struct AgentFrame {
  double cx = 0.0, cy = 0.0, cz = 0.0;
  double dx = 0.0, dy = 0.0, dz = 0.0;  // length, width, height
  double heading = 0.0;
  double vx = 0.0, vy = 0.0;
  bool valid = false;

  /// Layout shared by the scenario, rollout and wire formats.
  std::array<double, 10> to_row() const {
    return {cx, cy, cz, dx, dy, dz, heading, vx, vy, valid ? 1.0 : 0.0};
  }
  static AgentFrame from_row(const std::array<double, 10>& r) {
    return {r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8], r[9] != 0.0};
  }

  friend bool operator==(const AgentFrame&, const AgentFrame&) = default;
};

enum class AgentKind { vehicle, pedestrian, cyclist };

inline std::string_view to_string(AgentKind k) {
  switch (k) {
    case AgentKind::vehicle: return "vehicle";
    case AgentKind::pedestrian: return "pedestrian";
    case AgentKind::cyclist: return "cyclist";
  }
  return "vehicle";
}

inline std::optional<AgentKind> agent_kind_from_string(std::string_view s) {
  if (s == "vehicle") return AgentKind::vehicle;
  if (s == "pedestrian") return AgentKind::pedestrian;
  if (s == "cyclist") return AgentKind::cyclist;
  return std::nullopt;
}

struct Agent {
  std::string id;
  AgentKind kind = AgentKind::vehicle;
  std::vector<AgentFrame> history;  // kHistoryFrames; index 10 is the start state
  std::optional<std::vector<AgentFrame>> ground_truth_future;  // kFutureFrames

  friend bool operator==(const Agent&, const Agent&) = default;
};

enum class PolylineKind { lane_center, road_edge, other };

inline std::string_view to_string(PolylineKind k) {
  switch (k) {
    case PolylineKind::lane_center: return "lane_center";
    case PolylineKind::road_edge: return "road_edge";
    case PolylineKind::other: return "other";
  }
  return "other";
}

inline std::optional<PolylineKind> polyline_kind_from_string(std::string_view s) {
  if (s == "lane_center") return PolylineKind::lane_center;
  if (s == "road_edge") return PolylineKind::road_edge;
  if (s == "other") return PolylineKind::other;
  return std::nullopt;
}

/// Opaque to the harness; forwarded to predictors as-is.
struct MapPolyline {
  std::string id;
  PolylineKind kind = PolylineKind::other;
  std::vector<std::array<double, 3>> points;

  friend bool operator==(const MapPolyline&, const MapPolyline&) = default;
};

struct Scenario {
  std::string scenario_id;
  std::vector<Agent> agents;
  std::vector<MapPolyline> map;
  double frame_period = kFramePeriod;

  bool has_ground_truth() const {
    for (const auto& a : agents)
      if (!a.ground_truth_future) return false;
    return !agents.empty();
  }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// One predicted sample: [cx, cy, vx, vy].
struct TrajectorySample {
  double cx = 0.0, cy = 0.0;
  double vx = 0.0, vy = 0.0;

  friend bool operator==(const TrajectorySample&, const TrajectorySample&) = default;
};

using Trajectory = std::vector<TrajectorySample>;

namespace detail {

inline std::string frame_location(std::string_view agent_id, std::string_view seq,
                                  std::size_t frame) {
  return "agent '" + std::string(agent_id) + "' " + std::string(seq) + " frame " +
         std::to_string(frame);
}

}  // namespace detail

struct ValidationOptions {
  // Out-of-range headings are wrapped into [-pi, pi) instead of rejected.
  bool renormalize_headings = false;
};

/// Checks (and in lenient mode repairs) one frame. Throws ValidationError.
inline void validate_frame(AgentFrame& f, const std::string& where,
                           const ValidationOptions& opts = {}) {
  for (double v : {f.cx, f.cy, f.cz, f.dx, f.dy, f.dz, f.heading, f.vx, f.vy}) {
    if (!std::isfinite(v)) throw ValidationError(where + ": non-finite value");
  }
  if (f.valid && (f.dx <= 0.0 || f.dy <= 0.0 || f.dz <= 0.0))
    throw ValidationError(where + ": box extents must be positive for a valid frame");
  if (!in_heading_range(f.heading)) {
    if (!opts.renormalize_headings)
      throw ValidationError(where + ": heading out of range [-pi, pi)");
    f.heading = normalize_angle(f.heading);
  }
}

/// Enforces every Scenario invariant; the first violation is reported.
inline void validate_scenario(Scenario& s, const ValidationOptions& opts = {}) {
  if (s.agents.empty()) throw ValidationError("scenario has no agents");
  std::unordered_set<std::string> seen;
  for (auto& a : s.agents) {
    if (!seen.insert(a.id).second)
      throw ValidationError("duplicate id '" + a.id + "'");
    if (a.history.size() != kHistoryFrames)
      throw ValidationError("agent '" + a.id + "': history length " +
                            std::to_string(a.history.size()) + ", expected " +
                            std::to_string(kHistoryFrames));
    for (std::size_t i = 0; i < a.history.size(); ++i)
      validate_frame(a.history[i], detail::frame_location(a.id, "history", i), opts);
    if (a.ground_truth_future) {
      if (a.ground_truth_future->size() != kFutureFrames)
        throw ValidationError("agent '" + a.id + "': ground_truth_future length " +
                              std::to_string(a.ground_truth_future->size()) +
                              ", expected " + std::to_string(kFutureFrames));
      for (std::size_t i = 0; i < a.ground_truth_future->size(); ++i)
        validate_frame((*a.ground_truth_future)[i],
                       detail::frame_location(a.id, "ground_truth_future", i), opts);
    }
  }
  for (const auto& p : s.map) {
    if (p.points.size() < 2)
      throw ValidationError("polyline '" + p.id + "': fewer than 2 points");
    for (const auto& pt : p.points)
      for (double v : pt)
        if (!std::isfinite(v))
          throw ValidationError("polyline '" + p.id + "': non-finite coordinate");
  }
}

/// Last `k` frames in order. The k = 11 window is the next step's history.
template <typename T>
std::vector<T> trailing_history(std::span<const T> frames, std::size_t k) {
  if (frames.size() < k)
    throw std::length_error("trailing_history: " + std::to_string(frames.size()) +
                            " frames, need " + std::to_string(k));
  return {frames.end() - static_cast<std::ptrdiff_t>(k), frames.end()};
}

template <typename T>
std::vector<T> trailing_history(const std::vector<T>& frames, std::size_t k) {
  return trailing_history(std::span<const T>(frames), k);
}

}  // namespace simagents
