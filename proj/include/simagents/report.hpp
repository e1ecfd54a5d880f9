#pragma once

#include <charconv>
#include <string>
#include <vector>

#include "simagents/json_io.hpp"
#include "simagents/metrics.hpp"

namespace simagents {

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string join_path(const std::vector<std::size_t>& path, char sep = '-') {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out.push_back(sep);
    out += std::to_string(path[i]);
  }
  return out;
}

inline json report_to_json(const EvaluationReport& rep) {
  auto channel = [](const ChannelSummary& c) {
    return json{{"mean", c.mean()}, {"max", c.max}, {"samples", c.samples}};
  };
  json rollouts = json::array();
  for (const auto& r : rep.rollouts) {
    json events = json::array();
    for (const auto& e : r.collisions.events)
      events.push_back({{"agents", {e.agent_a, e.agent_b}}, {"frame", e.frame}});
    rollouts.push_back({{"variant_id", r.variant_id},
                        {"branch_path", r.branch_path},
                        {"ade", r.ade},
                        {"collision_pairs", r.collisions.count},
                        {"collisions", std::move(events)}});
  }
  return {{"scenario_id", rep.scenario_id},
          {"rollout_count", rep.rollout_count},
          {"min_ade", rep.min_ade},
          {"kinematics",
           {{"linear_speed", channel(rep.linear_speed)},
            {"linear_accel_magnitude", channel(rep.linear_accel)},
            {"angular_speed_magnitude", channel(rep.angular_speed)},
            {"angular_accel_magnitude", channel(rep.angular_accel)}}},
          {"rollouts", std::move(rollouts)}};
}

/// One row per rollout: variant_id,branch_path,ade,collision_pairs
inline std::string report_to_csv(const EvaluationReport& rep) {
  std::string out = "variant_id,branch_path,ade,collision_pairs\n";
  for (const auto& r : rep.rollouts)
    out += r.variant_id + "," + join_path(r.branch_path) + "," + format_double(r.ade) + "," +
           std::to_string(r.collisions.count) + "\n";
  return out;
}

}  // namespace simagents
