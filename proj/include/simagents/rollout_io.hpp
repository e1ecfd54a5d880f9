#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "simagents/json_io.hpp"
#include "simagents/rollout.hpp"
#include "simagents/scenario_io.hpp"

namespace simagents {

/// {scenario_id, rollouts:[{variant_id, branch_path, agents:[{id, frames}]}]}
inline json rollouts_to_json(const std::string& scenario_id, std::span<const Rollout> rollouts) {
  json arr = json::array();
  for (const auto& r : rollouts) {
    json agents = json::array();
    for (const auto& t : r.agents) agents.push_back({{"id", t.id}, {"frames", detail::frames_to_json(t.frames)}});
    arr.push_back({{"variant_id", r.variant_id}, {"branch_path", r.branch_path}, {"agents", std::move(agents)}});
  }
  return {{"scenario_id", scenario_id}, {"rollouts", std::move(arr)}};
}

struct RolloutFile {
  std::string scenario_id;
  std::vector<Rollout> rollouts;
};

inline RolloutFile rollouts_from_json(const json& doc) {
  RolloutFile f;
  f.scenario_id = detail::require_string(doc, "scenario_id", "rollout file");
  const json& arr = detail::require(doc, "rollouts", "rollout file");
  if (!arr.is_array()) throw ParseError("rollout file: rollouts must be an array");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string ctx = "rollouts[" + std::to_string(i) + "]";
    Rollout r;
    r.scenario_id = f.scenario_id;
    r.variant_id = detail::require_string(arr[i], "variant_id", ctx);
    const json& path = detail::require(arr[i], "branch_path", ctx);
    if (!path.is_array()) throw ParseError(ctx + ": branch_path must be an array");
    for (const auto& p : path) {
      if (!p.is_number_unsigned()) throw ParseError(ctx + ": branch_path entries must be non-negative integers");
      r.branch_path.push_back(p.get<std::size_t>());
    }
    for (const auto& a : detail::require(arr[i], "agents", ctx)) {
      AgentTrack t;
      t.id = detail::require_string(a, "id", ctx + " agent");
      t.frames = detail::frames_from_json(detail::require(a, "frames", ctx + " agent"), ctx + " agent '" + t.id + "'");
      r.agents.push_back(std::move(t));
    }
    f.rollouts.push_back(std::move(r));
  }
  return f;
}

inline void save_rollouts(const std::filesystem::path& path, const std::string& scenario_id,
                          std::span<const Rollout> rollouts) {
  write_text_file_atomic(path, rollouts_to_json(scenario_id, rollouts).dump(1) + "\n");
}

inline RolloutFile load_rollouts(const std::filesystem::path& path) {
  return rollouts_from_json(parse_json_text(read_text_file(path), path.string()));
}

}  // namespace simagents
