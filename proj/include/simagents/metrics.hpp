#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "simagents/angles.hpp"
#include "simagents/errors.hpp"
#include "simagents/rollout.hpp"
#include "simagents/scenario.hpp"

namespace simagents {

namespace detail {

inline std::unordered_map<std::string, const Agent*> ground_truth_index(const Scenario& scenario) {
  std::unordered_map<std::string, const Agent*> idx;
  for (const auto& a : scenario.agents) {
    if (!a.ground_truth_future) throw ValidationError("agent '" + a.id + "' has no ground truth future");
    idx.emplace(a.id, &a);
  }
  return idx;
}

inline double ade_with_index(const Rollout& r, const std::unordered_map<std::string, const Agent*>& gt) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& track : r.agents) {
    auto it = gt.find(track.id);
    if (it == gt.end()) throw ValidationError("rollout agent '" + track.id + "' is not in the scenario");
    const auto& truth = *it->second->ground_truth_future;
    if (track.frames.size() > truth.size())
      throw ValidationError("rollout agent '" + track.id + "' has more frames than the ground truth");
    for (std::size_t t = 0; t < track.frames.size(); ++t) {
      sum += std::hypot(track.frames[t].cx - truth[t].cx, track.frames[t].cy - truth[t].cy);
      ++count;
    }
  }
  if (count == 0) throw ValidationError("rollout has no frames");
  return sum / static_cast<double>(count);
}

}  // namespace detail

/// Mean centre displacement from the logged future, over all agents and frames.
inline double average_displacement_error(const Rollout& r, const Scenario& scenario) {
  return detail::ade_with_index(r, detail::ground_truth_index(scenario));
}

/// Smallest per-rollout ADE.
inline double min_ade(std::span<const Rollout> rollouts, const Scenario& scenario) {
  if (rollouts.empty()) throw ValidationError("min_ade: no rollouts");
  const auto gt = detail::ground_truth_index(scenario);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : rollouts) best = std::min(best, detail::ade_with_index(r, gt));
  return best;
}

struct CollisionEvent {
  std::size_t agent_a = 0, agent_b = 0;  // agent_a < agent_b
  std::size_t frame = 0;                 // first colliding frame
};

struct CollisionSummary {
  std::size_t count = 0;
  std::vector<CollisionEvent> events;
};

/// Unordered agent pairs whose centres come within the mean width at the
/// same frame; each pair is reported once, at its first such frame.
inline CollisionSummary collision_pairs(const Rollout& r, std::span<const double> widths) {
  if (widths.size() != r.agents.size()) throw std::invalid_argument("collision_pairs: one width per agent required");
  CollisionSummary out;
  for (std::size_t a = 0; a < r.agents.size(); ++a)
    for (std::size_t b = a + 1; b < r.agents.size(); ++b) {
      const auto& fa = r.agents[a].frames;
      const auto& fb = r.agents[b].frames;
      const double limit = (widths[a] + widths[b]) / 2.0;
      for (std::size_t t = 0; t < std::min(fa.size(), fb.size()); ++t)
        if (std::hypot(fa[t].cx - fb[t].cx, fa[t].cy - fb[t].cy) <= limit) {
          out.events.push_back({a, b, t});
          break;
        }
    }
  out.count = out.events.size();
  return out;
}

/// Widths read from each track's first frame (constant over a rollout).
inline CollisionSummary collision_pairs(const Rollout& r) {
  std::vector<double> widths;
  for (const auto& t : r.agents) widths.push_back(t.frames.empty() ? 0.0 : t.frames.front().dy);
  return collision_pairs(r, widths);
}

struct KinematicFeatures {
  std::vector<double> linear_speed;             // n
  std::vector<double> linear_accel_magnitude;   // n - 1
  std::vector<double> angular_speed;            // n - 1, signed
  std::vector<double> angular_accel_magnitude;  // n - 2
};

inline KinematicFeatures kinematic_features(std::span<const AgentFrame> frames) {
  if (frames.size() < 3) throw std::invalid_argument("kinematic_features: need at least 3 frames");
  KinematicFeatures k;
  for (const auto& f : frames) k.linear_speed.push_back(std::hypot(f.vx, f.vy));
  for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
    k.linear_accel_magnitude.push_back(std::abs(k.linear_speed[t + 1] - k.linear_speed[t]) / kFramePeriod);
    k.angular_speed.push_back(wrapped_difference(frames[t + 1].heading, frames[t].heading) / kFramePeriod);
  }
  for (std::size_t t = 0; t + 1 < k.angular_speed.size(); ++t)
    k.angular_accel_magnitude.push_back(std::abs(k.angular_speed[t + 1] - k.angular_speed[t]) / kFramePeriod);
  return k;
}

inline std::vector<KinematicFeatures> kinematic_features(const Rollout& r) {
  std::vector<KinematicFeatures> out;
  for (const auto& t : r.agents) out.push_back(kinematic_features(t.frames));
  return out;
}

/// Mean and max of |value| for one feature channel.
struct ChannelSummary {
  double sum = 0.0;
  double max = 0.0;
  std::size_t samples = 0;

  void add(double v) {
    const double m = std::abs(v);
    sum += m;
    max = samples == 0 ? m : std::max(max, m);
    ++samples;
  }
  double mean() const { return samples ? sum / static_cast<double>(samples) : 0.0; }
};

struct RolloutScore {
  std::string variant_id;
  std::vector<std::size_t> branch_path;
  double ade = 0.0;
  CollisionSummary collisions;
};

struct EvaluationReport {
  std::string scenario_id;
  double min_ade = 0.0;
  std::size_t rollout_count = 0;
  std::vector<RolloutScore> rollouts;
  ChannelSummary linear_speed, linear_accel, angular_speed, angular_accel;
};

inline EvaluationReport evaluate(const Scenario& scenario, std::span<const Rollout> rollouts) {
  if (rollouts.empty()) throw ValidationError("evaluate: no rollouts");
  const auto gt = detail::ground_truth_index(scenario);
  EvaluationReport rep;
  rep.scenario_id = scenario.scenario_id;
  rep.rollout_count = rollouts.size();
  rep.min_ade = std::numeric_limits<double>::infinity();
  for (const auto& r : rollouts) {
    if (r.scenario_id != scenario.scenario_id)
      throw ValidationError("rollout scenario '" + r.scenario_id + "' does not match '" + scenario.scenario_id + "'");
    if (r.agents.size() != scenario.agents.size())
      throw ValidationError("rollout has " + std::to_string(r.agents.size()) + " agents, scenario has " +
                            std::to_string(scenario.agents.size()));
    RolloutScore score{r.variant_id, r.branch_path, detail::ade_with_index(r, gt), collision_pairs(r)};
    rep.min_ade = std::min(rep.min_ade, score.ade);
    for (const auto& k : kinematic_features(r)) {
      for (double v : k.linear_speed) rep.linear_speed.add(v);
      for (double v : k.linear_accel_magnitude) rep.linear_accel.add(v);
      for (double v : k.angular_speed) rep.angular_speed.add(v);
      for (double v : k.angular_accel_magnitude) rep.angular_accel.add(v);
    }
    rep.rollouts.push_back(std::move(score));
  }
  return rep;
}

}  // namespace simagents
