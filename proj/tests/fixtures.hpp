#pragma once

#include <atomic>
#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "simagents/simagents.hpp"

namespace simagents::testing {

inline AgentFrame frame_at(double cx, double cy, double heading, double vx, double vy, double dx = 4.5,
                           double dy = 2.0, double dz = 1.5, double cz = 0.0) {
  return {cx, cy, cz, dx, dy, dz, heading, vx, vy, true};
}

/// Constant-velocity history whose final (start) frame sits at (x, y).
inline Agent moving_agent(const std::string& id, double x, double y, double vx, double vy,
                          AgentKind kind = AgentKind::vehicle, double width = 2.0) {
  Agent a;
  a.id = id;
  a.kind = kind;
  const double heading = (vx == 0.0 && vy == 0.0) ? 0.0 : normalize_angle(std::atan2(vy, vx));
  for (std::size_t i = 0; i < kHistoryFrames; ++i) {
    const double back = static_cast<double>(kHistoryFrames - 1 - i) * kFramePeriod;
    a.history.push_back(frame_at(x - vx * back, y - vy * back, heading, vx, vy, 4.5, width));
  }
  return a;
}

/// Ground truth continuing the history at constant velocity.
inline void add_constant_velocity_truth(Agent& a) {
  const AgentFrame& last = a.history.back();
  std::vector<AgentFrame> gt;
  for (std::size_t i = 1; i <= kFutureFrames; ++i) {
    AgentFrame f = last;
    f.cx = last.cx + last.vx * kFramePeriod * static_cast<double>(i);
    f.cy = last.cy + last.vy * kFramePeriod * static_cast<double>(i);
    gt.push_back(f);
  }
  a.ground_truth_future = std::move(gt);
}

inline Scenario make_scenario(std::vector<Agent> agents, std::string id = "test-scenario") {
  Scenario s;
  s.scenario_id = std::move(id);
  s.agents = std::move(agents);
  s.map.push_back({"lane-0", PolylineKind::lane_center, {{-100.0, 0.0, 0.0}, {100.0, 0.0, 0.0}}});
  return s;
}

/// Two vehicles driving at each other along y = 0, meeting at x = 20 after 2 s.
inline Scenario head_on_scenario() {
  return make_scenario({moving_agent("a", 0.0, 0.0, 10.0, 0.0), moving_agent("b", 40.0, 0.0, -10.0, 0.0)},
                       "head-on");
}

/// Three agents on separate lanes, far apart.
inline Scenario three_lane_scenario() {
  return make_scenario({moving_agent("a", 0.0, 0.0, 8.0, 0.0), moving_agent("b", 0.0, 30.0, 6.0, 0.5),
                        moving_agent("c", -20.0, -30.0, 5.0, -0.5, AgentKind::cyclist, 0.8)},
                       "three-lane");
}

/// Forwards to another predictor and counts calls.
class CountingPredictor final : public Predictor {
 public:
  CountingPredictor(PredictorPtr inner, std::string name) : inner_(std::move(inner)), name_(std::move(name)) {}
  PredictionResponse predict(const PredictionRequest& r) override {
    ++calls;
    return inner_->predict(r);
  }
  std::string name() const override { return name_; }
  std::atomic<std::size_t> calls{0};

 private:
  PredictorPtr inner_;
  std::string name_;
};

/// ModeSet with the given probabilities and stationary dummy trajectories.
inline ModeSet mode_set_with(std::size_t agent, const std::array<double, kModesPerAgent>& probs,
                             std::size_t horizon = 1) {
  ModeSet m;
  m.agent_index = agent;
  m.probabilities = probs;
  for (std::size_t k = 0; k < kModesPerAgent; ++k)
    m.trajectories[k] = Trajectory(horizon, TrajectorySample{static_cast<double>(agent) * 100.0, 0.0, 0.0, 0.0});
  return m;
}

/// Random sum-to-one probability vector sorted descending. Values are drawn
/// from a small grid so exact ties in joint probability actually occur.
inline std::array<double, kModesPerAgent> random_probabilities(std::mt19937_64& rng) {
  std::array<double, kModesPerAgent> w{};
  double sum = 0.0;
  for (auto& v : w) {
    v = static_cast<double>(rng() % 5);
    sum += v;
  }
  if (sum == 0.0) {
    w[0] = 1.0;
    sum = 1.0;
  }
  for (auto& v : w) v /= sum;
  std::sort(w.begin(), w.end(), std::greater<>());
  return w;
}

}  // namespace simagents::testing
